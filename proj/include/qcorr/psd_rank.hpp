#pragma once

#include "qcorr/types.hpp"

namespace qcorr {

// Entrywise factorization model for a nonnegative tensor over a product
// alphabet: P(x_1..x_k) = sum_{i,j} prod_t factors[t][x_t](i, j).
// Every factor matrix is r x r Hermitian positive semidefinite.
struct PsdFactorization {
  int r = 0;
  std::vector<std::vector<Eigen::MatrixXcd>> factors;  // [party][symbol]

  int parties() const { return static_cast<int>(factors.size()); }
  std::vector<int> symbol_counts() const;
};

// Throws unless the factorization is structurally sound and every factor is
// Hermitian PSD within the shared tolerances.
void validate(const PsdFactorization& f);

struct FitOptions {
  int restarts = 16;
  int max_iters = 500;           // optimization step budget per restart
  unsigned long long rng_seed = 0;
  double convergence_tol = 1e-9;  // stop on relative residual improvement below this
  double residual_target = 1e-7;  // residual at or below this counts as an exact fit
};

// Flattened tensor realized by the factorization (row-major, party 0 slowest).
Eigen::VectorXd evaluate(const PsdFactorization& f);

// Frobenius distance between the realized tensor and the target distribution.
double residual(const PsdFactorization& f, const ClassicalDistribution& p);

// Realized tensor with negative floating-point dust clipped, renormalized to
// a distribution.
ClassicalDistribution normalize_evaluation(const PsdFactorization& f);

// Exact factorization of width prod_{t != pivot} |X_t| that always exists;
// the pivot defaults to the party with the largest alphabet (lowest index on
// ties), which minimizes the width.
PsdFactorization diagonal_factorization(const ClassicalDistribution& p);

struct FitResult {
  PsdFactorization factorization;
  double residual = 0.0;
  int restart_index = 0;  // restart that produced the kept factorization
};

// Best rank-r fit over `opts.restarts` deterministic restarts: alternating
// least-squares sweeps with eigenvalue clipping onto the PSD cone, then a
// Levenberg-Marquardt polish on Gram factors (which keeps iterates inside the
// cone by construction).  Restarts are ranked by residual, ties by index.
FitResult fit(const ClassicalDistribution& p, int r, const FitOptions& opts = {});

struct RankUpperResult {
  int r = 0;
  PsdFactorization factorization;  // witness achieving `residual`
  double residual = 0.0;
};

// Smallest width whose fit reaches opts.residual_target, falling back to the
// always-exact diagonal construction.  Heuristic: a failed fit at some width
// never certifies that no factorization of that width exists.
RankUpperResult psd_rank_upper(const ClassicalDistribution& p, const FitOptions& opts = {});

// max over bipartitions of ceil(sqrt(rank)) of the flattened tensor; a
// certified lower bound, always >= 1.
int psd_rank_lower(const ClassicalDistribution& p);

struct ApproxRankUpperResult {
  int r = 0;
  PsdFactorization factorization;
  ClassicalDistribution witness;  // normalized realization of `factorization`
  double fidelity = 0.0;          // classical fidelity between target and witness
};

// Smallest width found whose fitted, normalized realization stays within
// classical fidelity 1 - eps of the target.  Heuristic upper bound.
ApproxRankUpperResult approx_psd_rank_upper(const ClassicalDistribution& p, double eps,
                                            const FitOptions& opts = {});

}  // namespace qcorr
