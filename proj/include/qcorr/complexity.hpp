#pragma once

#include <optional>
#include <string>
#include <vector>

#include <boost/rational.hpp>

#include "qcorr/psd_rank.hpp"
#include "qcorr/spectral.hpp"

namespace qcorr {

// Bounds are carried as exact rationals so certified inequalities never lose
// precision to rounding.
using ratio = boost::rational<long long>;

long long floor_ratio(const ratio& q);
long long ceil_ratio(const ratio& q);
int ceil_log2(long long n);
std::string ratio_string(const ratio& q);

struct ComplexityReport {
  std::string quantity;
  std::optional<long long> exact;  // set when lower == upper and integral
  ratio lower{0};
  ratio upper{0};
  std::vector<std::string> notes;
};

// Total marginal complexity: sum over parties of ceil(log2(marginal rank)).
int marginal_complexity(const PureState& psi);

// Same with per-party approximate ranks: the smallest rank whose retained
// spectral mass reaches (1 - eps)^2.
int marginal_complexity_eps(const PureState& psi, double eps);

// Correlation complexity of a pure state; exact.
ComplexityReport qcorr_pure(const PureState& psi);

// Approximate correlation complexity of a pure state, sandwiched between the
// approximate marginal complexities at eps and eps / parties.
ComplexityReport qcorr_eps_pure_bounds(const PureState& psi, double eps);

// Two-party exact value in per-party qubits: ceil(log2) of the approximate
// Schmidt rank.  Note the unit differs from the sum convention used by the
// other quantities (which counts both sides).
int qcorr_eps_bipartite_pure(const PureState& psi, double eps);

// Bounds on the approximate correlation complexity of psi viewed as a mixed
// target, via the pure-state quantity at rescaled tolerances.
ComplexityReport qcorr_eps_pure_mixed_relation(const PureState& psi, double eps);

// Communication complexity bounds for generating a pure state.
ComplexityReport qcomm_pure_bounds(const PureState& psi);

// Checks the purification-candidate convention: the candidate has one
// register per party, each a multiple of the target's local dimension with
// the visible subsystem as the slower factor, and tracing the ancillary
// factors leaves the target.  Violations raise purification_error.
void check_purification_candidate(const DensityOperator& rho, const PureState& candidate);

struct MixedCorrBounds {
  ComplexityReport qcorr;     // the state itself
  ComplexityReport purified;  // minimum over purifications
  int witness_index;          // index into `purifications`, -1 = constructed default
  PureState witness;          // purification achieving the reported upper bound
};

// Correlation-complexity bounds for a mixed state.  Each entry of
// `purifications` must reduce to rho when, within every party, everything
// beyond the visible (slowest) subsystem is traced out; otherwise a
// purification_error is thrown.  A default purification (ancilla appended to
// the last party) is always considered as well.
MixedCorrBounds qcorr_mixed_bounds(const DensityOperator& rho,
                                   const std::vector<PureState>& purifications);

struct MixedCommBounds {
  ComplexityReport qcomm;
  int witness_index;
  PureState witness;
};

// Communication-complexity bounds for generating a mixed state, taken over
// the supplied purifications plus the constructed default.  The upper bound
// is certified; the lower bound only reflects the candidates seen.
MixedCommBounds qcomm_mixed_bounds(const DensityOperator& rho,
                                   const std::vector<PureState>& purifications);

// True when integer values consistent with both reports and with the mutual
// correlation/communication inequalities exist.
bool comm_corr_consistency(int parties, const ComplexityReport& corr,
                           const ComplexityReport& comm);

struct ClassicalCorrBounds {
  ComplexityReport report;
  int prank_lower;             // certified
  RankUpperResult prank_upper; // constructive
};

// Correlation-complexity bounds for sampling a classical distribution, via
// its positive-semidefinite factorization rank.  Exact characterization for
// two parties; a sandwich for three or more.
ClassicalCorrBounds qcorr_classical_bounds(const ClassicalDistribution& p,
                                           const FitOptions& opts = {});

struct ClassicalApproxBounds {
  ComplexityReport report;
  ApproxRankUpperResult upper;
};

// Two-party approximate variant; the upper bound comes from a fitted
// factorization of a nearby distribution.
ClassicalApproxBounds qcorr_eps_classical(const ClassicalDistribution& p, double eps,
                                          const FitOptions& opts = {});

struct ProductCover {
  std::vector<std::vector<int>> kept;  // per party, ascending indices
  long long product;                   // product of kept-set sizes
  double mass;                         // probability retained
  int bits;                            // sum of ceil(log2 |kept|)
};

// Smallest product of per-party index sets whose rectangle retains mass at
// least 1 - eps.  Greedy by default; `brute` searches exhaustively and
// requires a small alphabet.
ProductCover min_product_cover(const PureState& psi, double eps, bool brute = false);

struct GeneralFactors {
  // Per left symbol x: a (left ancilla dim) x r matrix; likewise per right
  // symbol.  Column i carries the i-th Schmidt component weighted by the
  // fourth root of its probability.
  std::vector<Eigen::MatrixXcd> left;
  std::vector<Eigen::MatrixXcd> right;
};

// Reads the factors off a four-register purification [left ancilla, left,
// right, right ancilla] of a two-party state.
GeneralFactors extract_factors(const PureState& psi);

struct CharacterizationCheck {
  double reconstruction_dev;  // max deviation of the rebuilt operator
  double orthogonality_dev;   // max cross-column overlap
  int cutoff_rank;            // columns needed for mass (1 - eps)^2
  bool ok;
};

// Checks that the factors reconstruct sigma, that their columns are
// orthogonal across symbols, and reports the mass cutoff at eps.
CharacterizationCheck verify_general_characterization(const DensityOperator& sigma,
                                                      const GeneralFactors& factors,
                                                      double eps);

}  // namespace qcorr
