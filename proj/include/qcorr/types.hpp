#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qcorr {

using cplx = std::complex<double>;

// Tolerances shared across the toolkit.  States and operators are validated
// against these on construction; operations assume they hold afterwards.
inline constexpr double k_norm_tol = 1e-8;    // norm/trace auto-renormalization window
inline constexpr double k_herm_tol = 1e-10;   // max entrywise |M - M^dag|
inline constexpr double k_eig_floor = -1e-10; // most negative admissible eigenvalue
inline constexpr double k_rank_rel_tol = 1e-10;  // relative cutoff for numeric ranks
inline constexpr double k_cutoff_slack = 1e-12;  // absolute slack in mass-cutoff ranks
inline constexpr double k_recon_tol = 1e-8;   // max deviation for reconstructions

// Default cap on the flattened dimension of any state accepted by the
// constructors.  Guards against accidental exponential blowups.
long dimension_cap();
void set_dimension_cap(long cap);

// Thrown when a state fails a purification check it was claimed to satisfy.
struct purification_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a generation protocol violates its bookkeeping rules.
struct protocol_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Row-major flattening with party 0 slowest; this fixes the computational
// basis order for every vector and matrix in the toolkit.
long dim_product(const std::vector<int>& dims);
long flat_index(const std::vector<int>& dims, const std::vector<int>& multi);
std::vector<int> multi_index(const std::vector<int>& dims, long flat);

// Multipartite pure state held as a flattened amplitude vector.
//
// Construction renormalizes inputs whose norm deviates from 1 by at most
// k_norm_tol (setting `renormalized`); larger deviations throw.
struct PureState {
  std::vector<int> dims;   // per-party local dimensions
  Eigen::VectorXcd amp;    // flattened amplitudes, unit norm
  bool renormalized = false;

  PureState(std::vector<int> dims_, Eigen::VectorXcd amp_);

  int parties() const { return static_cast<int>(dims.size()); }
  long dim() const { return amp.size(); }
};

// Multipartite density operator.
//
// Construction symmetrizes M to (M + M^dag)/2 (rejecting inputs that deviate
// from Hermitian by more than k_herm_tol), clips eigenvalues in
// [k_eig_floor, 0) to zero so square roots stay well defined, rejects
// anything more negative, and renormalizes traces within k_norm_tol of 1.
struct DensityOperator {
  std::vector<int> dims;
  Eigen::MatrixXcd mat;    // Hermitian, positive semidefinite, unit trace
  bool renormalized = false;

  DensityOperator(std::vector<int> dims_, Eigen::MatrixXcd mat_);

  int parties() const { return static_cast<int>(dims.size()); }
  long dim() const { return mat.rows(); }
};

// Classical joint distribution over a product alphabet, flattened like the
// states above.  Entries must be nonnegative; sums within k_norm_tol of 1
// are renormalized, larger deviations throw.
struct ClassicalDistribution {
  std::vector<int> dims;
  Eigen::VectorXd probs;
  bool renormalized = false;

  ClassicalDistribution(std::vector<int> dims_, Eigen::VectorXd probs_);

  int parties() const { return static_cast<int>(dims.size()); }
  long dim() const { return probs.size(); }
};

// Ordered bipartition of the party set {0, ..., k-1}.  Both sides are
// ascending and nonempty and together cover every party exactly once.
struct PartySplit {
  std::vector<int> left;
  std::vector<int> right;

  // Builds the split (left | complement) and validates it against k parties.
  static PartySplit bipartition(int parties, std::vector<int> left_);

  void validate(int parties) const;
};

}  // namespace qcorr
