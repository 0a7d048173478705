#pragma once

#include "qcorr/types.hpp"

namespace qcorr {

// Eigendecomposition of a Hermitian matrix, eigenvalues descending (ties keep
// the solver's order).  Each eigenvector's largest-magnitude entry is made
// real positive so repeated runs agree column for column.
struct EigResult {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;  // columns aligned with `values`
};
EigResult hermitian_eig(const Eigen::MatrixXcd& m);

// Schmidt decomposition across a bipartition of the parties.
// psi == sum_i coefficients(i) * left.col(i) (x) right.col(i), where the left
// and right factors are flattened row-major over the split's own party lists.
struct SchmidtDecomposition {
  PartySplit split;
  std::vector<int> left_dims, right_dims;
  Eigen::VectorXd coefficients;  // positive, nonincreasing
  Eigen::MatrixXcd left;         // D_left x r, orthonormal columns
  Eigen::MatrixXcd right;        // D_right x r, orthonormal columns
};
SchmidtDecomposition schmidt(const PureState& psi, const PartySplit& split);

// Rebuilds the state (on the split's party order: left parties then right).
PureState schmidt_reconstruct(const SchmidtDecomposition& sd);

// Number of Schmidt coefficients above the relative cutoff
// k_rank_rel_tol * sigma_max.
int schmidt_rank(const PureState& psi, const PartySplit& split);

// Smallest r whose leading squared coefficients reach (1 - eps)^2; this is
// the rank of the best pure approximation at fidelity 1 - eps.
int approx_schmidt_rank(const PureState& psi, const PartySplit& split, double eps);

// Smallest r with sum_{i<=r} sigma_i^2 >= 1 - delta for a matrix with unit
// Frobenius norm (within k_norm_tol; anything else throws).
int approx_matrix_rank(const Eigen::MatrixXcd& a, double delta);

// Numeric rank of each single-party marginal.
std::vector<int> marginal_ranks(const PureState& psi);

// Expansion of psi over the eigenbases of its marginals restricted to their
// supports: psi = sum_a coeff(a) (x)_p bases[p].col(a_p).
struct SupportDecomposition {
  std::vector<int> dims;                  // original local dimensions
  std::vector<int> ranks;                 // marginal ranks r_p
  std::vector<Eigen::MatrixXcd> bases;    // d_p x r_p, orthonormal columns
  std::vector<Eigen::VectorXd> weights;   // marginal eigenvalues, descending
  Eigen::VectorXcd coeff;                 // flattened row-major over `ranks`
};
SupportDecomposition support_decomposition(const PureState& psi);
PureState support_reconstruct(const SupportDecomposition& sd);

// Unitary U on the right side of the split with (I (x) U) psi = phi, for two
// states whose left marginals agree within k_recon_tol.  U is indexed by the
// flattened right space (split.right in ascending order).
Eigen::MatrixXcd connecting_unitary(const PureState& psi, const PureState& phi,
                                    const PartySplit& split);

// Purification of sigma on the same registers as psi whose overlap with psi
// attains fidelity(partial_trace(psi, split.right), sigma).  Requires the
// right side to be at least as large as the left.
PureState uhlmann_partner(const PureState& psi, const PartySplit& split,
                          const DensityOperator& sigma);

}  // namespace qcorr
