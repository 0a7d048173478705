#pragma once

#include "qcorr/types.hpp"

namespace qcorr {

// Kronecker products; party lists concatenate left-to-right, so the left
// operand's parties stay slowest in the combined flattening.
PureState tensor_product(const PureState& a, const PureState& b);
DensityOperator tensor_product(const DensityOperator& a, const DensityOperator& b);

// Reorders parties; perm[j] names the old party placed at new position j.
PureState permute_parties(const PureState& psi, const std::vector<int>& perm);

// Traces out the parties listed in `discard` (ascending, proper subset).
// Remaining parties keep their relative order.
DensityOperator partial_trace(const PureState& psi, const std::vector<int>& discard);
DensityOperator partial_trace(const DensityOperator& rho, const std::vector<int>& discard);

// Uhlmann fidelity tr sqrt(sqrt(sigma) rho sqrt(sigma)), clamped to [0, 1].
double fidelity(const DensityOperator& rho, const DensityOperator& sigma);
double fidelity(const DensityOperator& rho, const PureState& psi);
double fidelity(const PureState& psi, const PureState& phi);

// Bhattacharyya overlap sum_x sqrt(p(x) q(x)); agrees with fidelity of the
// embedded diagonal operators.
double classical_fidelity(const ClassicalDistribution& p, const ClassicalDistribution& q);

// Diagonal density operator carrying the distribution.
DensityOperator embed_classical(const ClassicalDistribution& p);

// True when tracing psi down to the `kept` parties (ascending) reproduces rho
// within k_recon_tol entrywise.  Dimension mismatches throw.
bool is_purification(const PureState& psi, const DensityOperator& rho,
                     const std::vector<int>& kept);

// Contracts M (rows x dims[party]) against one axis of a flattened tensor,
// leaving every other axis untouched.  The result is flattened over the same
// dims with dims[party] replaced by M.rows().
Eigen::VectorXcd apply_on_party(const Eigen::VectorXcd& amp, const std::vector<int>& dims,
                                int party, const Eigen::MatrixXcd& M);

}  // namespace qcorr
