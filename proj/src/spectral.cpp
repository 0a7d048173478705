#include "qcorr/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "qcorr/tensor_core.hpp"

namespace qcorr {

namespace {

constexpr double k_input_herm_tol = 1e-8;

void fix_column_phase(Eigen::Ref<Eigen::MatrixXcd> m, long col) {
  long best = 0;
  double best_mag = 0.0;
  for (long i = 0; i < m.rows(); ++i) {
    double mag = std::abs(m(i, col));
    if (mag > best_mag) {
      best_mag = mag;
      best = i;
    }
  }
  if (best_mag == 0.0) return;
  cplx phase = m(best, col) / best_mag;
  m.col(col) *= std::conj(phase);
}

int rank_by_relative_cutoff(const Eigen::VectorXd& values_desc) {
  if (values_desc.size() == 0) return 0;
  double top = values_desc(0);
  if (top <= 0.0) return 0;
  int r = 0;
  for (long i = 0; i < values_desc.size(); ++i)
    if (values_desc(i) > k_rank_rel_tol * top) ++r;
  return r;
}

// Smallest prefix of `mass` (nonincreasing) reaching `threshold`, with the
// shared absolute slack.
int mass_cutoff_rank(const Eigen::VectorXd& mass, double threshold) {
  double acc = 0.0;
  for (long i = 0; i < mass.size(); ++i) {
    acc += mass(i);
    if (acc >= threshold - k_cutoff_slack) return static_cast<int>(i + 1);
  }
  return static_cast<int>(mass.size());
}

// Flattened coefficient matrix of psi across the split, rows indexed by the
// left parties and columns by the right parties (each row-major).
Eigen::MatrixXcd split_matrix(const PureState& psi, const PartySplit& split) {
  split.validate(psi.parties());
  std::vector<int> order = split.left;
  order.insert(order.end(), split.right.begin(), split.right.end());
  PureState perm = permute_parties(psi, order);
  long dl = 1;
  for (int p : split.left) dl *= psi.dims[p];
  long dr = perm.dim() / dl;
  Eigen::MatrixXcd m(dl, dr);
  for (long i = 0; i < dl; ++i) m.row(i) = perm.amp.segment(i * dr, dr).transpose();
  return m;
}

Eigen::VectorXd singular_values(const PureState& psi, const PartySplit& split) {
  Eigen::MatrixXcd m = split_matrix(psi, split);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues();
}

// Orthonormal columns spanning the complement of the span of B's columns.
Eigen::MatrixXcd complement_columns(const Eigen::MatrixXcd& b) {
  long d = b.rows(), r = b.cols();
  if (r >= d) return Eigen::MatrixXcd(d, 0);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(b);
  Eigen::MatrixXcd q = qr.householderQ();
  return q.rightCols(d - r);
}

}  // namespace

EigResult hermitian_eig(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("eigendecomposition: matrix not square");
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > k_input_herm_tol)
    throw std::invalid_argument("eigendecomposition: matrix not Hermitian within tolerance");
  Eigen::MatrixXcd h = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed to converge");

  long n = m.rows();
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd& ev = es.eigenvalues();
  std::stable_sort(order.begin(), order.end(),
                   [&](long a, long b) { return ev(a) > ev(b); });

  EigResult out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (long i = 0; i < n; ++i) {
    out.values(i) = ev(order[i]);
    out.vectors.col(i) = es.eigenvectors().col(order[i]);
    fix_column_phase(out.vectors, i);
  }
  return out;
}

SchmidtDecomposition schmidt(const PureState& psi, const PartySplit& split) {
  Eigen::MatrixXcd m = split_matrix(psi, split);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  int r = rank_by_relative_cutoff(s);
  if (r == 0) throw std::runtime_error("schmidt: zero state");

  SchmidtDecomposition sd;
  sd.split = split;
  for (int p : split.left) sd.left_dims.push_back(psi.dims[p]);
  for (int p : split.right) sd.right_dims.push_back(psi.dims[p]);
  sd.coefficients = s.head(r);
  sd.left = svd.matrixU().leftCols(r);
  sd.right = svd.matrixV().leftCols(r).conjugate();
  // Phase convention lives on the left factors; the right factors absorb the
  // compensating phase so the reconstruction is untouched.
  for (int i = 0; i < r; ++i) {
    long best = 0;
    double best_mag = 0.0;
    for (long row = 0; row < sd.left.rows(); ++row) {
      double mag = std::abs(sd.left(row, i));
      if (mag > best_mag) {
        best_mag = mag;
        best = row;
      }
    }
    if (best_mag == 0.0) continue;
    cplx phase = sd.left(best, i) / best_mag;
    sd.left.col(i) *= std::conj(phase);
    sd.right.col(i) *= phase;
  }
  return sd;
}

PureState schmidt_reconstruct(const SchmidtDecomposition& sd) {
  long dl = sd.left.rows(), dr = sd.right.rows();
  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(dl * dr);
  for (int i = 0; i < sd.coefficients.size(); ++i)
    for (long a = 0; a < dl; ++a)
      amp.segment(a * dr, dr) += sd.coefficients(i) * sd.left(a, i) * sd.right.col(i);
  std::vector<int> dims = sd.left_dims;
  dims.insert(dims.end(), sd.right_dims.begin(), sd.right_dims.end());
  return PureState(std::move(dims), std::move(amp));
}

int schmidt_rank(const PureState& psi, const PartySplit& split) {
  return rank_by_relative_cutoff(singular_values(psi, split));
}

int approx_schmidt_rank(const PureState& psi, const PartySplit& split, double eps) {
  if (eps < 0.0 || eps >= 1.0)
    throw std::invalid_argument("approximate Schmidt rank: eps must lie in [0, 1)");
  Eigen::VectorXd s = singular_values(psi, split);
  return mass_cutoff_rank(s.cwiseProduct(s), (1.0 - eps) * (1.0 - eps));
}

int approx_matrix_rank(const Eigen::MatrixXcd& a, double delta) {
  if (delta < 0.0 || delta >= 1.0)
    throw std::invalid_argument("approximate rank: delta must lie in [0, 1)");
  double fn = a.norm();
  if (std::abs(fn - 1.0) > k_norm_tol)
    throw std::invalid_argument("approximate rank: matrix must have unit Frobenius norm");
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  Eigen::VectorXd s = svd.singularValues();
  return mass_cutoff_rank(s.cwiseProduct(s), 1.0 - delta);
}

std::vector<int> marginal_ranks(const PureState& psi) {
  std::vector<int> ranks;
  if (psi.parties() == 1) {
    ranks.push_back(1);
    return ranks;
  }
  for (int p = 0; p < psi.parties(); ++p) {
    PartySplit split = PartySplit::bipartition(psi.parties(), {p});
    ranks.push_back(schmidt_rank(psi, split));
  }
  return ranks;
}

SupportDecomposition support_decomposition(const PureState& psi) {
  int k = psi.parties();
  SupportDecomposition sd;
  sd.dims = psi.dims;

  for (int p = 0; p < k; ++p) {
    Eigen::MatrixXcd marg;
    if (k == 1) {
      marg = psi.amp * psi.amp.adjoint();
    } else {
      std::vector<int> discard;
      for (int q = 0; q < k; ++q)
        if (q != p) discard.push_back(q);
      marg = partial_trace(psi, discard).mat;
    }
    EigResult eig = hermitian_eig(marg);
    int r = rank_by_relative_cutoff(eig.values);
    sd.ranks.push_back(r);
    sd.bases.push_back(eig.vectors.leftCols(r));
    sd.weights.push_back(eig.values.head(r));
  }

  Eigen::VectorXcd coeff = psi.amp;
  std::vector<int> dims = psi.dims;
  for (int p = 0; p < k; ++p) {
    coeff = apply_on_party(coeff, dims, p, sd.bases[p].adjoint());
    dims[p] = sd.ranks[p];
  }
  sd.coeff = std::move(coeff);
  return sd;
}

PureState support_reconstruct(const SupportDecomposition& sd) {
  Eigen::VectorXcd amp = sd.coeff;
  std::vector<int> dims = sd.ranks;
  for (size_t p = 0; p < sd.bases.size(); ++p) {
    amp = apply_on_party(amp, dims, static_cast<int>(p), sd.bases[p]);
    dims[p] = sd.dims[p];
  }
  return PureState(std::move(dims), std::move(amp));
}

Eigen::MatrixXcd connecting_unitary(const PureState& psi, const PureState& phi,
                                    const PartySplit& split) {
  if (psi.dims != phi.dims)
    throw std::invalid_argument("connecting unitary: states live on different spaces");
  Eigen::MatrixXcd mp = split_matrix(psi, split);
  Eigen::MatrixXcd mq = split_matrix(phi, split);
  Eigen::MatrixXcd rho_p = mp * mp.adjoint();
  Eigen::MatrixXcd rho_q = mq * mq.adjoint();
  if ((rho_p - rho_q).cwiseAbs().maxCoeff() > k_recon_tol)
    throw std::invalid_argument("connecting unitary: states are not locally connected");

  EigResult eig = hermitian_eig(rho_p);
  int r = rank_by_relative_cutoff(eig.values);
  long dr = mp.cols();
  if (r > dr) throw std::runtime_error("connecting unitary: rank exceeds right dimension");

  Eigen::MatrixXcd wp(dr, r), wq(dr, r);
  for (int i = 0; i < r; ++i) {
    double scale = 1.0 / std::sqrt(eig.values(i));
    wp.col(i) = mp.transpose() * eig.vectors.col(i).conjugate() * scale;
    wq.col(i) = mq.transpose() * eig.vectors.col(i).conjugate() * scale;
  }
  Eigen::MatrixXcd cp = complement_columns(wp);
  Eigen::MatrixXcd cq = complement_columns(wq);

  Eigen::MatrixXcd u = wq * wp.adjoint() + cq * cp.adjoint();
  // Nearest unitary, so downstream isometry checks hold exactly.
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
  u = svd.matrixU() * svd.matrixV().adjoint();

  double residual = (mp * u.transpose() - mq).cwiseAbs().maxCoeff();
  if (residual > k_recon_tol)
    throw std::runtime_error("connecting unitary: reconstruction exceeds tolerance");
  return u;
}

PureState uhlmann_partner(const PureState& psi, const PartySplit& split,
                          const DensityOperator& sigma) {
  split.validate(psi.parties());
  std::vector<int> left_dims;
  for (int p : split.left) left_dims.push_back(psi.dims[p]);
  if (sigma.dims != left_dims)
    throw std::invalid_argument("uhlmann partner: operator does not match the left registers");

  Eigen::MatrixXcd x = split_matrix(psi, split);
  long dl = x.rows(), dr = x.cols();
  if (dl > dr)
    throw std::invalid_argument("uhlmann partner: right side too small to purify");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sigma.mat);
  Eigen::MatrixXcd sig_sqrt = es.eigenvectors() *
                              es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                              es.eigenvectors().adjoint();

  Eigen::MatrixXcd z = sig_sqrt * x;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  // y y^dag = sigma and tr(y^dag x) equals the fidelity between sigma and the
  // left marginal of psi.
  Eigen::MatrixXcd y = sig_sqrt * svd.matrixU() * svd.matrixV().adjoint();

  std::vector<int> order = split.left;
  order.insert(order.end(), split.right.begin(), split.right.end());
  std::vector<int> split_dims;
  for (int p : order) split_dims.push_back(psi.dims[p]);
  Eigen::VectorXcd amp(dl * dr);
  for (long i = 0; i < dl; ++i) amp.segment(i * dr, dr) = y.row(i).transpose();

  PureState on_split(split_dims, std::move(amp));
  std::vector<int> inverse(order.size());
  for (size_t j = 0; j < order.size(); ++j) inverse[order[j]] = static_cast<int>(j);
  return permute_parties(on_split, inverse);
}

}  // namespace qcorr
