#include "qcorr/types.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace qcorr {

namespace {
long g_dimension_cap = 4096;
}

long dimension_cap() { return g_dimension_cap; }

void set_dimension_cap(long cap) {
  if (cap < 1) throw std::invalid_argument("dimension cap must be positive");
  g_dimension_cap = cap;
}

long dim_product(const std::vector<int>& dims) {
  long p = 1;
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("local dimension must be >= 1");
    p *= d;
  }
  return p;
}

long flat_index(const std::vector<int>& dims, const std::vector<int>& multi) {
  if (multi.size() != dims.size())
    throw std::invalid_argument("index arity does not match party count");
  long f = 0;
  for (size_t j = 0; j < dims.size(); ++j) {
    if (multi[j] < 0 || multi[j] >= dims[j])
      throw std::invalid_argument("basis index out of range");
    f = f * dims[j] + multi[j];
  }
  return f;
}

std::vector<int> multi_index(const std::vector<int>& dims, long flat) {
  std::vector<int> m(dims.size());
  for (size_t j = dims.size(); j-- > 0;) {
    m[j] = static_cast<int>(flat % dims[j]);
    flat /= dims[j];
  }
  return m;
}

namespace {

void check_dims(const std::vector<int>& dims, long size, const char* what) {
  if (dims.empty()) throw std::invalid_argument(std::string(what) + ": no parties");
  long p = dim_product(dims);
  if (p > dimension_cap())
    throw std::invalid_argument(std::string(what) + ": total dimension exceeds cap");
  if (p != size)
    throw std::invalid_argument(std::string(what) + ": data size does not match dims");
}

}  // namespace

PureState::PureState(std::vector<int> dims_, Eigen::VectorXcd amp_)
    : dims(std::move(dims_)), amp(std::move(amp_)) {
  check_dims(dims, amp.size(), "pure state");
  double n = amp.norm();
  if (std::abs(n - 1.0) > k_norm_tol)
    throw std::invalid_argument("pure state: norm deviates from 1 beyond tolerance");
  if (n != 1.0) {
    amp /= n;
    renormalized = std::abs(n - 1.0) > 1e-15;
  }
}

DensityOperator::DensityOperator(std::vector<int> dims_, Eigen::MatrixXcd mat_)
    : dims(std::move(dims_)), mat(std::move(mat_)) {
  if (mat.rows() != mat.cols())
    throw std::invalid_argument("density operator: matrix not square");
  check_dims(dims, mat.rows(), "density operator");
  double herm_dev = (mat - mat.adjoint()).cwiseAbs().maxCoeff();
  if (herm_dev > k_herm_tol)
    throw std::invalid_argument("density operator: not Hermitian within tolerance");
  mat = ((mat + mat.adjoint()) / 2.0).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(mat);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("density operator: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < k_eig_floor)
    throw std::invalid_argument("density operator: negative eigenvalue beyond tolerance");
  bool clipped = false;
  for (long i = 0; i < ev.size(); ++i)
    if (ev(i) < 0.0) {
      ev(i) = 0.0;
      clipped = true;
    }
  if (clipped)
    mat = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();

  double tr = mat.trace().real();
  if (std::abs(tr - 1.0) > k_norm_tol)
    throw std::invalid_argument("density operator: trace deviates from 1 beyond tolerance");
  if (tr != 1.0) {
    mat /= tr;
    renormalized = std::abs(tr - 1.0) > 1e-15;
  }
}

ClassicalDistribution::ClassicalDistribution(std::vector<int> dims_, Eigen::VectorXd probs_)
    : dims(std::move(dims_)), probs(std::move(probs_)) {
  check_dims(dims, probs.size(), "distribution");
  if (probs.size() > 0 && probs.minCoeff() < 0.0)
    throw std::invalid_argument("distribution: negative probability");
  double s = probs.sum();
  if (std::abs(s - 1.0) > k_norm_tol)
    throw std::invalid_argument("distribution: probabilities do not sum to 1");
  if (s != 1.0) {
    probs /= s;
    renormalized = std::abs(s - 1.0) > 1e-15;
  }
}

PartySplit PartySplit::bipartition(int parties, std::vector<int> left_) {
  std::sort(left_.begin(), left_.end());
  PartySplit s;
  s.left = std::move(left_);
  for (int i = 0; i < parties; ++i)
    if (!std::binary_search(s.left.begin(), s.left.end(), i)) s.right.push_back(i);
  s.validate(parties);
  return s;
}

void PartySplit::validate(int parties) const {
  if (left.empty() || right.empty())
    throw std::invalid_argument("party split: both sides must be nonempty");
  std::vector<char> seen(parties, 0);
  auto mark = [&](const std::vector<int>& side) {
    for (size_t j = 0; j < side.size(); ++j) {
      int p = side[j];
      if (p < 0 || p >= parties) throw std::invalid_argument("party split: index out of range");
      if (seen[p]) throw std::invalid_argument("party split: duplicate party");
      seen[p] = 1;
      if (j > 0 && side[j - 1] > p)
        throw std::invalid_argument("party split: sides must be ascending");
    }
  };
  mark(left);
  mark(right);
  for (char c : seen)
    if (!c) throw std::invalid_argument("party split: missing party");
}

}  // namespace qcorr
