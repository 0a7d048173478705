#include "qcorr/tensor_core.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace qcorr {

namespace {

std::vector<int> concat_dims(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> d = a;
  d.insert(d.end(), b.begin(), b.end());
  return d;
}

std::vector<long> strides_of(const std::vector<int>& dims) {
  std::vector<long> s(dims.size());
  long acc = 1;
  for (size_t j = dims.size(); j-- > 0;) {
    s[j] = acc;
    acc *= dims[j];
  }
  return s;
}

// Flat offsets of every multi-index over the sub-axes `parties`, enumerated
// row-major (last listed party fastest), using the strides of the full space.
std::vector<long> axis_offsets(const std::vector<int>& dims, const std::vector<long>& strides,
                               const std::vector<int>& parties) {
  long n = 1;
  for (int p : parties) n *= dims[p];
  std::vector<long> off(n, 0);
  std::vector<long> local_strides(parties.size());
  long acc = 1;
  for (size_t j = parties.size(); j-- > 0;) {
    local_strides[j] = acc;
    acc *= dims[parties[j]];
  }
  for (long i = 0; i < n; ++i) {
    long rem = i;
    for (size_t j = 0; j < parties.size(); ++j) {
      off[i] += (rem / local_strides[j]) * strides[parties[j]];
      rem %= local_strides[j];
    }
  }
  return off;
}

void check_discard(const std::vector<int>& discard, int parties) {
  if (discard.empty()) throw std::invalid_argument("partial trace: nothing to discard");
  if (static_cast<int>(discard.size()) >= parties)
    throw std::invalid_argument("partial trace: cannot discard every party");
  for (size_t j = 0; j < discard.size(); ++j) {
    if (discard[j] < 0 || discard[j] >= parties)
      throw std::invalid_argument("partial trace: party index out of range");
    if (j > 0 && discard[j - 1] >= discard[j])
      throw std::invalid_argument("partial trace: discard list must be strictly ascending");
  }
}

}  // namespace

PureState tensor_product(const PureState& a, const PureState& b) {
  Eigen::VectorXcd amp(a.dim() * b.dim());
  for (long i = 0; i < a.dim(); ++i)
    amp.segment(i * b.dim(), b.dim()) = a.amp(i) * b.amp;
  return PureState(concat_dims(a.dims, b.dims), std::move(amp));
}

DensityOperator tensor_product(const DensityOperator& a, const DensityOperator& b) {
  long da = a.dim(), db = b.dim();
  Eigen::MatrixXcd m(da * db, da * db);
  for (long i = 0; i < da; ++i)
    for (long j = 0; j < da; ++j)
      m.block(i * db, j * db, db, db) = a.mat(i, j) * b.mat;
  return DensityOperator(concat_dims(a.dims, b.dims), std::move(m));
}

PureState permute_parties(const PureState& psi, const std::vector<int>& perm) {
  int k = psi.parties();
  if (static_cast<int>(perm.size()) != k)
    throw std::invalid_argument("permutation arity does not match party count");
  std::vector<char> seen(k, 0);
  std::vector<int> new_dims(k);
  for (int j = 0; j < k; ++j) {
    if (perm[j] < 0 || perm[j] >= k || seen[perm[j]])
      throw std::invalid_argument("invalid party permutation");
    seen[perm[j]] = 1;
    new_dims[j] = psi.dims[perm[j]];
  }
  auto old_strides = strides_of(psi.dims);
  auto offsets = axis_offsets(psi.dims, old_strides, perm);
  Eigen::VectorXcd amp(psi.dim());
  for (long i = 0; i < psi.dim(); ++i) amp(i) = psi.amp(offsets[i]);
  return PureState(std::move(new_dims), std::move(amp));
}

DensityOperator partial_trace(const PureState& psi, const std::vector<int>& discard) {
  check_discard(discard, psi.parties());
  std::vector<int> keep;
  for (int p = 0; p < psi.parties(); ++p)
    if (!std::binary_search(discard.begin(), discard.end(), p)) keep.push_back(p);

  auto strides = strides_of(psi.dims);
  auto keep_off = axis_offsets(psi.dims, strides, keep);
  auto disc_off = axis_offsets(psi.dims, strides, discard);
  long dk = static_cast<long>(keep_off.size());
  long dd = static_cast<long>(disc_off.size());

  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dk, dk);
  Eigen::MatrixXcd rows(dk, dd);
  for (long i = 0; i < dk; ++i)
    for (long e = 0; e < dd; ++e) rows(i, e) = psi.amp(keep_off[i] + disc_off[e]);
  m = rows * rows.adjoint();

  std::vector<int> kept_dims;
  for (int p : keep) kept_dims.push_back(psi.dims[p]);
  return DensityOperator(std::move(kept_dims), std::move(m));
}

DensityOperator partial_trace(const DensityOperator& rho, const std::vector<int>& discard) {
  check_discard(discard, rho.parties());
  std::vector<int> keep;
  for (int p = 0; p < rho.parties(); ++p)
    if (!std::binary_search(discard.begin(), discard.end(), p)) keep.push_back(p);

  auto strides = strides_of(rho.dims);
  auto keep_off = axis_offsets(rho.dims, strides, keep);
  auto disc_off = axis_offsets(rho.dims, strides, discard);
  long dk = static_cast<long>(keep_off.size());
  long dd = static_cast<long>(disc_off.size());

  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dk, dk);
  for (long i = 0; i < dk; ++i)
    for (long j = 0; j < dk; ++j) {
      cplx s = 0.0;
      for (long e = 0; e < dd; ++e)
        s += rho.mat(keep_off[i] + disc_off[e], keep_off[j] + disc_off[e]);
      m(i, j) = s;
    }

  std::vector<int> kept_dims;
  for (int p : keep) kept_dims.push_back(rho.dims[p]);
  return DensityOperator(std::move(kept_dims), std::move(m));
}

namespace {

void check_same_dims(const std::vector<int>& a, const std::vector<int>& b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": operands live on different spaces");
}

Eigen::MatrixXcd psd_sqrt(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

double fidelity(const DensityOperator& rho, const DensityOperator& sigma) {
  check_same_dims(rho.dims, sigma.dims, "fidelity");
  Eigen::MatrixXcd rs = psd_sqrt(sigma.mat);
  Eigen::MatrixXcd inner = rs * rho.mat * rs;
  inner = ((inner + inner.adjoint()) / 2.0).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(inner);
  double f = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(f, 0.0, 1.0);
}

double fidelity(const DensityOperator& rho, const PureState& psi) {
  check_same_dims(rho.dims, psi.dims, "fidelity");
  double v = (psi.amp.adjoint() * rho.mat * psi.amp)(0, 0).real();
  return std::clamp(std::sqrt(std::max(v, 0.0)), 0.0, 1.0);
}

double fidelity(const PureState& psi, const PureState& phi) {
  check_same_dims(psi.dims, phi.dims, "fidelity");
  return std::clamp(std::abs(psi.amp.dot(phi.amp)), 0.0, 1.0);
}

double classical_fidelity(const ClassicalDistribution& p, const ClassicalDistribution& q) {
  check_same_dims(p.dims, q.dims, "classical fidelity");
  double f = 0.0;
  for (long i = 0; i < p.dim(); ++i) f += std::sqrt(p.probs(i) * q.probs(i));
  return std::clamp(f, 0.0, 1.0);
}

DensityOperator embed_classical(const ClassicalDistribution& p) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(p.dim(), p.dim());
  for (long i = 0; i < p.dim(); ++i) m(i, i) = p.probs(i);
  return DensityOperator(p.dims, std::move(m));
}

Eigen::VectorXcd apply_on_party(const Eigen::VectorXcd& amp, const std::vector<int>& dims,
                                int party, const Eigen::MatrixXcd& M) {
  if (party < 0 || party >= static_cast<int>(dims.size()))
    throw std::invalid_argument("axis contraction: party out of range");
  long d_in = dims[party];
  if (M.cols() != d_in)
    throw std::invalid_argument("axis contraction: matrix does not match local dimension");
  long pre = 1, post = 1;
  for (int j = 0; j < party; ++j) pre *= dims[j];
  for (size_t j = party + 1; j < dims.size(); ++j) post *= dims[j];
  long d_out = M.rows();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(pre * d_out * post);
  for (long a = 0; a < pre; ++a)
    for (long i = 0; i < d_out; ++i)
      for (long j = 0; j < d_in; ++j) {
        if (M(i, j) == cplx(0.0, 0.0)) continue;
        out.segment((a * d_out + i) * post, post) +=
            M(i, j) * amp.segment((a * d_in + j) * post, post);
      }
  return out;
}

bool is_purification(const PureState& psi, const DensityOperator& rho,
                     const std::vector<int>& kept) {
  if (kept.size() != rho.dims.size())
    throw std::invalid_argument("purification check: kept list does not match operator arity");
  for (size_t j = 0; j < kept.size(); ++j) {
    if (kept[j] < 0 || kept[j] >= psi.parties())
      throw std::invalid_argument("purification check: kept party out of range");
    if (j > 0 && kept[j - 1] >= kept[j])
      throw std::invalid_argument("purification check: kept list must be strictly ascending");
    if (psi.dims[kept[j]] != rho.dims[j])
      throw std::invalid_argument("purification check: kept dimensions do not match operator");
  }
  if (kept.size() == psi.dims.size()) {
    Eigen::MatrixXcd outer = psi.amp * psi.amp.adjoint();
    return (outer - rho.mat).cwiseAbs().maxCoeff() <= k_recon_tol;
  }
  std::vector<int> discard;
  for (int p = 0; p < psi.parties(); ++p)
    if (!std::binary_search(kept.begin(), kept.end(), p)) discard.push_back(p);
  DensityOperator traced = partial_trace(psi, discard);
  return (traced.mat - rho.mat).cwiseAbs().maxCoeff() <= k_recon_tol;
}

}  // namespace qcorr
