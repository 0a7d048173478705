#include "qcorr/psd_rank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "qcorr/tensor_core.hpp"

namespace qcorr {

namespace {

// Deterministic stream of standard normals; avoids std::normal_distribution,
// whose output sequence is implementation-defined.
struct NormalRng {
  uint64_t state;
  bool have_spare = false;
  double spare = 0.0;

  explicit NormalRng(uint64_t seed) : state(seed) {}

  uint64_t next_u64() {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double normal() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double mag = std::sqrt(-2.0 * std::log(u1));
    spare = mag * std::sin(2.0 * M_PI * u2);
    have_spare = true;
    return mag * std::cos(2.0 * M_PI * u2);
  }
};

long tensor_size(const std::vector<int>& counts) {
  long n = 1;
  for (int c : counts) n *= c;
  return n;
}

// Row-major odometer over a product alphabet.
bool advance(std::vector<int>& idx, const std::vector<int>& counts) {
  for (size_t j = counts.size(); j-- > 0;) {
    if (++idx[j] < counts[j]) return true;
    idx[j] = 0;
  }
  return false;
}

Eigen::VectorXd eval_unchecked(const PsdFactorization& f) {
  std::vector<int> counts = f.symbol_counts();
  long n = tensor_size(counts);
  int k = f.parties();
  Eigen::VectorXd out(n);
  std::vector<int> idx(k, 0);
  long flat = 0;
  do {
    Eigen::MatrixXcd h = f.factors[0][idx[0]];
    for (int t = 1; t < k; ++t) h = h.cwiseProduct(f.factors[t][idx[t]]);
    out(flat++) = h.sum().real();
  } while (advance(idx, counts));
  return out;
}

Eigen::MatrixXcd clip_psd(const Eigen::MatrixXcd& c) {
  Eigen::MatrixXcd h = (c + c.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
         es.eigenvectors().adjoint();
}

// Real parameterization of Hermitian matrices: diagonal first, then
// (sqrt2 Re, sqrt2 Im) per strict upper-triangle entry.  It is an isometry
// for the Frobenius norm.
Eigen::VectorXd herm_params(const Eigen::MatrixXcd& c) {
  int r = static_cast<int>(c.rows());
  Eigen::VectorXd v(r * r);
  int at = 0;
  for (int d = 0; d < r; ++d) v(at++) = c(d, d).real();
  const double s2 = std::sqrt(2.0);
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      v(at++) = s2 * c(i, j).real();
      v(at++) = s2 * c(i, j).imag();
    }
  return v;
}

Eigen::MatrixXcd herm_from_params(const Eigen::VectorXd& v, int r) {
  Eigen::MatrixXcd c(r, r);
  int at = 0;
  for (int d = 0; d < r; ++d) c(d, d) = v(at++);
  const double s2 = std::sqrt(2.0);
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      cplx z(v(at) / s2, v(at + 1) / s2);
      at += 2;
      c(i, j) = z;
      c(j, i) = std::conj(z);
    }
  return c;
}

// Row vector w with dot(w, herm_params(C)) = sum_{ij} C(i,j) W(i,j) for
// Hermitian C and W.
Eigen::VectorXd design_row(const Eigen::MatrixXcd& w) {
  Eigen::VectorXd v = herm_params(w);
  int r = static_cast<int>(w.rows());
  // Entrywise sums conjugate the W imaginary parts relative to the inner
  // product, so flip them.
  for (int at = r + 1; at < v.size(); at += 2) v(at) = -v(at);
  return v;
}

struct Problem {
  const ClassicalDistribution& p;
  std::vector<int> counts;
  int k;
  long n;
};

// One sweep of damped least squares per party with eigenvalue clipping.
void als_sweep(const Problem& prob, std::vector<std::vector<Eigen::MatrixXcd>>& factors, int r) {
  int rr = r * r;
  for (int t = 0; t < prob.k; ++t) {
    std::vector<int> other_counts;
    std::vector<int> other_parties;
    for (int s = 0; s < prob.k; ++s)
      if (s != t) {
        other_counts.push_back(prob.counts[s]);
        other_parties.push_back(s);
      }
    long rows = tensor_size(other_counts);

    // Offsets of the other parties' symbols inside the flattened target.
    std::vector<long> strides(prob.k);
    long acc = 1;
    for (int s = prob.k; s-- > 0;) {
      strides[s] = acc;
      acc *= prob.counts[s];
    }
    Eigen::MatrixXd a(rows, rr);
    std::vector<long> row_offset(rows);
    std::vector<int> idx(other_parties.size(), 0);
    long row = 0;
    if (rows == 1) {
      a.row(0) = design_row(Eigen::MatrixXcd::Ones(r, r)).transpose();
      row_offset[0] = 0;
    } else {
      do {
        Eigen::MatrixXcd w = Eigen::MatrixXcd::Ones(r, r);
        long off = 0;
        for (size_t j = 0; j < other_parties.size(); ++j) {
          w = w.cwiseProduct(factors[other_parties[j]][idx[j]]);
          off += idx[j] * strides[other_parties[j]];
        }
        a.row(row) = design_row(w).transpose();
        row_offset[row] = off;
        ++row;
      } while (advance(idx, other_counts));
    }

    // Proximal damping keeps the update bounded when the design is nearly
    // singular; the polish phase removes the bias it introduces.
    double mu = 1e-9 * (a.squaredNorm() + 1.0);
    double smu = std::sqrt(mu);
    Eigen::MatrixXd aug(rows + rr, rr);
    aug.topRows(rows) = a;
    aug.bottomRows(rr) = smu * Eigen::MatrixXd::Identity(rr, rr);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(aug);

    for (int x = 0; x < prob.counts[t]; ++x) {
      Eigen::VectorXd rhs(rows + rr);
      for (long i = 0; i < rows; ++i)
        rhs(i) = prob.p.probs(row_offset[i] + static_cast<long>(x) * strides[t]);
      rhs.tail(rr) = smu * herm_params(factors[t][x]);
      Eigen::VectorXd c = cod.solve(rhs);
      factors[t][x] = clip_psd(herm_from_params(c, r));
    }
  }
}

// Gram parameterization used by the polish phase: factors[t][x] = G G^dag.
struct GramPoint {
  std::vector<std::vector<Eigen::MatrixXcd>> g;

  int param_count(int r) const {
    int n = 0;
    for (const auto& fs : g) n += static_cast<int>(fs.size()) * 2 * r * r;
    return n;
  }
};

std::vector<std::vector<Eigen::MatrixXcd>> gram_realize(const GramPoint& pt) {
  std::vector<std::vector<Eigen::MatrixXcd>> out(pt.g.size());
  for (size_t t = 0; t < pt.g.size(); ++t)
    for (const auto& gm : pt.g[t]) out[t].push_back(gm * gm.adjoint());
  return out;
}

Eigen::VectorXd gram_residual(const Problem& prob, const GramPoint& pt) {
  PsdFactorization f;
  f.r = static_cast<int>(pt.g[0][0].rows());
  f.factors = gram_realize(pt);
  return eval_unchecked(f) - prob.p.probs;
}

void gram_step(GramPoint& pt, const Eigen::VectorXd& delta, int r) {
  int at = 0;
  int rr = r * r;
  for (auto& fs : pt.g)
    for (auto& gm : fs) {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
          gm(i, j) += cplx(delta(at + i * r + j), delta(at + rr + i * r + j));
        }
      at += 2 * rr;
    }
}

// Jacobian of the realized tensor with respect to the Gram parameters
// (Re G then Im G per symbol, parties in order, symbols in order).
Eigen::MatrixXd gram_jacobian(const Problem& prob, const GramPoint& pt, int r) {
  int rr = r * r;
  int n_params = pt.param_count(r);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(prob.n, n_params);
  auto factors = gram_realize(pt);

  std::vector<int> base(prob.k + 1, 0);
  base[0] = 0;
  for (int t = 0; t < prob.k; ++t) base[t + 1] = base[t] + prob.counts[t] * 2 * rr;

  std::vector<int> idx(prob.k, 0);
  long row = 0;
  do {
    for (int t = 0; t < prob.k; ++t) {
      Eigen::MatrixXcd w = Eigen::MatrixXcd::Ones(r, r);
      for (int s = 0; s < prob.k; ++s)
        if (s != t) w = w.cwiseProduct(factors[s][idx[s]]);
      Eigen::MatrixXcd m = w * pt.g[t][idx[t]].conjugate();
      int off = base[t] + idx[t] * 2 * rr;
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
          jac(row, off + i * r + j) = 2.0 * m(i, j).real();
          jac(row, off + rr + i * r + j) = -2.0 * m(i, j).imag();
        }
    }
    ++row;
  } while (advance(idx, prob.counts));
  return jac;
}

// Levenberg-Marquardt on the Gram parameterization.  Returns the iterations
// consumed; `pt` holds the best point found.
int gram_polish(const Problem& prob, GramPoint& pt, int r, int budget, double conv_tol) {
  Eigen::VectorXd res = gram_residual(prob, pt);
  double cost = res.squaredNorm();
  double lambda = 1e-3;
  int used = 0;
  int n_params = pt.param_count(r);

  while (used < budget && cost > 1e-30) {
    Eigen::MatrixXd jac = gram_jacobian(prob, pt, r);
    bool accepted = false;
    while (used < budget) {
      ++used;
      Eigen::VectorXd delta;
      if (n_params <= prob.n) {
        Eigen::MatrixXd h = jac.transpose() * jac;
        h.diagonal().array() += lambda;
        delta = h.ldlt().solve(-jac.transpose() * res);
      } else {
        Eigen::MatrixXd kmat = jac * jac.transpose();
        kmat.diagonal().array() += lambda;
        delta = -jac.transpose() * kmat.ldlt().solve(res);
      }
      GramPoint trial = pt;
      gram_step(trial, delta, r);
      Eigen::VectorXd trial_res = gram_residual(prob, trial);
      double trial_cost = trial_res.squaredNorm();
      if (trial_cost < cost) {
        double improvement = std::sqrt(cost) - std::sqrt(trial_cost);
        pt = std::move(trial);
        res = std::move(trial_res);
        cost = trial_cost;
        lambda = std::max(lambda * 0.3, 1e-14);
        accepted = true;
        if (improvement < conv_tol * std::max(std::sqrt(cost), 1e-30)) return used;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e14) return used;
    }
    if (!accepted) break;
  }
  return used;
}

GramPoint gram_from_factors(const std::vector<std::vector<Eigen::MatrixXcd>>& factors) {
  GramPoint pt;
  pt.g.resize(factors.size());
  for (size_t t = 0; t < factors.size(); ++t)
    for (const auto& c : factors[t]) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(c);
      pt.g[t].push_back(es.eigenvectors() *
                        es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                        es.eigenvectors().adjoint());
    }
  return pt;
}

}  // namespace

std::vector<int> PsdFactorization::symbol_counts() const {
  std::vector<int> counts;
  for (const auto& fs : factors) counts.push_back(static_cast<int>(fs.size()));
  return counts;
}

void validate(const PsdFactorization& f) {
  if (f.r < 1) throw std::invalid_argument("psd factorization: width must be positive");
  if (f.factors.empty()) throw std::invalid_argument("psd factorization: no parties");
  for (const auto& fs : f.factors) {
    if (fs.empty()) throw std::invalid_argument("psd factorization: empty alphabet");
    for (const auto& c : fs) {
      if (c.rows() != f.r || c.cols() != f.r)
        throw std::invalid_argument("psd factorization: factor has wrong shape");
      if ((c - c.adjoint()).cwiseAbs().maxCoeff() > k_herm_tol)
        throw std::invalid_argument("psd factorization: factor not Hermitian");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(c);
      if (es.eigenvalues().minCoeff() < k_eig_floor)
        throw std::invalid_argument("psd factorization: factor not positive semidefinite");
    }
  }
}

Eigen::VectorXd evaluate(const PsdFactorization& f) {
  validate(f);
  return eval_unchecked(f);
}

double residual(const PsdFactorization& f, const ClassicalDistribution& p) {
  if (f.symbol_counts() != p.dims)
    throw std::invalid_argument("residual: factorization does not match the alphabet");
  return (evaluate(f) - p.probs).norm();
}

ClassicalDistribution normalize_evaluation(const PsdFactorization& f) {
  Eigen::VectorXd v = evaluate(f);
  if (v.minCoeff() < -1e-8)
    throw std::runtime_error("normalize: realization has a significantly negative entry");
  v = v.cwiseMax(0.0);
  double s = v.sum();
  if (s <= 0.0) throw std::invalid_argument("normalize: realization has no mass");
  return ClassicalDistribution(f.symbol_counts(), v / s);
}

PsdFactorization diagonal_factorization(const ClassicalDistribution& p) {
  int k = p.parties();
  int pivot = 0;
  for (int t = 1; t < k; ++t)
    if (p.dims[t] > p.dims[pivot]) pivot = t;

  std::vector<int> other_counts;
  std::vector<int> other_parties;
  for (int t = 0; t < k; ++t)
    if (t != pivot) {
      other_counts.push_back(p.dims[t]);
      other_parties.push_back(t);
    }
  long width = tensor_size(other_counts);

  PsdFactorization f;
  f.r = static_cast<int>(width);
  f.factors.assign(k, {});
  for (int t = 0; t < k; ++t)
    f.factors[t].assign(p.dims[t], Eigen::MatrixXcd::Zero(width, width));

  std::vector<long> strides(k);
  long acc = 1;
  for (int t = k; t-- > 0;) {
    strides[t] = acc;
    acc *= p.dims[t];
  }

  std::vector<int> idx(other_parties.size(), 0);
  long col = 0;
  do {
    long off = 0;
    for (size_t j = 0; j < other_parties.size(); ++j)
      off += idx[j] * strides[other_parties[j]];
    for (int x = 0; x < p.dims[pivot]; ++x)
      f.factors[pivot][x](col, col) = p.probs(off + x * strides[pivot]);
    for (size_t j = 0; j < other_parties.size(); ++j)
      f.factors[other_parties[j]][idx[j]](col, col) = 1.0;
    ++col;
  } while (!other_parties.empty() && advance(idx, other_counts));
  return f;
}

FitResult fit(const ClassicalDistribution& p, int r, const FitOptions& opts) {
  if (r < 1) throw std::invalid_argument("fit: width must be positive");
  if (opts.restarts < 1 || opts.max_iters < 1)
    throw std::invalid_argument("fit: restarts and max_iters must be positive");
  Problem prob{p, p.dims, p.parties(), p.dim()};

  FitResult best;
  best.residual = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart < opts.restarts; ++restart) {
    NormalRng rng(opts.rng_seed + 0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(restart + 1));
    std::vector<std::vector<Eigen::MatrixXcd>> factors(prob.k);
    for (int t = 0; t < prob.k; ++t)
      for (int x = 0; x < prob.counts[t]; ++x) {
        Eigen::MatrixXcd g(r, r);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < r; ++j) g(i, j) = cplx(rng.normal(), rng.normal());
        factors[t].push_back(g * g.adjoint());
      }
    {
      PsdFactorization probe;
      probe.r = r;
      probe.factors = factors;
      double mass = eval_unchecked(probe).sum();
      double target = p.probs.sum();
      double scale = (mass > 0.0) ? std::pow(target / mass, 1.0 / prob.k) : 1.0;
      for (auto& fs : factors)
        for (auto& c : fs) c *= scale;
    }

    int used = 0;
    int als_budget = std::min(50, opts.max_iters / 2 + 1);
    double prev = std::numeric_limits<double>::infinity();
    while (used < als_budget) {
      als_sweep(prob, factors, r);
      ++used;
      PsdFactorization cur;
      cur.r = r;
      cur.factors = factors;
      double res = (eval_unchecked(cur) - p.probs).norm();
      if (prev - res < opts.convergence_tol * std::max(prev, 1e-30)) {
        prev = res;
        break;
      }
      prev = res;
    }

    GramPoint pt = gram_from_factors(factors);
    gram_polish(prob, pt, r, opts.max_iters - used, opts.convergence_tol);

    PsdFactorization out;
    out.r = r;
    out.factors = gram_realize(pt);
    double res = (eval_unchecked(out) - p.probs).norm();
    if (res < best.residual) {
      best.factorization = std::move(out);
      best.residual = res;
      best.restart_index = restart;
    }
  }
  return best;
}

RankUpperResult psd_rank_upper(const ClassicalDistribution& p, const FitOptions& opts) {
  PsdFactorization trivial = diagonal_factorization(p);
  for (int r = 1; r < trivial.r; ++r) {
    FitResult f = fit(p, r, opts);
    if (f.residual <= opts.residual_target)
      return RankUpperResult{r, std::move(f.factorization), f.residual};
  }
  double res = (eval_unchecked(trivial) - p.probs).norm();
  return RankUpperResult{trivial.r, std::move(trivial), res};
}

int psd_rank_lower(const ClassicalDistribution& p) {
  int k = p.parties();
  if (k < 2) return 1;
  std::vector<long> strides(k);
  long acc = 1;
  for (int t = k; t-- > 0;) {
    strides[t] = acc;
    acc *= p.dims[t];
  }

  int best = 1;
  // Proper bipartitions, canonicalized by keeping party 0 on the row side.
  for (unsigned mask = 1; mask < (1u << k) - 1; mask += 2) {
    std::vector<int> rows_side, cols_side;
    for (int t = 0; t < k; ++t)
      ((mask >> t) & 1u ? rows_side : cols_side).push_back(t);
    if (cols_side.empty()) continue;

    long nr = 1, nc = 1;
    for (int t : rows_side) nr *= p.dims[t];
    for (int t : cols_side) nc *= p.dims[t];
    Eigen::MatrixXd m(nr, nc);
    std::vector<int> idx(k, 0);
    do {
      long ri = 0, ci = 0;
      for (int t : rows_side) ri = ri * p.dims[t] + idx[t];
      for (int t : cols_side) ci = ci * p.dims[t] + idx[t];
      long flat = 0;
      for (int t = 0; t < k; ++t) flat += idx[t] * strides[t];
      m(ri, ci) = p.probs(flat);
    } while (advance(idx, p.dims));

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const Eigen::VectorXd& s = svd.singularValues();
    int rank = 0;
    if (s.size() > 0 && s(0) > 0.0)
      for (long i = 0; i < s.size(); ++i)
        if (s(i) > k_rank_rel_tol * s(0)) ++rank;
    int bound = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(rank))));
    best = std::max(best, bound);
  }
  return best;
}

ApproxRankUpperResult approx_psd_rank_upper(const ClassicalDistribution& p, double eps,
                                            const FitOptions& opts) {
  if (eps < 0.0 || eps >= 1.0)
    throw std::invalid_argument("approximate psd rank: eps must lie in [0, 1)");
  PsdFactorization trivial = diagonal_factorization(p);
  for (int r = 1; r <= trivial.r; ++r) {
    PsdFactorization cand;
    if (r < trivial.r) {
      cand = fit(p, r, opts).factorization;
    } else {
      cand = std::move(trivial);
    }
    ClassicalDistribution witness = normalize_evaluation(cand);
    double fid = classical_fidelity(p, witness);
    if (fid >= 1.0 - eps - k_cutoff_slack)
      return ApproxRankUpperResult{r, std::move(cand), std::move(witness), fid};
  }
  throw std::runtime_error("approximate psd rank: search failed to terminate");
}

}  // namespace qcorr
