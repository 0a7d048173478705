#include "qcorr/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qcorr/synthesis.hpp"
#include "qcorr/tensor_core.hpp"

namespace qcorr {

long long floor_ratio(const ratio& q) {
  long long n = q.numerator(), d = q.denominator();
  long long f = n / d;
  if (n % d != 0 && n < 0) --f;
  return f;
}

long long ceil_ratio(const ratio& q) { return -floor_ratio(-q); }

int ceil_log2(long long n) {
  if (n < 1) throw std::invalid_argument("ceil_log2: argument must be positive");
  int b = 0;
  while ((1LL << b) < n) ++b;
  return b;
}

std::string ratio_string(const ratio& q) {
  std::ostringstream os;
  os << q.numerator() << "/" << q.denominator();
  return os.str();
}

namespace {

std::string int_list(const std::vector<int>& v) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << "]";
  return os.str();
}

void check_eps(double eps) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::invalid_argument("eps must lie in [0, 1)");
}

int approx_rank_vs_rest(const PureState& psi, int party, double eps) {
  PartySplit split = PartySplit::bipartition(psi.parties(), {party});
  return approx_schmidt_rank(psi, split, eps);
}

}  // namespace

// Splits each party of a candidate purification into its visible (slow) and
// ancillary (fast) factors and checks the visible marginal against rho.
void check_purification_candidate(const DensityOperator& rho, const PureState& cand) {
  int k = static_cast<int>(rho.dims.size());
  if (cand.parties() != k)
    throw purification_error("purification candidate has the wrong party count");
  std::vector<int> refined;
  std::vector<int> keep;
  for (int i = 0; i < k; ++i) {
    int d = rho.dims[i];
    if (cand.dims[i] % d != 0)
      throw purification_error(
          "purification candidate party dimension is not a multiple of the target's");
    refined.push_back(d);
    refined.push_back(cand.dims[i] / d);
    keep.push_back(2 * i);
  }
  PureState fine(refined, cand.amp);
  if (!is_purification(fine, rho, keep))
    throw purification_error("candidate does not purify the target state");
}

namespace {

int density_rank(const DensityOperator& rho) {
  EigResult eig = hermitian_eig(rho.mat);
  double top = eig.values(0);
  int rank = 0;
  for (long i = 0; i < eig.values.size(); ++i)
    if (eig.values(i) > k_rank_rel_tol * top) ++rank;
  return rank;
}

bool is_diagonal(const Eigen::MatrixXcd& m) {
  double dev = 0.0;
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j)
      if (i != j) dev = std::max(dev, std::abs(m(i, j)));
  return dev <= k_herm_tol;
}

}  // namespace

int marginal_complexity(const PureState& psi) {
  int m = 0;
  for (int r : marginal_ranks(psi)) m += ceil_log2(r);
  return m;
}

int marginal_complexity_eps(const PureState& psi, double eps) {
  check_eps(eps);
  int k = psi.parties();
  if (k < 2) return 0;
  int m = 0;
  for (int j = 0; j < k; ++j) m += ceil_log2(approx_rank_vs_rest(psi, j, eps));
  return m;
}

ComplexityReport qcorr_pure(const PureState& psi) {
  std::vector<int> ranks = marginal_ranks(psi);
  int m = 0;
  for (int r : ranks) m += ceil_log2(r);
  ComplexityReport rep;
  rep.quantity = "qcorr";
  rep.exact = m;
  rep.lower = ratio(m);
  rep.upper = ratio(m);
  rep.notes.push_back("marginal ranks " + int_list(ranks));
  return rep;
}

ComplexityReport qcorr_eps_pure_bounds(const PureState& psi, double eps) {
  check_eps(eps);
  int k = psi.parties();
  int lo = marginal_complexity_eps(psi, eps);
  int hi = marginal_complexity_eps(psi, k >= 1 ? eps / k : eps);
  ComplexityReport rep;
  rep.quantity = "qcorr_eps";
  rep.lower = ratio(lo);
  rep.upper = ratio(hi);
  if (lo == hi) rep.exact = lo;
  std::ostringstream os;
  os << "approximate marginal complexities at eps and eps/" << k;
  rep.notes.push_back(os.str());
  if (k == 2) {
    std::ostringstream bs;
    bs << "two-party exact value: " << qcorr_eps_bipartite_pure(psi, eps)
       << " qubits per party";
    rep.notes.push_back(bs.str());
  }
  return rep;
}

int qcorr_eps_bipartite_pure(const PureState& psi, double eps) {
  check_eps(eps);
  if (psi.parties() != 2)
    throw std::invalid_argument("two-party quantity requires exactly two parties");
  return ceil_log2(approx_rank_vs_rest(psi, 0, eps));
}

ComplexityReport qcorr_eps_pure_mixed_relation(const PureState& psi, double eps) {
  check_eps(eps);
  int k = psi.parties();
  ComplexityReport rep;
  rep.quantity = "qcorr_eps_mixed";
  if (k < 2) {
    rep.exact = 0;
    return rep;
  }
  int hi = marginal_complexity_eps(psi, eps / k);
  long long lo = 0;
  double wide = eps * k;
  if (wide < 1.0) {
    int m_wide = marginal_complexity_eps(psi, wide);
    ratio pre = ratio(k, 2 * k - 2) * m_wide;
    lo = std::max<long long>(0, ceil_ratio(pre));
    rep.notes.push_back("pre-rounding lower bound " + ratio_string(pre));
  } else {
    rep.notes.push_back("widened tolerance reaches 1; lower bound degenerates to 0");
  }
  rep.lower = ratio(lo);
  rep.upper = ratio(hi);
  if (rep.lower == rep.upper) rep.exact = lo;
  return rep;
}

ComplexityReport qcomm_pure_bounds(const PureState& psi) {
  int k = psi.parties();
  int m = marginal_complexity(psi);
  ComplexityReport rep;
  rep.quantity = "qcomm";
  if (k < 2) {
    rep.exact = 0;
    return rep;
  }
  ratio half = ratio(m, 2);
  ratio frac = ratio(static_cast<long long>(k - 1) * m, k);
  long long lo = ceil_ratio(half);
  long long hi = floor_ratio(frac);
  rep.lower = ratio(lo);
  rep.upper = ratio(hi);
  if (lo == hi) rep.exact = lo;
  rep.notes.push_back("pre-rounding bounds [" + ratio_string(half) + ", " +
                      ratio_string(frac) + "]");
  return rep;
}

MixedCorrBounds qcorr_mixed_bounds(const DensityOperator& rho,
                                   const std::vector<PureState>& purifications) {
  int k = static_cast<int>(rho.dims.size());
  for (const PureState& cand : purifications) check_purification_candidate(rho, cand);

  std::vector<PureState> pool = purifications;
  pool.push_back(default_purification(rho));

  long long best_m = -1;
  int best_index = 0;
  std::vector<int> pool_m;
  for (size_t i = 0; i < pool.size(); ++i) {
    int m = marginal_complexity(pool[i]);
    pool_m.push_back(m);
    if (best_m < 0 || m < best_m) {
      best_m = m;
      best_index = static_cast<int>(i);
    }
  }
  int witness_index =
      best_index == static_cast<int>(pool.size()) - 1 ? -1 : best_index;

  long long dims_bits = 0;
  for (int d : rho.dims) dims_bits += ceil_log2(d);

  ComplexityReport qc;
  qc.quantity = "qcorr";
  ComplexityReport pr;
  pr.quantity = "purified_qcorr";

  int rank = density_rank(rho);
  if (rank == 1) {
    // Pure target: the quantity is exact and every purification adds only
    // uncorrelated ancillas.
    EigResult eig = hermitian_eig(rho.mat);
    PureState pure_part(rho.dims, eig.vectors.col(0));
    long long m = marginal_complexity(pure_part);
    qc.exact = m;
    qc.lower = qc.upper = ratio(m);
    qc.notes.push_back("rank-one target; treated as a pure state");
    pr.exact = m;
    pr.lower = pr.upper = ratio(m);
    pr.notes = qc.notes;
    return MixedCorrBounds{qc, pr, witness_index, pool[best_index]};
  }

  long long qcorr_up = std::min(best_m, dims_bits);
  long long qcorr_lo = 0;
  if (k >= 2 && is_diagonal(rho.mat)) {
    ClassicalDistribution p(rho.dims, rho.mat.diagonal().real().cwiseMax(0.0));
    int bits = ceil_log2(psd_rank_lower(p));
    qcorr_lo = k == 2
                   ? bits
                   : std::max<long long>(0, ceil_ratio(ratio(k, 2 * k - 2) * bits));
    qc.notes.push_back("diagonal target: lower bound from the classical characterization");
  } else {
    qc.notes.push_back("no certified lower bound for a general mixed target");
  }

  qc.lower = ratio(qcorr_lo);
  qc.upper = ratio(qcorr_up);
  if (qc.lower == qc.upper) qc.exact = qcorr_lo;
  {
    std::ostringstream os;
    os << "upper bound: min of best purification (" << best_m
       << ") and the dimension bound (" << dims_bits << ")";
    qc.notes.push_back(os.str());
  }

  long long r_up = best_m;
  if (k >= 2)
    r_up = std::min(r_up, floor_ratio(ratio(2 * k - 2, k) * qcorr_up));
  pr.lower = ratio(qcorr_lo);
  pr.upper = ratio(r_up);
  if (pr.lower == pr.upper) pr.exact = qcorr_lo;
  {
    std::ostringstream os;
    if (witness_index >= 0)
      os << "best purification: supplied candidate " << witness_index;
    else
      os << "best purification: constructed default";
    os << " with marginal complexity " << best_m;
    pr.notes.push_back(os.str());
  }
  return MixedCorrBounds{qc, pr, witness_index, pool[best_index]};
}

MixedCommBounds qcomm_mixed_bounds(const DensityOperator& rho,
                                   const std::vector<PureState>& purifications) {
  int k = static_cast<int>(rho.dims.size());
  for (const PureState& cand : purifications) check_purification_candidate(rho, cand);

  std::vector<PureState> pool = purifications;
  pool.push_back(default_purification(rho));

  ComplexityReport rep;
  rep.quantity = "qcomm";
  if (k < 2) {
    rep.exact = 0;
    return MixedCommBounds{rep, -1, pool.back()};
  }

  long long best_up = -1, best_lo = -1;
  int best_index = 0;
  for (size_t i = 0; i < pool.size(); ++i) {
    ComplexityReport b = qcomm_pure_bounds(pool[i]);
    long long up = floor_ratio(b.upper);
    long long lo = ceil_ratio(b.lower);
    if (best_up < 0 || up < best_up) {
      best_up = up;
      best_index = static_cast<int>(i);
    }
    if (best_lo < 0 || lo < best_lo) best_lo = lo;
  }
  int witness_index =
      best_index == static_cast<int>(pool.size()) - 1 ? -1 : best_index;

  rep.lower = ratio(best_lo);
  rep.upper = ratio(best_up);
  rep.notes.push_back(
      "lower bound is the minimum over the purifications considered; not certified");
  if (density_rank(rho) == 1 && best_lo == best_up) rep.exact = best_lo;
  return MixedCommBounds{rep, witness_index, pool[best_index]};
}

bool comm_corr_consistency(int parties, const ComplexityReport& corr,
                           const ComplexityReport& comm) {
  if (parties < 2)
    throw std::invalid_argument("consistency check requires at least two parties");
  long long cl = std::max<long long>(0, ceil_ratio(corr.lower));
  long long cu = floor_ratio(corr.upper);
  long long ql = std::max<long long>(0, ceil_ratio(comm.lower));
  long long qu = floor_ratio(comm.upper);
  for (long long c = cl; c <= cu; ++c) {
    // parties * q <= (parties - 1) * c and c <= 2q for some q in range.
    long long q_hi = std::min(qu, (static_cast<long long>(parties) - 1) * c / parties);
    long long q_lo = std::max(ql, (c + 1) / 2);
    if (q_lo <= q_hi) return true;
  }
  return false;
}

ClassicalCorrBounds qcorr_classical_bounds(const ClassicalDistribution& p,
                                           const FitOptions& opts) {
  int k = p.parties();
  int lower = psd_rank_lower(p);
  RankUpperResult upper = psd_rank_upper(p, opts);

  ComplexityReport rep;
  rep.quantity = "qcorr";
  int lo_bits = ceil_log2(lower);
  int hi_bits = ceil_log2(upper.r);
  {
    std::ostringstream os;
    os << "factorization width interval [" << lower << ", " << upper.r << "]";
    rep.notes.push_back(os.str());
  }
  if (upper.residual > 0.0) {
    std::ostringstream os;
    os << "upper witness residual " << upper.residual
       << "; the factorization realizes a nearby distribution";
    rep.notes.push_back(os.str());
  } else {
    rep.notes.push_back("upper witness realizes the distribution exactly");
  }

  if (k <= 1) {
    rep.exact = 0;
    rep.lower = rep.upper = ratio(0);
  } else if (k == 2) {
    rep.lower = ratio(lo_bits);
    rep.upper = ratio(hi_bits);
    if (lo_bits == hi_bits) rep.exact = lo_bits;
    rep.notes.push_back("two-party characterization is exact in the width");
  } else {
    ratio pre = ratio(k, 2 * k - 2) * lo_bits;
    rep.lower = ratio(std::max<long long>(0, ceil_ratio(pre)));
    rep.upper = ratio(static_cast<long long>(k) * hi_bits);
    if (rep.lower == rep.upper) rep.exact = ceil_ratio(pre);
    rep.notes.push_back("pre-rounding lower bound " + ratio_string(pre));
  }
  return ClassicalCorrBounds{rep, lower, std::move(upper)};
}

ClassicalApproxBounds qcorr_eps_classical(const ClassicalDistribution& p, double eps,
                                          const FitOptions& opts) {
  check_eps(eps);
  if (p.parties() != 2)
    throw std::invalid_argument("approximate classical bounds require exactly two parties");
  ApproxRankUpperResult up = approx_psd_rank_upper(p, eps, opts);
  ComplexityReport rep;
  rep.quantity = "qcorr_eps";
  rep.lower = ratio(0);
  rep.upper = ratio(ceil_log2(up.r));
  if (rep.lower == rep.upper) rep.exact = 0;
  {
    std::ostringstream os;
    os << "witness width " << up.r << " with fidelity " << up.fidelity;
    rep.notes.push_back(os.str());
  }
  rep.notes.push_back("no certified lower bound");
  return ClassicalApproxBounds{rep, std::move(up)};
}

namespace {

struct CoverSearch {
  const std::vector<int>& dims;
  double need;
  std::vector<std::vector<int>> best_kept;
  long long best_product = -1;
  double best_mass = 0.0;

  void consider(const std::vector<std::vector<int>>& kept, long long product, double mass) {
    if (best_product < 0 || product < best_product ||
        (product == best_product && mass > best_mass + 1e-15)) {
      best_kept = kept;
      best_product = product;
      best_mass = mass;
    }
  }

  // `v` holds the mass tensor over the remaining axes after summing the
  // chosen indices of earlier parties.
  void dfs(size_t t, const Eigen::VectorXd& v, std::vector<std::vector<int>>& kept,
           long long product) {
    if (v.sum() < need) return;
    if (best_product >= 0 && product > best_product) return;
    if (t == dims.size()) {
      consider(kept, product, v(0));
      return;
    }
    int d = dims[t];
    long rest = v.size() / d;
    for (unsigned mask = 1; mask < (1u << d); ++mask) {
      std::vector<int> chosen;
      Eigen::VectorXd w = Eigen::VectorXd::Zero(rest);
      for (int x = 0; x < d; ++x)
        if ((mask >> x) & 1u) {
          chosen.push_back(x);
          w += v.segment(static_cast<long>(x) * rest, rest);
        }
      kept.push_back(std::move(chosen));
      dfs(t + 1, w, kept, product * static_cast<long long>(kept.back().size()));
      kept.pop_back();
    }
  }
};

}  // namespace

ProductCover min_product_cover(const PureState& psi, double eps, bool brute) {
  check_eps(eps);
  int k = psi.parties();
  Eigen::VectorXd probs = psi.amp.cwiseAbs2();
  double need = 1.0 - eps - k_cutoff_slack;

  std::vector<std::vector<int>> kept;
  if (brute) {
    long total_symbols = 0;
    for (int d : psi.dims) total_symbols += d;
    if (total_symbols > 20)
      throw std::invalid_argument("exhaustive cover search: alphabet too large");
    CoverSearch search{psi.dims, need, {}, -1, 0.0};
    std::vector<std::vector<int>> partial;
    search.dfs(0, probs, partial, 1);
    kept = std::move(search.best_kept);
  } else {
    std::vector<std::vector<char>> in(k);
    for (int t = 0; t < k; ++t) in[t].assign(psi.dims[t], 1);
    std::vector<int> sizes(psi.dims);
    double mass = probs.sum();

    std::vector<long> strides(k);
    long acc = 1;
    for (int t = k; t-- > 0;) {
      strides[t] = acc;
      acc *= psi.dims[t];
    }
    auto member = [&](long flat, int skip_party, int forced) {
      for (int t = 0; t < k; ++t) {
        int idx = static_cast<int>(flat / strides[t]) % psi.dims[t];
        if (t == skip_party) {
          if (idx != forced) return false;
        } else if (!in[t][idx]) {
          return false;
        }
      }
      return true;
    };

    while (true) {
      int pick_t = -1, pick_x = -1;
      double pick_loss = 0.0;
      for (int t = 0; t < k; ++t) {
        if (sizes[t] <= 1) continue;
        for (int x = 0; x < psi.dims[t]; ++x) {
          if (!in[t][x]) continue;
          double loss = 0.0;
          for (long flat = 0; flat < probs.size(); ++flat)
            if (probs(flat) > 0.0 && member(flat, t, x)) loss += probs(flat);
          if (pick_t < 0 || loss < pick_loss) {
            pick_t = t;
            pick_x = x;
            pick_loss = loss;
          }
        }
      }
      if (pick_t < 0 || mass - pick_loss < need) break;
      in[pick_t][pick_x] = 0;
      --sizes[pick_t];
      mass -= pick_loss;
    }
    kept.resize(k);
    for (int t = 0; t < k; ++t)
      for (int x = 0; x < psi.dims[t]; ++x)
        if (in[t][x]) kept[t].push_back(x);
  }

  ProductCover out{std::move(kept), 1, 0.0, 0};
  for (const auto& s : out.kept) {
    out.product *= static_cast<long long>(s.size());
    out.bits += ceil_log2(static_cast<long long>(s.size()));
  }
  // Recompute the retained mass from scratch for an honest witness value.
  std::vector<long> strides(k);
  long acc = 1;
  for (int t = k; t-- > 0;) {
    strides[t] = acc;
    acc *= psi.dims[t];
  }
  for (long flat = 0; flat < probs.size(); ++flat) {
    bool inside = true;
    for (int t = 0; t < k && inside; ++t) {
      int idx = static_cast<int>(flat / strides[t]) % psi.dims[t];
      inside = std::binary_search(out.kept[t].begin(), out.kept[t].end(), idx);
    }
    if (inside) out.mass += probs(flat);
  }
  return out;
}

GeneralFactors extract_factors(const PureState& psi) {
  if (psi.parties() != 4)
    throw std::invalid_argument(
        "factor extraction expects four registers: [left ancilla, left, right, right ancilla]");
  PartySplit split = PartySplit::bipartition(4, {0, 1});
  SchmidtDecomposition sd = schmidt(psi, split);
  int r = 0;
  double top = sd.coefficients.size() ? sd.coefficients(0) : 0.0;
  for (long i = 0; i < sd.coefficients.size(); ++i)
    if (sd.coefficients(i) > k_rank_rel_tol * top) ++r;
  if (r < 1) throw std::invalid_argument("factor extraction: state has no mass");

  int da1 = psi.dims[0], da = psi.dims[1], db = psi.dims[2], db1 = psi.dims[3];
  GeneralFactors out;
  for (int x = 0; x < da; ++x) {
    Eigen::MatrixXcd ax(da1, r);
    for (int i = 0; i < r; ++i) {
      double w = std::sqrt(sd.coefficients(i));
      for (int a1 = 0; a1 < da1; ++a1)
        ax(a1, i) = w * sd.left(static_cast<long>(a1) * da + x, i);
    }
    out.left.push_back(std::move(ax));
  }
  for (int y = 0; y < db; ++y) {
    Eigen::MatrixXcd by(db1, r);
    for (int i = 0; i < r; ++i) {
      double w = std::sqrt(sd.coefficients(i));
      for (int b1 = 0; b1 < db1; ++b1)
        by(b1, i) = w * sd.right(static_cast<long>(y) * db1 + b1, i);
    }
    out.right.push_back(std::move(by));
  }
  return out;
}

CharacterizationCheck verify_general_characterization(const DensityOperator& sigma,
                                                      const GeneralFactors& factors,
                                                      double eps) {
  check_eps(eps);
  if (sigma.dims.size() != 2)
    throw std::invalid_argument("characterization check expects a two-party operator");
  int da = sigma.dims[0], db = sigma.dims[1];
  if (static_cast<int>(factors.left.size()) != da ||
      static_cast<int>(factors.right.size()) != db)
    throw std::invalid_argument("characterization check: alphabet mismatch");
  long r = factors.left[0].cols();
  for (const auto& m : factors.left)
    if (m.cols() != r || m.rows() != factors.left[0].rows())
      throw std::invalid_argument("characterization check: ragged left factors");
  for (const auto& m : factors.right)
    if (m.cols() != r || m.rows() != factors.right[0].rows())
      throw std::invalid_argument("characterization check: ragged right factors");

  std::vector<std::vector<Eigen::MatrixXcd>> ga(da), gb(db);
  for (int x = 0; x < da; ++x)
    for (int xp = 0; xp < da; ++xp)
      ga[x].push_back(factors.left[xp].adjoint() * factors.left[x]);
  for (int y = 0; y < db; ++y)
    for (int yp = 0; yp < db; ++yp)
      gb[y].push_back(factors.right[yp].adjoint() * factors.right[y]);

  double recon = 0.0;
  for (int x = 0; x < da; ++x)
    for (int y = 0; y < db; ++y)
      for (int xp = 0; xp < da; ++xp)
        for (int yp = 0; yp < db; ++yp) {
          cplx v = (ga[x][xp].transpose() * gb[y][yp]).trace();
          cplx want = sigma.mat(static_cast<long>(x) * db + y,
                                static_cast<long>(xp) * db + yp);
          recon = std::max(recon, std::abs(v - want));
        }

  Eigen::MatrixXcd sa = Eigen::MatrixXcd::Zero(r, r);
  for (int x = 0; x < da; ++x) sa += ga[x][x];
  Eigen::MatrixXcd sb = Eigen::MatrixXcd::Zero(r, r);
  for (int y = 0; y < db; ++y) sb += gb[y][y];
  double ortho = 0.0;
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < r; ++j)
      if (i != j) ortho = std::max({ortho, std::abs(sa(i, j)), std::abs(sb(i, j))});

  std::vector<double> masses(r);
  for (long i = 0; i < r; ++i) masses[i] = sa(i, i).real() * sb(i, i).real();
  std::sort(masses.begin(), masses.end(), std::greater<double>());
  double threshold = (1.0 - eps) * (1.0 - eps) - k_cutoff_slack;
  int cutoff = static_cast<int>(r);
  double mass = 0.0;
  for (long i = 0; i < r; ++i) {
    mass += masses[i];
    if (mass >= threshold) {
      cutoff = static_cast<int>(i + 1);
      break;
    }
  }

  CharacterizationCheck out;
  out.reconstruction_dev = recon;
  out.orthogonality_dev = ortho;
  out.cutoff_rank = cutoff;
  out.ok = recon <= k_recon_tol && ortho <= k_recon_tol;
  return out;
}

}  // namespace qcorr
