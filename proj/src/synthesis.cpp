#include "qcorr/synthesis.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "qcorr/complexity.hpp"
#include "qcorr/spectral.hpp"

namespace qcorr {

ProtocolStep make_isometry(int party, Eigen::MatrixXcd matrix) {
  ProtocolStep s;
  s.kind = ProtocolStep::Kind::isometry;
  s.party = party;
  s.matrix = std::move(matrix);
  return s;
}

ProtocolStep make_send(int from, int to, long long qubits) {
  ProtocolStep s;
  s.kind = ProtocolStep::Kind::send;
  s.from = from;
  s.to = to;
  s.qubits = qubits;
  return s;
}

ProtocolStep make_discard(int party, int reg) {
  ProtocolStep s;
  s.kind = ProtocolStep::Kind::discard;
  s.party = party;
  s.reg = reg;
  return s;
}

namespace {

std::vector<long> strides_of(const std::vector<int>& dims) {
  std::vector<long> s(dims.size());
  long acc = 1;
  for (size_t i = dims.size(); i-- > 0;) {
    s[i] = acc;
    acc *= dims[i];
  }
  return s;
}

// Contracts an isometry against the listed axes (ascending).  The first axis
// is replaced by the output dimension, the others disappear; every other
// axis is untouched.
void apply_isometry_axes(Eigen::VectorXcd& amp, std::vector<int>& dims,
                         const std::vector<int>& axes, const Eigen::MatrixXcd& m) {
  int n = static_cast<int>(dims.size());
  long rows = m.rows();
  std::vector<long> old_stride = strides_of(dims);

  std::vector<int> new_dims;
  std::vector<int> new_axis_of(n, -1);
  for (int i = 0; i < n; ++i) {
    if (i == axes[0]) {
      new_axis_of[i] = static_cast<int>(new_dims.size());
      new_dims.push_back(static_cast<int>(rows));
    } else if (std::binary_search(axes.begin(), axes.end(), i)) {
      continue;
    } else {
      new_axis_of[i] = static_cast<int>(new_dims.size());
      new_dims.push_back(dims[i]);
    }
  }
  std::vector<long> new_stride = strides_of(new_dims);

  // Offsets of every combination of the contracted axes, in list order.
  long cols = m.cols();
  std::vector<long> in_offset(cols, 0);
  {
    std::vector<int> idx(axes.size(), 0);
    for (long c = 0; c < cols; ++c) {
      long off = 0;
      for (size_t a = 0; a < axes.size(); ++a) off += idx[a] * old_stride[axes[a]];
      in_offset[c] = off;
      for (size_t a = axes.size(); a-- > 0;) {
        if (++idx[a] < dims[axes[a]]) break;
        idx[a] = 0;
      }
    }
  }
  long out_stride = new_stride[new_axis_of[axes[0]]];

  std::vector<int> context;
  for (int i = 0; i < n; ++i)
    if (!std::binary_search(axes.begin(), axes.end(), i)) context.push_back(i);

  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim_product(new_dims));
  std::vector<int> idx(context.size(), 0);
  while (true) {
    long old_base = 0, new_base = 0;
    for (size_t a = 0; a < context.size(); ++a) {
      old_base += idx[a] * old_stride[context[a]];
      new_base += idx[a] * new_stride[new_axis_of[context[a]]];
    }
    Eigen::VectorXcd v(cols);
    for (long c = 0; c < cols; ++c) v(c) = amp(old_base + in_offset[c]);
    Eigen::VectorXcd w = m * v;
    for (long r = 0; r < rows; ++r) out(new_base + r * out_stride) = w(r);

    size_t a = context.size();
    while (a > 0) {
      --a;
      if (++idx[a] < dims[context[a]]) break;
      idx[a] = 0;
      if (a == 0) {
        a = context.size() + 1;
        break;
      }
    }
    if (context.empty() || a == context.size() + 1) break;
  }

  amp = std::move(out);
  dims = std::move(new_dims);
}

bool is_isometry(const Eigen::MatrixXcd& m) {
  if (m.rows() < m.cols() || m.cols() < 1) return false;
  Eigen::MatrixXcd g = m.adjoint() * m;
  return (g - Eigen::MatrixXcd::Identity(m.cols(), m.cols())).cwiseAbs().maxCoeff() <=
         k_recon_tol;
}

Eigen::MatrixXcd complete_isometry(const Eigen::MatrixXcd& base, int total_cols) {
  long rows = base.rows(), have = base.cols();
  if (total_cols == have) return base;
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(base);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(rows, rows);
  Eigen::MatrixXcd out(rows, total_cols);
  out.leftCols(have) = base;
  out.rightCols(total_cols - have) = q.rightCols(rows - have).leftCols(total_cols - have);
  return out;
}

struct SeedPlan {
  std::vector<int> q;     // per-party seed register dimension (power of two)
  std::vector<int> dout;  // per-party output dimension (>= local dimension)
  Eigen::VectorXcd amp;   // seed amplitudes over q, party order
  std::vector<Eigen::MatrixXcd> isometries;  // q_j -> dout_j
  PureState target;       // psi, zero-padded per party when dout exceeds dims
};

SeedPlan build_seed_plan(const PureState& psi) {
  SupportDecomposition sup = support_decomposition(psi);
  int k = psi.parties();
  std::vector<int> q(k), dout(k);
  for (int j = 0; j < k; ++j) {
    q[j] = 1 << ceil_log2(sup.ranks[j]);
    dout[j] = std::max(psi.dims[j], q[j]);
  }

  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(dim_product(q));
  {
    std::vector<int> idx(k, 0);
    long flat_rank = 0;
    while (true) {
      amp(flat_index(q, idx)) = sup.coeff(flat_rank);
      ++flat_rank;
      int a = k;
      while (a-- > 0) {
        if (++idx[a] < sup.ranks[a]) break;
        idx[a] = 0;
      }
      if (a < 0) break;
    }
  }

  std::vector<Eigen::MatrixXcd> isometries;
  for (int j = 0; j < k; ++j) {
    Eigen::MatrixXcd padded = Eigen::MatrixXcd::Zero(dout[j], sup.ranks[j]);
    padded.topRows(psi.dims[j]) = sup.bases[j];
    isometries.push_back(complete_isometry(padded, q[j]));
  }

  bool padded_target = false;
  for (int j = 0; j < k; ++j)
    if (dout[j] > psi.dims[j]) padded_target = true;
  if (!padded_target)
    return SeedPlan{std::move(q), std::move(dout), std::move(amp),
                    std::move(isometries), psi};

  Eigen::VectorXcd tamp = Eigen::VectorXcd::Zero(dim_product(dout));
  std::vector<int> idx(k, 0);
  for (long flat = 0; flat < psi.dim(); ++flat) {
    tamp(flat_index(dout, multi_index(psi.dims, flat))) = psi.amp(flat);
  }
  PureState target(dout, std::move(tamp));
  return SeedPlan{std::move(q), std::move(dout), std::move(amp),
                  std::move(isometries), std::move(target)};
}

}  // namespace

SimulationResult simulate_protocol(const GenerationProtocol& p) {
  if (p.parties < 1) throw protocol_error("protocol has no parties");
  if (p.registers.size() != static_cast<size_t>(p.seed.parties()))
    throw protocol_error("seed state does not match the register list");
  std::vector<int> dims;
  std::vector<int> owner;
  std::vector<char> dead;
  for (size_t i = 0; i < p.registers.size(); ++i) {
    const Register& r = p.registers[i];
    if (r.owner < 0 || r.owner >= p.parties)
      throw protocol_error("register owned by an unknown party");
    if (r.dim != p.seed.dims[i])
      throw protocol_error("register dimension disagrees with the seed state");
    dims.push_back(static_cast<int>(r.dim));
    owner.push_back(r.owner);
    dead.push_back(0);
  }
  Eigen::VectorXcd amp = p.seed.amp;

  std::vector<std::vector<long long>> sent(
      p.parties, std::vector<long long>(p.parties, 0));
  long long total = 0;

  for (const ProtocolStep& step : p.steps) {
    switch (step.kind) {
      case ProtocolStep::Kind::isometry: {
        if (step.party < 0 || step.party >= p.parties)
          throw protocol_error("isometry applied by an unknown party");
        if (!is_isometry(step.matrix))
          throw protocol_error("step matrix is not an isometry");
        std::vector<int> axes;
        long cols = 1;
        for (size_t i = 0; i < dims.size(); ++i)
          if (!dead[i] && owner[i] == step.party) {
            axes.push_back(static_cast<int>(i));
            cols *= dims[i];
          }
        if (axes.empty()) {
          if (step.matrix.cols() != 1)
            throw protocol_error(
                "party holds no registers; the isometry must have one column");
          // Append a fresh register (fastest axis).
          long rows = step.matrix.rows();
          Eigen::VectorXcd out(amp.size() * rows);
          for (long i = 0; i < amp.size(); ++i)
            out.segment(i * rows, rows) = amp(i) * step.matrix.col(0);
          amp = std::move(out);
          dims.push_back(static_cast<int>(rows));
          owner.push_back(step.party);
          dead.push_back(0);
        } else {
          if (step.matrix.cols() != cols)
            throw protocol_error("isometry width disagrees with the party's registers");
          apply_isometry_axes(amp, dims, axes, step.matrix);
          // The first contracted axis survived; drop the bookkeeping of the rest.
          std::vector<int> new_owner;
          std::vector<char> new_dead;
          for (size_t i = 0; i < owner.size(); ++i) {
            if (static_cast<int>(i) == axes[0]) {
              new_owner.push_back(step.party);
              new_dead.push_back(0);
            } else if (std::binary_search(axes.begin(), axes.end(), static_cast<int>(i))) {
              continue;
            } else {
              new_owner.push_back(owner[i]);
              new_dead.push_back(dead[i]);
            }
          }
          owner = std::move(new_owner);
          dead = std::move(new_dead);
        }
        break;
      }
      case ProtocolStep::Kind::send: {
        if (step.from < 0 || step.from >= p.parties || step.to < 0 ||
            step.to >= p.parties || step.from == step.to)
          throw protocol_error("send between invalid parties");
        if (step.qubits < 0 || step.qubits > 40)
          throw protocol_error("send size out of range");
        long long want = 1LL << step.qubits;
        int found = -1;
        for (size_t i = 0; i < dims.size(); ++i)
          if (!dead[i] && owner[i] == step.from && dims[i] == want) {
            found = static_cast<int>(i);
            break;
          }
        if (found < 0)
          throw protocol_error("sender holds no register of the requested size");
        owner[found] = step.to;
        sent[step.from][step.to] += step.qubits;
        total += step.qubits;
        break;
      }
      case ProtocolStep::Kind::discard: {
        if (step.party < 0 || step.party >= p.parties)
          throw protocol_error("discard by an unknown party");
        int live_seen = 0, axis = -1;
        for (size_t i = 0; i < dims.size(); ++i) {
          if (dead[i]) continue;
          if (live_seen == step.reg) {
            axis = static_cast<int>(i);
            break;
          }
          ++live_seen;
        }
        if (axis < 0) throw protocol_error("discard names a missing register");
        if (owner[axis] != step.party)
          throw protocol_error("discard of a register the party does not hold");
        dead[axis] = 1;
        break;
      }
    }
  }

  // Arrange live registers by owner (stable), discarded ones last.
  std::vector<int> perm;
  std::vector<int> party_dims(p.parties, 1);
  for (int o = 0; o < p.parties; ++o)
    for (size_t i = 0; i < dims.size(); ++i)
      if (!dead[i] && owner[i] == o) {
        perm.push_back(static_cast<int>(i));
        party_dims[o] *= dims[i];
      }
  size_t live = perm.size();
  for (size_t i = 0; i < dims.size(); ++i)
    if (dead[i]) perm.push_back(static_cast<int>(i));
  if (live == 0) throw protocol_error("every register was discarded");

  PureState arranged = permute_parties(PureState(dims, amp), perm);
  if (live == dims.size()) {
    return SimulationResult{PureState(party_dims, arranged.amp), std::nullopt, sent,
                            total};
  }
  std::vector<int> discard_list;
  for (size_t i = live; i < dims.size(); ++i) discard_list.push_back(static_cast<int>(i));
  DensityOperator traced = partial_trace(arranged, discard_list);
  return SimulationResult{std::nullopt, DensityOperator(party_dims, traced.mat), sent,
                          total};
}

GenerationProtocol canonical_seed(const PureState& psi) {
  SeedPlan plan = build_seed_plan(psi);
  int k = psi.parties();
  std::vector<Register> regs;
  for (int j = 0; j < k; ++j) regs.push_back(Register{plan.q[j], j});
  std::vector<ProtocolStep> steps;
  for (int j = 0; j < k; ++j) steps.push_back(make_isometry(j, plan.isometries[j]));
  PureState seed(plan.q, plan.amp);
  return GenerationProtocol{k, std::move(regs), std::move(seed), plan.target,
                            std::move(steps)};
}

GenerationProtocol qcomm_upper_protocol(const PureState& psi) {
  SeedPlan plan = build_seed_plan(psi);
  int k = psi.parties();
  std::vector<int> bits(k);
  int sender = 0;
  for (int j = 0; j < k; ++j) {
    bits[j] = ceil_log2(plan.q[j]);
    if (bits[j] > bits[sender]) sender = j;
  }

  // The sender's own register goes last so each send's size lookup finds the
  // intended recipient's register first.
  std::vector<int> order;
  for (int j = 0; j < k; ++j)
    if (j != sender) order.push_back(j);
  order.push_back(sender);

  std::vector<Register> regs;
  for (int j : order) regs.push_back(Register{plan.q[j], sender});
  PureState seed = permute_parties(PureState(plan.q, plan.amp), order);

  std::vector<ProtocolStep> steps;
  for (int j = 0; j < k; ++j)
    if (j != sender && bits[j] > 0) steps.push_back(make_send(sender, j, bits[j]));
  for (int j = 0; j < k; ++j) steps.push_back(make_isometry(j, plan.isometries[j]));
  return GenerationProtocol{k, std::move(regs), std::move(seed), plan.target,
                            std::move(steps)};
}

PureState purification_from_psd(const PsdFactorization& f) {
  validate(f);
  std::vector<int> counts = f.symbol_counts();
  int k = f.parties();
  int r = f.r;

  std::vector<std::vector<Eigen::MatrixXcd>> roots(k);
  for (int t = 0; t < k; ++t)
    for (const Eigen::MatrixXcd& c : f.factors[t]) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(c);
      roots[t].push_back(es.eigenvectors() *
                         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                         es.eigenvectors().adjoint());
    }

  std::vector<int> refined;
  for (int t = 0; t < k; ++t) {
    refined.push_back(counts[t]);
    refined.push_back(counts[t]);
    refined.push_back(r);
  }
  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(dim_product(refined));

  std::vector<int> x(k, 0);
  std::vector<int> z(3 * k, 0);
  while (true) {
    std::vector<int> g(k, 0);
    while (true) {
      cplx value = 0.0;
      for (int i = 0; i < r; ++i) {
        cplx term = 1.0;
        for (int t = 0; t < k; ++t) term *= roots[t][x[t]](g[t], i);
        value += term;
      }
      for (int t = 0; t < k; ++t) {
        z[3 * t] = x[t];
        z[3 * t + 1] = x[t];
        z[3 * t + 2] = g[t];
      }
      amp(flat_index(refined, z)) = value;
      int a = k;
      while (a-- > 0) {
        if (++g[a] < r) break;
        g[a] = 0;
      }
      if (a < 0) break;
    }
    int a = k;
    while (a-- > 0) {
      if (++x[a] < counts[a]) break;
      x[a] = 0;
    }
    if (a < 0) break;
  }

  double norm = amp.norm();
  if (norm <= 1e-12)
    throw std::invalid_argument("purification: factorization carries no mass");
  return PureState(refined, amp / norm);
}

PureState default_purification(const DensityOperator& rho) {
  EigResult eig = hermitian_eig(rho.mat);
  double top = eig.values(0);
  int rank = 0;
  for (long i = 0; i < eig.values.size(); ++i)
    if (eig.values(i) > k_rank_rel_tol * top) ++rank;
  if (rank < 1) throw std::invalid_argument("purification: operator has no mass");

  std::vector<int> dims = rho.dims;
  dims.back() *= rank;
  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(rho.dim() * rank);
  for (long x = 0; x < rho.dim(); ++x)
    for (int j = 0; j < rank; ++j)
      amp(x * rank + j) = std::sqrt(eig.values(j)) * eig.vectors(x, j);
  return PureState(dims, amp / amp.norm());
}

TruncatedState truncate_pure(const PureState& psi, double eps) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw std::invalid_argument("truncate: eps must lie in [0, 1)");
  int k = psi.parties();
  if (k < 2) return TruncatedState{psi, 1.0, std::vector<int>(k, 1)};

  double threshold = (1.0 - eps / k) * (1.0 - eps / k) - k_cutoff_slack;
  Eigen::VectorXcd amp = psi.amp;
  std::vector<int> kept(k, 0);
  for (int j = 0; j < k; ++j) {
    std::vector<int> discard;
    for (int t = 0; t < k; ++t)
      if (t != j) discard.push_back(t);
    EigResult eig = hermitian_eig(partial_trace(psi, discard).mat);
    double mass = 0.0;
    int r = static_cast<int>(eig.values.size());
    for (long i = 0; i < eig.values.size(); ++i) {
      mass += eig.values(i);
      if (mass >= threshold) {
        r = static_cast<int>(i + 1);
        break;
      }
    }
    kept[j] = r;
    Eigen::MatrixXcd basis = eig.vectors.leftCols(r);
    amp = apply_on_party(amp, psi.dims, j, basis * basis.adjoint());
  }
  double fid = amp.norm();
  if (fid <= 1e-12) throw std::runtime_error("truncate: projection removed all mass");
  return TruncatedState{PureState(psi.dims, amp / fid), fid, std::move(kept)};
}

TruncatedState subset_truncate(const PureState& psi,
                               const std::vector<std::vector<int>>& kept) {
  int k = psi.parties();
  if (static_cast<int>(kept.size()) != k)
    throw std::invalid_argument("subset truncation: one index set per party required");
  std::vector<std::vector<char>> in(k);
  std::vector<int> ranks(k);
  for (int t = 0; t < k; ++t) {
    if (kept[t].empty()) throw std::invalid_argument("subset truncation: empty index set");
    in[t].assign(psi.dims[t], 0);
    int prev = -1;
    for (int x : kept[t]) {
      if (x < 0 || x >= psi.dims[t] || x <= prev)
        throw std::invalid_argument("subset truncation: index sets must be ascending and in range");
      in[t][x] = 1;
      prev = x;
    }
    ranks[t] = static_cast<int>(kept[t].size());
  }

  Eigen::VectorXcd amp = psi.amp;
  for (long flat = 0; flat < amp.size(); ++flat) {
    std::vector<int> idx = multi_index(psi.dims, flat);
    for (int t = 0; t < k; ++t)
      if (!in[t][idx[t]]) {
        amp(flat) = 0.0;
        break;
      }
  }
  double fid = amp.norm();
  if (fid <= 1e-12)
    throw std::invalid_argument("subset truncation: retained rectangle has no mass");
  return TruncatedState{PureState(psi.dims, amp / fid), fid, std::move(ranks)};
}

}  // namespace qcorr
