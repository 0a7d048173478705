#include <cmath>

#include "doctest.h"

#include "qcorr/complexity.hpp"
#include "qcorr/synthesis.hpp"

using namespace qcorr;

namespace {

PureState make_state(const std::vector<int>& dims,
                     const std::vector<std::pair<long long, cplx>>& entries) {
  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(dim_product(dims));
  for (const auto& [i, v] : entries) amp(i) = v;
  return PureState(dims, amp);
}

PureState bell() {
  double s = 1.0 / std::sqrt(2.0);
  return make_state({2, 2}, {{0, s}, {3, s}});
}

PureState ghz3() {
  double s = 1.0 / std::sqrt(2.0);
  return make_state({2, 2, 2}, {{0, s}, {7, s}});
}

PureState tagged_superposition() {
  double h = 0.5;
  double s = 1.0 / std::sqrt(6.0);
  return make_state({2, 2, 4}, {{1, h}, {15, h}, {2, s}, {4, s}, {8, s}});
}

long long send_total(const GenerationProtocol& p) {
  long long q = 0;
  for (const ProtocolStep& s : p.steps)
    if (s.kind == ProtocolStep::Kind::send) q += s.qubits;
  return q;
}

}  // namespace

TEST_CASE("canonical seed regenerates the state without communication") {
  PureState g = ghz3();
  GenerationProtocol p = canonical_seed(g);
  CHECK(p.parties == 3);
  REQUIRE(p.registers.size() == 3);
  for (int j = 0; j < 3; ++j) {
    CHECK(p.registers[j].dim == 2);
    CHECK(p.registers[j].owner == j);
  }
  SimulationResult sim = simulate_protocol(p);
  REQUIRE(sim.state.has_value());
  CHECK(sim.total_qubits_sent == 0);
  CHECK(fidelity(*sim.state, g) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("canonical seed pads non-power-of-two ranks") {
  double s = 1.0 / std::sqrt(3.0);
  PureState trine = make_state({3, 3}, {{0, s}, {4, s}, {8, s}});
  GenerationProtocol p = canonical_seed(trine);
  REQUIRE(p.registers.size() == 2);
  CHECK(p.registers[0].dim == 4);  // rank 3 rounds up to 2 qubits
  CHECK(p.registers[1].dim == 4);
  CHECK(p.target.dims == std::vector<int>{4, 4});
  SimulationResult sim = simulate_protocol(p);
  REQUIRE(sim.state.has_value());
  // The padded target holds the original amplitudes in the low indices.
  PureState padded = make_state({4, 4}, {{0, s}, {5, s}, {10, s}});
  CHECK(fidelity(*sim.state, padded) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fidelity(*sim.state, p.target) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("seed register count matches the marginal complexity") {
  for (const PureState& psi : {ghz3(), bell(), tagged_superposition()}) {
    GenerationProtocol p = canonical_seed(psi);
    long long qubits = 0;
    for (const Register& r : p.registers) {
      long long d = r.dim, bits = 0;
      while ((1LL << bits) < d) ++bits;
      CHECK((1LL << bits) == d);  // always a power of two
      qubits += bits;
    }
    CHECK(qubits == marginal_complexity(psi));
  }
}

TEST_CASE("distribution protocol meets the communication upper bound") {
  PureState g = ghz3();
  GenerationProtocol p = qcomm_upper_protocol(g);
  CHECK(send_total(p) == 2);
  SimulationResult sim = simulate_protocol(p);
  REQUIRE(sim.state.has_value());
  CHECK(sim.total_qubits_sent == 2);
  CHECK(fidelity(*sim.state, g) == doctest::Approx(1.0).epsilon(1e-10));

  GenerationProtocol pe = qcomm_upper_protocol(bell());
  CHECK(send_total(pe) == 1);
  SimulationResult se = simulate_protocol(pe);
  CHECK(fidelity(*se.state, bell()) == doctest::Approx(1.0).epsilon(1e-10));

  PureState t = tagged_superposition();
  GenerationProtocol pt = qcomm_upper_protocol(t);
  CHECK(send_total(pt) == 2);  // the four-dimensional register stays home
  SimulationResult st = simulate_protocol(pt);
  CHECK(fidelity(*st.state, t) == doctest::Approx(1.0).epsilon(1e-10));

  // Communication never exceeds floor((k-1) m / k).
  ComplexityReport bounds = qcomm_pure_bounds(t);
  CHECK(ratio(send_total(pt)) <= bounds.upper);
}

TEST_CASE("hand-written send moves a register between parties") {
  PureState moved =
      make_state({4, 1}, {{0, 1.0 / std::sqrt(2.0)}, {3, 1.0 / std::sqrt(2.0)}});
  GenerationProtocol p{2, {{2, 0}, {2, 1}}, bell(), moved, {make_send(1, 0, 1)}};
  SimulationResult sim = simulate_protocol(p);
  REQUIRE(sim.state.has_value());
  CHECK(sim.state->dims == std::vector<int>{4, 1});
  CHECK(sim.qubits_sent[1][0] == 1);
  CHECK(sim.total_qubits_sent == 1);
  CHECK(fidelity(*sim.state, p.target) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("discard produces the reduced mixed state") {
  GenerationProtocol p{2,
                       {{2, 0}, {2, 1}},
                       bell(),
                       make_state({2, 1}, {{0, 1.0}}),  // declared shape only
                       {make_discard(1, 1)}};
  SimulationResult sim = simulate_protocol(p);
  CHECK_FALSE(sim.state.has_value());
  REQUIRE(sim.mixed.has_value());
  CHECK(sim.mixed->dims == std::vector<int>{2, 1});
  CHECK(std::abs(sim.mixed->mat(0, 0).real() - 0.5) < 1e-12);
  CHECK(std::abs(sim.mixed->mat(1, 1).real() - 0.5) < 1e-12);
}

TEST_CASE("protocol contract violations are rejected") {
  GenerationProtocol p{2, {{2, 0}, {2, 1}}, bell(), bell(), {}};

  GenerationProtocol bad = p;
  bad.steps = {make_send(0, 0, 1)};  // self-send
  CHECK_THROWS_AS(simulate_protocol(bad), protocol_error);

  bad = p;
  bad.steps = {make_send(0, 1, 2)};  // no dimension-4 register at party 0
  CHECK_THROWS_AS(simulate_protocol(bad), protocol_error);

  bad = p;
  bad.steps = {make_discard(0, 1)};  // register 1 belongs to party 1
  CHECK_THROWS_AS(simulate_protocol(bad), protocol_error);

  bad = p;
  bad.steps = {make_discard(0, 0), make_discard(1, 1)};  // nothing left
  CHECK_THROWS_AS(simulate_protocol(bad), protocol_error);

  bad = p;
  bad.steps = {make_isometry(0, Eigen::MatrixXcd::Identity(3, 3))};  // wrong size
  CHECK_THROWS_AS(simulate_protocol(bad), protocol_error);

  bad = p;
  bad.registers = {{3, 0}, {2, 1}};  // seed dims no longer match
  CHECK_THROWS_AS(simulate_protocol(bad), protocol_error);
}

TEST_CASE("isometry steps enlarge a party in place") {
  // Embed party 1 into a qutrit: |0> -> |0>, |1> -> |2>.
  Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(3, 2);
  v(0, 0) = 1.0;
  v(2, 1) = 1.0;
  PureState grown =
      make_state({2, 3}, {{0, 1.0 / std::sqrt(2.0)}, {5, 1.0 / std::sqrt(2.0)}});
  GenerationProtocol p{2, {{2, 0}, {2, 1}}, bell(), grown, {make_isometry(1, v)}};
  SimulationResult sim = simulate_protocol(p);
  REQUIRE(sim.state.has_value());
  CHECK(sim.state->dims == std::vector<int>{2, 3});
  CHECK(fidelity(*sim.state, p.target) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("psd factorization purification reduces to the distribution") {
  Eigen::VectorXd probs(4);
  probs << 0.5, 0.0, 0.0, 0.5;
  ClassicalDistribution p({2, 2}, probs);
  PsdFactorization f = diagonal_factorization(p);
  PureState psi = purification_from_psd(f);
  REQUIRE(psi.dims.size() == 6);  // three registers per party
  CHECK(psi.dims == std::vector<int>{2, 2, 2, 2, 2, 2});
  DensityOperator visible = partial_trace(psi, {1, 2, 4, 5});
  DensityOperator target = embed_classical(normalize_evaluation(f));
  CHECK((visible.mat - target.mat).norm() < 1e-10);
}

TEST_CASE("default purification passes the candidate check") {
  PureState g = ghz3();
  PureState w = make_state({2, 2, 2}, {{1, 1.0 / std::sqrt(3.0)},
                                       {2, 1.0 / std::sqrt(3.0)},
                                       {4, 1.0 / std::sqrt(3.0)}});
  Eigen::MatrixXcd m =
      0.5 * (g.amp * g.amp.adjoint()) + 0.5 * (w.amp * w.amp.adjoint());
  DensityOperator rho({2, 2, 2}, m);
  PureState pur = default_purification(rho);
  CHECK(pur.dims == std::vector<int>{2, 2, 4});  // rank-2 ancilla inside the last party
  CHECK_NOTHROW(check_purification_candidate(rho, pur));
  CHECK(marginal_complexity(pur) == 4);

  PureState b = bell();
  DensityOperator pure_rho({2, 2}, b.amp * b.amp.adjoint());
  PureState triv = default_purification(pure_rho);
  CHECK(triv.dims == std::vector<int>{2, 2});  // rank 1 adds nothing
  CHECK(fidelity(triv, b) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("spectral truncation keeps the dominant local supports") {
  PureState lop = make_state({2, 2}, {{0, std::sqrt(0.9)}, {3, std::sqrt(0.1)}});
  TruncatedState tr = truncate_pure(lop, 0.12);
  CHECK(tr.kept_ranks == std::vector<int>{1, 1});
  CHECK(tr.fidelity == doctest::Approx(std::sqrt(0.9)).epsilon(1e-10));
  PureState zerozero = make_state({2, 2}, {{0, 1.0}});
  CHECK(fidelity(tr.state, zerozero) == doctest::Approx(1.0).epsilon(1e-10));

  TruncatedState exact = truncate_pure(lop, 0.0);
  CHECK(exact.fidelity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(exact.kept_ranks == std::vector<int>{2, 2});

  CHECK_THROWS_AS(truncate_pure(lop, 1.0), std::invalid_argument);
}

TEST_CASE("subset truncation zeroes outside the rectangle") {
  PureState g = ghz3();
  TruncatedState tr = subset_truncate(g, {{0}, {0}, {0}});
  CHECK(tr.kept_ranks == std::vector<int>{1, 1, 1});
  CHECK(tr.fidelity == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  PureState zeros = make_state({2, 2, 2}, {{0, 1.0}});
  CHECK(fidelity(tr.state, zeros) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(subset_truncate(g, {{0}, {0}}), std::invalid_argument);
  CHECK_THROWS_AS(subset_truncate(g, {{0}, {0}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(subset_truncate(g, {{0}, {0}, {2}}), std::invalid_argument);
  CHECK_THROWS_AS(subset_truncate(g, {{1}, {0}, {0}}), std::invalid_argument);  // no mass
}
