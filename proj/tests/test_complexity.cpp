#include <cmath>
#include <cstdint>

#include "doctest.h"

#include "qcorr/complexity.hpp"
#include "qcorr/tensor_core.hpp"

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

PureState w3() {
  double s = 1.0 / std::sqrt(3.0);
  return make_state({2, 2, 2}, {{1, s}, {2, s}, {4, s}});
}

// Three parties; the third holds an extra tag qubit distinguishing the cat
// component (tag 1) from the Dicke component (tag 0).
PureState tagged_superposition() {
  double h = 0.5;
  double s = 1.0 / std::sqrt(6.0);
  return make_state({2, 2, 4}, {{1, h}, {15, h}, {2, s}, {4, s}, {8, s}});
}

// Equal mixture of the cat and Dicke states on three qubits.
DensityOperator cat_dicke_mixture() {
  PureState g = ghz3(), w = w3();
  Eigen::MatrixXcd m =
      0.5 * (g.amp * g.amp.adjoint()) + 0.5 * (w.amp * w.amp.adjoint());
  return DensityOperator({2, 2, 2}, m);
}

ClassicalDistribution make_dist(const std::vector<int>& dims,
                                const std::vector<double>& probs) {
  Eigen::VectorXd p(static_cast<long long>(probs.size()));
  for (size_t i = 0; i < probs.size(); ++i) p(static_cast<long long>(i)) = probs[i];
  return ClassicalDistribution(dims, p);
}

ComplexityReport window(long long lo, long long up) {
  ComplexityReport rep;
  rep.lower = ratio(lo);
  rep.upper = ratio(up);
  return rep;
}

struct SplitMix {
  std::uint64_t s;
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double normal() {
    double u = uniform(), v = uniform();
    if (u < 1e-300) u = 1e-300;
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
  }
};

PureState random_state(const std::vector<int>& dims, std::uint64_t seed) {
  SplitMix rng{seed};
  Eigen::VectorXcd amp(dim_product(dims));
  for (long long i = 0; i < amp.size(); ++i) amp(i) = cplx(rng.normal(), rng.normal());
  amp /= amp.norm();
  return PureState(dims, amp);
}

}  // namespace

TEST_CASE("rational rounding helpers") {
  CHECK(floor_ratio(ratio(7, 2)) == 3);
  CHECK(ceil_ratio(ratio(7, 2)) == 4);
  CHECK(floor_ratio(ratio(-7, 2)) == -4);
  CHECK(ceil_ratio(ratio(-7, 2)) == -3);
  CHECK(floor_ratio(ratio(4)) == 4);
  CHECK(ceil_ratio(ratio(4)) == 4);
  CHECK(ceil_log2(1) == 0);
  CHECK(ceil_log2(2) == 1);
  CHECK(ceil_log2(3) == 2);
  CHECK(ceil_log2(4) == 2);
  CHECK(ceil_log2(5) == 3);
  CHECK_THROWS_AS(ceil_log2(0), std::invalid_argument);
  CHECK(ratio_string(ratio(7, 2)) == "7/2");
}

TEST_CASE("exact correlation complexity of pure states") {
  CHECK(marginal_complexity(ghz3()) == 3);
  CHECK(marginal_complexity(bell()) == 2);
  CHECK(marginal_complexity(tagged_superposition()) == 4);

  ComplexityReport rep = qcorr_pure(ghz3());
  CHECK(rep.quantity == "qcorr");
  REQUIRE(rep.exact.has_value());
  CHECK(*rep.exact == 3);
  CHECK(rep.lower == ratio(3));
  CHECK(rep.upper == ratio(3));

  PureState prod = make_state({2, 2, 2}, {{5, 1.0}});
  CHECK(*qcorr_pure(prod).exact == 0);
}

TEST_CASE("approximate marginal complexity uses squared-fidelity cutoffs") {
  PureState g = ghz3();
  CHECK(marginal_complexity_eps(g, 0.9) == 0);
  CHECK(marginal_complexity_eps(g, 0.15) == 3);
  CHECK(marginal_complexity_eps(g, 0.3) == 0);
  CHECK(marginal_complexity_eps(g, 0.0) == 3);
  CHECK_THROWS_AS(marginal_complexity_eps(g, 1.0), std::invalid_argument);
}

TEST_CASE("approximate pure-state bounds sandwich between tolerance scales") {
  ComplexityReport rep = qcorr_eps_pure_bounds(ghz3(), 0.9);
  CHECK(rep.quantity == "qcorr_eps");
  CHECK(rep.lower == ratio(0));
  CHECK(rep.upper == ratio(0));

  ComplexityReport mid = qcorr_eps_pure_bounds(ghz3(), 0.15);
  CHECK(mid.lower == ratio(3));  // marginal complexity at 0.15
  CHECK(mid.upper == ratio(3));  // and at 0.05, both full rank

  for (double eps : {0.05, 0.1, 0.3, 0.6}) {
    PureState psi = random_state({3, 2, 2}, 42);
    ComplexityReport r = qcorr_eps_pure_bounds(psi, eps);
    CHECK(r.lower <= r.upper);
  }
}

TEST_CASE("two-party approximate value counts per-party qubits") {
  CHECK(qcorr_eps_bipartite_pure(bell(), 0.2) == 1);
  CHECK(qcorr_eps_bipartite_pure(bell(), 0.3) == 0);
  PureState lop = make_state({2, 2}, {{0, std::sqrt(0.9)}, {3, std::sqrt(0.1)}});
  CHECK(qcorr_eps_bipartite_pure(lop, 0.04) == 1);
  CHECK(qcorr_eps_bipartite_pure(lop, 0.06) == 0);
  CHECK_THROWS_AS(qcorr_eps_bipartite_pure(ghz3(), 0.1), std::invalid_argument);
}

TEST_CASE("pure states as mixed targets: scaled-tolerance sandwich") {
  ComplexityReport rep = qcorr_eps_pure_mixed_relation(ghz3(), 0.05);
  CHECK(rep.quantity == "qcorr_eps_mixed");
  CHECK(rep.lower == ratio(3));
  CHECK(rep.upper == ratio(3));

  ComplexityReport wide = qcorr_eps_pure_mixed_relation(ghz3(), 0.5);
  CHECK(wide.lower == ratio(0));  // widened tolerance exceeds 1
}

TEST_CASE("communication bounds for pure states") {
  ComplexityReport g = qcomm_pure_bounds(ghz3());
  CHECK(g.quantity == "qcomm");
  CHECK(g.lower == ratio(2));
  CHECK(g.upper == ratio(2));
  REQUIRE(g.exact.has_value());
  CHECK(*g.exact == 2);

  ComplexityReport e = qcomm_pure_bounds(bell());
  CHECK(e.lower == ratio(1));
  CHECK(e.upper == ratio(1));

  ComplexityReport t = qcomm_pure_bounds(tagged_superposition());
  CHECK(t.lower == ratio(2));
  CHECK(t.upper == ratio(2));

  PureState prod = make_state({2, 2}, {{0, 1.0}});
  CHECK(*qcomm_pure_bounds(prod).exact == 0);

  PureState single = make_state({4}, {{2, 1.0}});
  CHECK(*qcomm_pure_bounds(single).exact == 0);
}

TEST_CASE("mixed-state correlation bounds with a supplied purification") {
  DensityOperator rho = cat_dicke_mixture();
  PureState cand = tagged_superposition();
  MixedCorrBounds mc = qcorr_mixed_bounds(rho, {cand});
  CHECK(mc.qcorr.quantity == "qcorr");
  CHECK(mc.qcorr.upper == ratio(3));
  CHECK(mc.qcorr.lower == ratio(0));
  CHECK(mc.purified.quantity == "purified_qcorr");
  CHECK(mc.purified.upper == ratio(4));
  CHECK(mc.witness_index == 0);
  CHECK(mc.witness.dims == cand.dims);
}

TEST_CASE("mixed-state bounds reject a non-purification") {
  DensityOperator rho = cat_dicke_mixture();
  CHECK_THROWS_AS(qcorr_mixed_bounds(rho, {ghz3()}), purification_error);
  PureState wrong_shape = make_state({2, 2, 3}, {{0, 1.0}});
  CHECK_THROWS_AS(qcorr_mixed_bounds(rho, {wrong_shape}), purification_error);
}

TEST_CASE("rank-one mixed targets collapse to the pure value") {
  PureState g = ghz3();
  DensityOperator rho({2, 2, 2}, g.amp * g.amp.adjoint());
  MixedCorrBounds mc = qcorr_mixed_bounds(rho, {});
  REQUIRE(mc.qcorr.exact.has_value());
  CHECK(*mc.qcorr.exact == 3);
  REQUIRE(mc.purified.exact.has_value());
  CHECK(*mc.purified.exact == 3);
}

TEST_CASE("diagonal mixed targets inherit the classical lower bound") {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(4, 4);
  m(0, 0) = 0.5;
  m(3, 3) = 0.5;
  DensityOperator rho({2, 2}, m);
  MixedCorrBounds mc = qcorr_mixed_bounds(rho, {});
  CHECK(mc.qcorr.lower == ratio(1));
  CHECK(mc.qcorr.upper == ratio(2));
}

TEST_CASE("mixed-state communication bounds pick the cheapest purification") {
  DensityOperator rho = cat_dicke_mixture();
  MixedCommBounds mq = qcomm_mixed_bounds(rho, {tagged_superposition()});
  CHECK(mq.qcomm.quantity == "qcomm");
  CHECK(mq.qcomm.upper == ratio(2));
  CHECK(mq.witness_index == 0);
}

TEST_CASE("correlation and communication windows are cross-checked") {
  CHECK(comm_corr_consistency(3, window(3, 3), window(2, 2)));
  CHECK_FALSE(comm_corr_consistency(3, window(3, 3), window(3, 3)));
  CHECK(comm_corr_consistency(2, window(2, 2), window(1, 1)));
  CHECK_FALSE(comm_corr_consistency(2, window(2, 2), window(0, 0)));
  CHECK(comm_corr_consistency(2, window(0, 0), window(0, 0)));
  // Wide windows just need one consistent pair.
  CHECK(comm_corr_consistency(3, window(0, 3), window(0, 3)));
}

TEST_CASE("classical correlation bounds, exact for two parties") {
  ClassicalDistribution coin = make_dist({2, 2}, {0.5, 0, 0, 0.5});
  ClassicalCorrBounds cb = qcorr_classical_bounds(coin);
  CHECK(cb.report.quantity == "qcorr");
  CHECK(cb.prank_lower == 2);
  CHECK(cb.prank_upper.r == 2);
  REQUIRE(cb.report.exact.has_value());
  CHECK(*cb.report.exact == 1);
  CHECK(cb.report.lower == ratio(1));
  CHECK(cb.report.upper == ratio(1));
}

TEST_CASE("classical correlation bounds, sandwich for three parties") {
  ClassicalDistribution corr = make_dist({2, 2, 2}, {0.5, 0, 0, 0, 0, 0, 0, 0.5});
  ClassicalCorrBounds cb = qcorr_classical_bounds(corr);
  CHECK(cb.prank_lower == 2);
  CHECK(cb.prank_upper.r == 2);
  CHECK(cb.report.lower == ratio(1));
  CHECK(cb.report.upper == ratio(3));
  CHECK_FALSE(cb.report.exact.has_value());
}

TEST_CASE("approximate classical bounds for two parties") {
  ClassicalDistribution skew = make_dist({2, 2}, {0.9, 0, 0, 0.1});
  ClassicalApproxBounds ab = qcorr_eps_classical(skew, 0.06);
  CHECK(ab.report.quantity == "qcorr_eps");
  CHECK(ab.upper.r == 1);
  CHECK(ab.report.upper == ratio(0));
  CHECK(ab.report.lower == ratio(0));
  CHECK(ab.upper.fidelity >= 1.0 - 0.06 - 1e-9);

  ClassicalDistribution corr = make_dist({2, 2, 2}, {0.5, 0, 0, 0, 0, 0, 0, 0.5});
  CHECK_THROWS_AS(qcorr_eps_classical(corr, 0.1), std::invalid_argument);
}

TEST_CASE("subset covers trade retained mass for rectangle size") {
  PureState g = ghz3();
  ProductCover tight = min_product_cover(g, 0.3);
  CHECK(tight.bits == 3);
  CHECK(tight.product == 8);
  CHECK(tight.mass == doctest::Approx(1.0).epsilon(1e-12));

  ProductCover loose = min_product_cover(g, 0.6);
  CHECK(loose.bits == 0);
  CHECK(loose.product == 1);
  CHECK(loose.mass == doctest::Approx(0.5).epsilon(1e-12));

  ProductCover brute = min_product_cover(g, 0.6, true);
  CHECK(brute.product == 1);
  CHECK(brute.mass >= 0.4);

  ProductCover brute_tight = min_product_cover(g, 0.3, true);
  CHECK(brute_tight.product == 8);

  // The greedy cover never beats the exhaustive one.
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    PureState psi = random_state({2, 2, 2}, seed);
    for (double eps : {0.1, 0.4}) {
      ProductCover gd = min_product_cover(psi, eps);
      ProductCover bf = min_product_cover(psi, eps, true);
      CHECK(bf.product <= gd.product);
      CHECK(gd.mass >= 1.0 - eps - 1e-9);
      CHECK(bf.mass >= 1.0 - eps - 1e-9);
    }
  }
}

TEST_CASE("factor extraction from a four-register purification") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    std::vector<int> dims = seed % 2 ? std::vector<int>{2, 2, 2, 2}
                                     : std::vector<int>{2, 3, 2, 2};
    PureState psi = random_state(dims, seed * 31);
    GeneralFactors gf = extract_factors(psi);
    REQUIRE(static_cast<int>(gf.left.size()) == dims[1]);
    REQUIRE(static_cast<int>(gf.right.size()) == dims[2]);
    DensityOperator sigma = partial_trace(psi, {0, 3});
    for (double eps : {0.05, 0.2, 0.5}) {
      CharacterizationCheck chk = verify_general_characterization(sigma, gf, eps);
      CHECK(chk.ok);
      CHECK(chk.reconstruction_dev <= 1e-8);
      CHECK(chk.orthogonality_dev <= 1e-8);
      CHECK(chk.cutoff_rank ==
            approx_schmidt_rank(psi, PartySplit::bipartition(4, {0, 1}), eps));
    }
  }
  CHECK_THROWS_AS(extract_factors(ghz3()), std::invalid_argument);
}

TEST_CASE("characterization check flags a wrong target") {
  PureState psi = random_state({2, 2, 2, 2}, 9);
  GeneralFactors gf = extract_factors(psi);
  PureState other = random_state({2, 2, 2, 2}, 10);
  DensityOperator wrong = partial_trace(other, {0, 3});
  CharacterizationCheck chk = verify_general_characterization(wrong, gf, 0.1);
  CHECK_FALSE(chk.ok);
}
