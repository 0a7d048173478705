#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#include "qcorr/io.hpp"

using namespace qcorr;
namespace fs = std::filesystem;

namespace {

const char* k_dir = "/tmp/qcorr_io_test";

void reset_dir(const std::string& sub) {
  fs::remove_all(fs::path(k_dir) / sub);
  fs::create_directories(fs::path(k_dir) / sub);
}

std::string path_in(const std::string& sub, const std::string& name) {
  return (fs::path(k_dir) / sub / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  std::string cmd = std::string("\"") + QCORR_CLI_PATH + "\" " + args +
                    " > /dev/null 2> /dev/null";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

int run_cli_capture(const std::string& args, const std::string& stdout_path) {
  std::string cmd = std::string("\"") + QCORR_CLI_PATH + "\" " + args + " > " +
                    stdout_path + " 2> /dev/null";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

PureState make_state(const std::vector<int>& dims,
                     const std::vector<std::pair<long long, cplx>>& entries) {
  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(dim_product(dims));
  for (const auto& [i, v] : entries) amp(i) = v;
  return PureState(dims, amp);
}

PureState ghz3() {
  double s = 1.0 / std::sqrt(2.0);
  return make_state({2, 2, 2}, {{0, s}, {7, s}});
}

PureState w3() {
  double s = 1.0 / std::sqrt(3.0);
  return make_state({2, 2, 2}, {{1, s}, {2, s}, {4, s}});
}

PureState tagged_superposition() {
  double h = 0.5;
  double s = 1.0 / std::sqrt(6.0);
  return make_state({2, 2, 4}, {{1, h}, {15, h}, {2, s}, {4, s}, {8, s}});
}

DensityOperator cat_dicke_mixture() {
  PureState g = ghz3(), w = w3();
  Eigen::MatrixXcd m =
      0.5 * (g.amp * g.amp.adjoint()) + 0.5 * (w.amp * w.amp.adjoint());
  return DensityOperator({2, 2, 2}, m);
}

ClassicalDistribution corr3() {
  Eigen::VectorXd p(8);
  p << 0.5, 0, 0, 0, 0, 0, 0, 0.5;
  return ClassicalDistribution({2, 2, 2}, p);
}

}  // namespace

TEST_CASE("pure state round-trips through json") {
  PureState psi = make_state({2, 3}, {{0, cplx(0.6, 0.0)}, {5, cplx(0.0, 0.8)}});
  njson j = serialize_pure(psi);
  CHECK(json_kind(j) == "pure");
  PureState back = parse_pure(j);
  CHECK(back.dims == psi.dims);
  CHECK((back.amp - psi.amp).norm() < 1e-15);
}

TEST_CASE("density operator round-trips through json") {
  DensityOperator rho = cat_dicke_mixture();
  DensityOperator back = parse_density(serialize_density(rho));
  CHECK(back.dims == rho.dims);
  CHECK((back.mat - rho.mat).norm() < 1e-15);
}

TEST_CASE("distribution round-trips through json") {
  ClassicalDistribution p = corr3();
  ClassicalDistribution back = parse_dist(serialize_dist(p));
  CHECK(back.dims == p.dims);
  CHECK((back.probs - p.probs).norm() < 1e-15);
}

TEST_CASE("factorization round-trips through json") {
  PsdFactorization f = diagonal_factorization(corr3());
  PsdFactorization back = parse_factorization(serialize_factorization(f));
  CHECK(back.r == f.r);
  REQUIRE(back.parties() == f.parties());
  for (int t = 0; t < f.parties(); ++t)
    for (size_t x = 0; x < f.factors[t].size(); ++x)
      CHECK((back.factors[t][x] - f.factors[t][x]).norm() < 1e-15);
}

TEST_CASE("protocol round-trips through json and still runs") {
  GenerationProtocol p = canonical_seed(ghz3());
  GenerationProtocol back = parse_protocol(serialize_protocol(p));
  CHECK(back.parties == p.parties);
  CHECK(back.registers.size() == p.registers.size());
  CHECK(back.steps.size() == p.steps.size());
  SimulationResult sim = simulate_protocol(back);
  REQUIRE(sim.state.has_value());
  CHECK(fidelity(*sim.state, ghz3()) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("json serialization is deterministic") {
  DensityOperator rho = cat_dicke_mixture();
  CHECK(dump_json(serialize_density(rho)) == dump_json(serialize_density(rho)));
}

TEST_CASE("parsers reject malformed documents") {
  CHECK_THROWS_AS(json_kind(njson::array()), std::invalid_argument);
  CHECK_THROWS_AS(json_kind(njson::object()), std::invalid_argument);

  njson pure = serialize_pure(ghz3());
  CHECK_THROWS_AS(parse_density(pure), std::invalid_argument);  // kind mismatch

  njson no_dims = pure;
  no_dims.erase("dims");
  CHECK_THROWS_AS(parse_pure(no_dims), std::invalid_argument);

  njson dup = pure;
  dup["amplitudes"].push_back(dup["amplitudes"][0]);
  CHECK_THROWS_AS(parse_pure(dup), std::invalid_argument);

  njson oob = pure;
  oob["amplitudes"][0]["index"] = njson::array({5, 0, 0});
  CHECK_THROWS_AS(parse_pure(oob), std::invalid_argument);

  njson short_index = pure;
  short_index["amplitudes"][0]["index"] = njson::array({0, 0});
  CHECK_THROWS_AS(parse_pure(short_index), std::invalid_argument);

  njson unnormalized = pure;
  unnormalized["amplitudes"][0]["re"] = 5.0;
  CHECK_THROWS_AS(parse_pure(unnormalized), std::invalid_argument);

  njson bad_dim = pure;
  bad_dim["dims"] = njson::array({2, 0, 2});
  CHECK_THROWS_AS(parse_pure(bad_dim), std::invalid_argument);

  njson huge = pure;
  huge["dims"] = njson::array({100000, 100000, 100000});
  CHECK_THROWS_AS(parse_pure(huge), std::invalid_argument);

  njson ragged = serialize_density(cat_dicke_mixture());
  ragged["matrix"][0].erase(0);
  CHECK_THROWS_AS(parse_density(ragged), std::invalid_argument);
}

TEST_CASE("file loading reports missing and invalid input") {
  reset_dir("load");
  CHECK_THROWS_AS(load_json_file(path_in("load", "absent.json")),
                  std::invalid_argument);
  write_text_file(path_in("load", "broken.json"), "{not json");
  CHECK_THROWS_AS(load_json_file(path_in("load", "broken.json")),
                  std::invalid_argument);
}

TEST_CASE("cli handles help and argument errors") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("analyze_pure --help") == 0);
  CHECK(run_cli("") == 2);                     // missing subcommand
  CHECK(run_cli("analyze_pure") == 2);         // missing input
  CHECK(run_cli("frobnicate x.json") == 2);    // unknown subcommand
  CHECK(run_cli("analyze_pure x.json --nope") == 2);
  CHECK(run_cli("analyze_pure /nonexistent/x.json") == 2);
}

TEST_CASE("cli analyzes a pure state end to end") {
  reset_dir("pure");
  std::string in = path_in("pure", "cat.json");
  write_text_file(in, dump_json(serialize_pure(ghz3())));
  std::string out = path_in("pure", "report.json");
  CHECK(run_cli("analyze_pure " + in + " --eps 0.1 --out " + out) == 0);

  njson env = load_json_file(out);
  CHECK(env["command"] == "analyze_pure");
  CHECK(env["input"] == "cat.json");
  REQUIRE(env["reports"].size() == 5);
  CHECK(env["reports"][0]["quantity"] == "qcorr");
  CHECK(env["reports"][0]["exact"] == 3);
  CHECK(env["reports"][0]["witness"] == "report.seed_protocol.json");
  CHECK(env["reports"][1]["quantity"] == "qcomm");
  CHECK(env["reports"][1]["lower"]["num"] == 2);
  CHECK(env["reports"][1]["upper"]["num"] == 2);
  CHECK(env["reports"][2]["quantity"] == "qcorr_eps");
  CHECK(env["reports"][3]["quantity"] == "qcorr_eps_mixed");
  CHECK(env["reports"][4]["quantity"] == "qcorr_eps_cover");

  for (const char* witness : {"report.seed_protocol.json", "report.comm_protocol.json",
                              "report.truncated.json", "report.cover_state.json"})
    CHECK(fs::exists(fs::path(k_dir) / "pure" / witness));

  // Both protocol witnesses pass verification against their embedded targets.
  CHECK(run_cli("verify " + path_in("pure", "report.seed_protocol.json")) == 0);
  CHECK(run_cli("verify " + path_in("pure", "report.comm_protocol.json")) == 0);

  // The truncated state is a valid pure-state document.
  PureState tr = parse_pure(load_json_file(path_in("pure", "report.truncated.json")));
  CHECK(tr.dims == std::vector<int>{2, 2, 2});
}

TEST_CASE("cli without an output path reports witnesses as null") {
  reset_dir("nostdout");
  std::string in = path_in("nostdout", "cat.json");
  write_text_file(in, dump_json(serialize_pure(ghz3())));
  std::string cap = path_in("nostdout", "stdout.json");
  CHECK(run_cli_capture("analyze_pure " + in, cap) == 0);
  njson env = load_json_file(cap);
  CHECK(env["reports"][0]["witness"].is_null());
  CHECK(env["version"].is_string());
}

TEST_CASE("cli analyzes a distribution and its witnesses verify") {
  reset_dir("dist");
  std::string in = path_in("dist", "corr.json");
  write_text_file(in, dump_json(serialize_dist(corr3())));
  std::string out = path_in("dist", "report.json");
  CHECK(run_cli("analyze_dist " + in + " --seed 5 --out " + out) == 0);

  njson env = load_json_file(out);
  CHECK(env["reports"][0]["quantity"] == "qcorr");
  CHECK(env["reports"][0]["lower"]["num"] == 1);
  CHECK(env["reports"][0]["upper"]["num"] == 3);
  std::string fact = path_in("dist", "report.factorization.json");
  REQUIRE(fs::exists(fact));
  CHECK(run_cli("verify " + fact + " " + in + " --tol 1e-6") == 0);
  REQUIRE(fs::exists(path_in("dist", "report.purification.json")));

  // A wrong target distribution is rejected with the witness-failure code.
  Eigen::VectorXd q(8);
  q << 0.25, 0, 0, 0.25, 0.25, 0, 0, 0.25;
  write_text_file(path_in("dist", "other.json"),
                  dump_json(serialize_dist(ClassicalDistribution({2, 2, 2}, q))));
  CHECK(run_cli("verify " + fact + " " + path_in("dist", "other.json")) == 4);
}

TEST_CASE("cli runs are byte-identical for a fixed seed") {
  reset_dir("det_a");
  reset_dir("det_b");
  std::string in_a = path_in("det_a", "corr.json");
  std::string in_b = path_in("det_b", "corr.json");
  write_text_file(in_a, dump_json(serialize_dist(corr3())));
  write_text_file(in_b, dump_json(serialize_dist(corr3())));
  CHECK(run_cli("analyze_dist " + in_a + " --seed 11 --out " +
                path_in("det_a", "r.json")) == 0);
  CHECK(run_cli("analyze_dist " + in_b + " --seed 11 --out " +
                path_in("det_b", "r.json")) == 0);
  CHECK(slurp(path_in("det_a", "r.json")) == slurp(path_in("det_b", "r.json")));
  CHECK(slurp(path_in("det_a", "r.factorization.json")) ==
        slurp(path_in("det_b", "r.factorization.json")));
}

TEST_CASE("cli analyzes a mixed state with a candidate purification") {
  reset_dir("mixed");
  std::string in = path_in("mixed", "mixture.json");
  std::string cand = path_in("mixed", "tagged.json");
  write_text_file(in, dump_json(serialize_density(cat_dicke_mixture())));
  write_text_file(cand, dump_json(serialize_pure(tagged_superposition())));
  std::string out = path_in("mixed", "report.json");
  CHECK(run_cli("analyze_mixed " + in + " --candidate " + cand + " --out " + out) == 0);

  njson env = load_json_file(out);
  REQUIRE(env["reports"].size() == 3);
  CHECK(env["reports"][0]["quantity"] == "qcorr");
  CHECK(env["reports"][0]["upper"]["num"] == 3);
  CHECK(env["reports"][1]["quantity"] == "purified_qcorr");
  CHECK(env["reports"][1]["upper"]["num"] == 4);
  CHECK(env["reports"][2]["quantity"] == "qcomm");
  CHECK(env["reports"][2]["upper"]["num"] == 2);

  std::string pur = path_in("mixed", "report.purification.json");
  REQUIRE(fs::exists(pur));
  CHECK(run_cli("verify " + pur + " " + in) == 0);
  CHECK(run_cli("verify " + in + " " + pur) == 0);

  // A state that fails to purify the target exits with the purification code.
  write_text_file(path_in("mixed", "bad.json"), dump_json(serialize_pure(ghz3())));
  CHECK(run_cli("analyze_mixed " + in + " --candidate " +
                path_in("mixed", "bad.json")) == 3);
  CHECK(run_cli("verify " + path_in("mixed", "bad.json") + " " + in) == 3);
}

TEST_CASE("cli verifies state equivalence and respects --max-dim") {
  reset_dir("misc");
  std::string a = path_in("misc", "a.json");
  write_text_file(a, dump_json(serialize_pure(ghz3())));
  std::string b = path_in("misc", "b.json");
  write_text_file(b, dump_json(serialize_pure(w3())));
  CHECK(run_cli("verify " + a + " " + a) == 0);
  CHECK(run_cli("verify " + a + " " + b) == 4);
  CHECK(run_cli("verify " + a) == 2);  // needs a second file

  CHECK(run_cli("--max-dim 4 analyze_pure " + a) == 2);  // 8 states > cap 4
  CHECK(run_cli("--max-dim 2048 analyze_pure " + a) == 0);
}
