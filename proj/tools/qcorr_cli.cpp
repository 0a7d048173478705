#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "qcorr/io.hpp"
#include "qcorr/version.hpp"

namespace fs = std::filesystem;

namespace {

using namespace qcorr;

struct Options {
  std::string input;
  std::string second;
  std::string out;
  double eps = -1.0;  // negative = no approximate analysis requested
  std::uint64_t seed = 0;
  int restarts = 16;
  int iters = 500;
  double tol = 1e-8;
  bool brute_cover = false;
  long max_dim = 0;
  std::vector<std::string> candidates;
};

FitOptions fit_options(const Options& o) {
  FitOptions fo;
  fo.restarts = o.restarts;
  fo.max_iters = o.iters;
  fo.rng_seed = o.seed;
  return fo;
}

std::string basename_of(const std::string& path) {
  return fs::path(path).filename().string();
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

std::string nested_int_list(const std::vector<std::vector<int>>& sets) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < sets.size(); ++i) {
    os << (i ? ", " : "") << "[";
    for (size_t j = 0; j < sets[i].size(); ++j)
      os << (j ? ", " : "") << sets[i][j];
    os << "]";
  }
  os << "]";
  return os.str();
}

// Witness files are written beside the primary output and referenced by
// basename, so identical runs into different directories yield byte-identical
// reports.  Nothing touches the filesystem until flush().
class WitnessSink {
 public:
  explicit WitnessSink(std::string out_path) : out_path_(std::move(out_path)) {}

  std::optional<std::string> add(const std::string& name, const njson& content) {
    if (out_path_.empty()) return std::nullopt;
    fs::path base(out_path_);
    std::string file = base.stem().string() + "." + name + ".json";
    pending_.emplace_back((base.parent_path() / file).string(), dump_json(content));
    return file;
  }

  void flush() const {
    for (const auto& [path, text] : pending_) write_text_file(path, text);
  }

 private:
  std::string out_path_;
  std::vector<std::pair<std::string, std::string>> pending_;
};

njson make_envelope(const std::string& command, const Options& o) {
  njson j;
  j["version"] = k_version;
  j["command"] = command;
  j["input"] = basename_of(o.input);
  j["parameters"] = njson::object();
  if (o.eps >= 0.0)
    j["parameters"]["eps"] = o.eps;
  else
    j["parameters"]["eps"] = nullptr;
  j["notes"] = njson::array();
  j["reports"] = njson::array();
  return j;
}

void emit(const njson& env, const Options& o) {
  std::string text = dump_json(env);
  std::cout << text;
  if (!o.out.empty()) write_text_file(o.out, text);
}

const char* k_no_out_note = "witness omitted: no output path given";

int run_analyze_pure(const Options& o) {
  PureState psi = parse_pure(load_json_file(o.input));
  njson env = make_envelope("analyze_pure", o);
  env["parameters"]["brute_cover"] = o.brute_cover;
  WitnessSink sink(o.out);

  {
    ComplexityReport rep = qcorr_pure(psi);
    auto w = sink.add("seed_protocol", serialize_protocol(canonical_seed(psi)));
    if (!w) rep.notes.push_back(k_no_out_note);
    env["reports"].push_back(serialize_report(rep, w));
  }
  {
    ComplexityReport rep = qcomm_pure_bounds(psi);
    GenerationProtocol proto = qcomm_upper_protocol(psi);
    long long sent = 0;
    for (const ProtocolStep& s : proto.steps)
      if (s.kind == ProtocolStep::Kind::send) sent += s.qubits;
    rep.notes.push_back("witness protocol sends " + std::to_string(sent) + " qubits");
    auto w = sink.add("comm_protocol", serialize_protocol(proto));
    if (!w) rep.notes.push_back(k_no_out_note);
    env["reports"].push_back(serialize_report(rep, w));
  }
  if (o.eps >= 0.0) {
    {
      ComplexityReport rep = qcorr_eps_pure_bounds(psi, o.eps);
      TruncatedState tr = truncate_pure(psi, o.eps);
      rep.notes.push_back("truncation witness fidelity " + format_double(tr.fidelity));
      auto w = sink.add("truncated", serialize_pure(tr.state));
      if (!w) rep.notes.push_back(k_no_out_note);
      env["reports"].push_back(serialize_report(rep, w));
    }
    env["reports"].push_back(
        serialize_report(qcorr_eps_pure_mixed_relation(psi, o.eps), std::nullopt));
    {
      ProductCover cover = min_product_cover(psi, o.eps, o.brute_cover);
      ComplexityReport rep;
      rep.quantity = "qcorr_eps_cover";
      rep.lower = ratio(0);
      rep.upper = ratio(cover.bits);
      if (cover.bits == 0) rep.exact = 0;
      rep.notes.push_back(std::string(o.brute_cover ? "exhaustive" : "greedy") +
                          " cover keeps " + nested_int_list(cover.kept));
      rep.notes.push_back("rectangle size " + std::to_string(cover.product) +
                          ", retained mass " + format_double(cover.mass));
      TruncatedState tr = subset_truncate(psi, cover.kept);
      auto w = sink.add("cover_state", serialize_pure(tr.state));
      if (!w) rep.notes.push_back(k_no_out_note);
      env["reports"].push_back(serialize_report(rep, w));
    }
  }
  sink.flush();
  emit(env, o);
  return 0;
}

int run_analyze_dist(const Options& o) {
  ClassicalDistribution p = parse_dist(load_json_file(o.input));
  njson env = make_envelope("analyze_dist", o);
  env["parameters"]["seed"] = o.seed;
  env["parameters"]["restarts"] = o.restarts;
  env["parameters"]["iters"] = o.iters;
  WitnessSink sink(o.out);

  ClassicalCorrBounds cb = qcorr_classical_bounds(p, fit_options(o));
  {
    ComplexityReport rep = cb.report;
    auto wf = sink.add("factorization",
                       serialize_factorization(cb.prank_upper.factorization));
    if (!wf) rep.notes.push_back(k_no_out_note);
    try {
      PureState pur = purification_from_psd(cb.prank_upper.factorization);
      auto wp = sink.add("purification", serialize_pure(pur));
      if (wp)
        rep.notes.push_back("purification witness: " + *wp);
      else
        rep.notes.push_back("purification witness omitted: no output path given");
    } catch (const std::invalid_argument&) {
      rep.notes.push_back("purification witness omitted: dimension cap exceeded");
    }
    env["reports"].push_back(serialize_report(rep, wf));
  }

  if (o.eps >= 0.0) {
    if (p.parties() == 2) {
      ClassicalApproxBounds ab = qcorr_eps_classical(p, o.eps, fit_options(o));
      ComplexityReport rep = ab.report;
      auto wf = sink.add("eps_factorization",
                         serialize_factorization(ab.upper.factorization));
      if (!wf) rep.notes.push_back(k_no_out_note);
      auto wd = sink.add("eps_dist", serialize_dist(ab.upper.witness));
      if (wd) rep.notes.push_back("realized distribution witness: " + *wd);
      env["reports"].push_back(serialize_report(rep, wf));
    } else {
      env["notes"].push_back(
          "approximate classical analysis requires exactly two parties; skipped");
    }
  }
  sink.flush();
  emit(env, o);
  return 0;
}

int run_analyze_mixed(const Options& o) {
  DensityOperator rho = parse_density(load_json_file(o.input));
  std::vector<PureState> cands;
  cands.reserve(o.candidates.size());
  for (const std::string& path : o.candidates)
    cands.push_back(parse_pure(load_json_file(path)));

  njson env = make_envelope("analyze_mixed", o);
  njson cand_names = njson::array();
  for (const std::string& path : o.candidates)
    cand_names.push_back(basename_of(path));
  env["parameters"]["candidates"] = std::move(cand_names);
  WitnessSink sink(o.out);

  MixedCorrBounds mc = qcorr_mixed_bounds(rho, cands);
  MixedCommBounds mq = qcomm_mixed_bounds(rho, cands);

  for (size_t i = 0; i < cands.size(); ++i) {
    std::vector<int> ranks = marginal_ranks(cands[i]);
    std::ostringstream os;
    os << "candidate " << i << " marginal ranks [";
    for (size_t j = 0; j < ranks.size(); ++j) os << (j ? ", " : "") << ranks[j];
    os << "], complexity " << marginal_complexity(cands[i]);
    env["notes"].push_back(os.str());
  }

  auto wc = sink.add("purification", serialize_pure(mc.witness));
  {
    ComplexityReport rep = mc.qcorr;
    if (!wc) rep.notes.push_back(k_no_out_note);
    env["reports"].push_back(serialize_report(rep, wc));
  }
  env["reports"].push_back(serialize_report(mc.purified, wc));
  {
    ComplexityReport rep = mq.qcomm;
    auto wq = sink.add("comm_purification", serialize_pure(mq.witness));
    if (!wq) rep.notes.push_back(k_no_out_note);
    env["reports"].push_back(serialize_report(rep, wq));
  }
  sink.flush();
  emit(env, o);
  return 0;
}

int run_verify(const Options& o) {
  njson a = load_json_file(o.input);
  std::string ka = json_kind(a);

  njson env;
  env["version"] = k_version;
  env["command"] = "verify";
  env["input"] = basename_of(o.input);
  env["second"] = o.second.empty() ? njson(nullptr) : njson(basename_of(o.second));
  env["parameters"] = njson::object();
  env["parameters"]["tol"] = o.tol;

  njson detail = njson::object();
  bool ok = false;
  int fail_code = 4;

  if (ka == "protocol") {
    GenerationProtocol proto = parse_protocol(a);
    SimulationResult sim = simulate_protocol(proto);
    detail["qubits_sent"] = sim.total_qubits_sent;
    double fid = 0.0;
    if (!o.second.empty()) {
      njson b = load_json_file(o.second);
      std::string kb = json_kind(b);
      if (kb == "pure") {
        PureState target = parse_pure(b);
        fid = sim.state ? fidelity(*sim.state, target) : fidelity(*sim.mixed, target);
      } else if (kb == "density") {
        DensityOperator target = parse_density(b);
        fid = sim.state ? fidelity(target, *sim.state) : fidelity(*sim.mixed, target);
      } else {
        throw std::invalid_argument("verify: a protocol target must be pure or density");
      }
    } else {
      fid = sim.state ? fidelity(*sim.state, proto.target)
                      : fidelity(*sim.mixed, proto.target);
    }
    detail["fidelity"] = fid;
    ok = fid >= 1.0 - o.tol;
    if (!ok) detail["message"] = "simulated output does not reach the target";
  } else if (ka == "pure" || ka == "density" || ka == "factorization" ||
             ka == "dist") {
    if (o.second.empty())
      throw std::invalid_argument("verify: this input kind requires a second file");
    njson b = load_json_file(o.second);
    std::string kb = json_kind(b);
    if ((ka == "pure" && kb == "density") || (ka == "density" && kb == "pure")) {
      PureState psi = parse_pure(ka == "pure" ? a : b);
      DensityOperator target = parse_density(ka == "density" ? a : b);
      fail_code = 3;
      try {
        check_purification_candidate(target, psi);
        ok = true;
        detail["message"] = "candidate purifies the target";
      } catch (const purification_error& e) {
        ok = false;
        detail["message"] = e.what();
      }
    } else if ((ka == "factorization" && kb == "dist") ||
               (ka == "dist" && kb == "factorization")) {
      PsdFactorization f = parse_factorization(ka == "factorization" ? a : b);
      ClassicalDistribution p = parse_dist(ka == "dist" ? a : b);
      double res = residual(f, p);
      detail["residual"] = res;
      ok = res <= o.tol;
      if (!ok) detail["message"] = "factorization does not reproduce the distribution";
    } else if (ka == "pure" && kb == "pure") {
      double fid = fidelity(parse_pure(a), parse_pure(b));
      detail["fidelity"] = fid;
      ok = fid >= 1.0 - o.tol;
      if (!ok) detail["message"] = "states are not equivalent at this tolerance";
    } else {
      throw std::invalid_argument("verify: unsupported combination of input kinds");
    }
  } else {
    throw std::invalid_argument("verify: unsupported input kind '" + ka + "'");
  }

  env["ok"] = ok;
  env["detail"] = std::move(detail);
  emit(env, o);
  return ok ? 0 : fail_code;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{
      "exact values, certified bounds, and constructive witnesses for "
      "multipartite correlation and communication complexity"};
  app.require_subcommand(1);
  app.add_option("--max-dim", o.max_dim, "override the global dimension cap");

  CLI::App* ap = app.add_subcommand("analyze_pure", "analyze a pure multipartite state");
  ap->add_option("input", o.input, "pure-state JSON file")->required();
  ap->add_option("--eps", o.eps, "approximation parameter in [0, 1)");
  ap->add_option("--out", o.out, "write the report here and witnesses beside it");
  ap->add_flag("--brute-cover", o.brute_cover, "exhaustive subset-cover search");

  CLI::App* ad = app.add_subcommand("analyze_dist", "analyze a classical joint distribution");
  ad->add_option("input", o.input, "distribution JSON file")->required();
  ad->add_option("--eps", o.eps, "approximation parameter in [0, 1)");
  ad->add_option("--out", o.out, "write the report here and witnesses beside it");
  ad->add_option("--seed", o.seed, "factorization search RNG seed");
  ad->add_option("--restarts", o.restarts, "factorization search restarts");
  ad->add_option("--iters", o.iters, "factorization search iteration budget");

  CLI::App* am = app.add_subcommand("analyze_mixed", "analyze a mixed state");
  am->add_option("input", o.input, "density-operator JSON file")->required();
  am->add_option("--candidate", o.candidates,
                 "candidate purification JSON file (repeatable)");
  am->add_option("--out", o.out, "write the report here and witnesses beside it");

  CLI::App* vf = app.add_subcommand("verify", "check a witness against its target");
  vf->add_option("input", o.input, "witness or target JSON file")->required();
  vf->add_option("second", o.second, "second JSON file when the check needs one");
  vf->add_option("--tol", o.tol, "acceptance tolerance");
  vf->add_option("--out", o.out, "write the verdict here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (o.max_dim > 0) set_dimension_cap(o.max_dim);
    if (ap->parsed()) return run_analyze_pure(o);
    if (ad->parsed()) return run_analyze_dist(o);
    if (am->parsed()) return run_analyze_mixed(o);
    return run_verify(o);
  } catch (const purification_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const protocol_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
