#include "qcorr/io.hpp"

#include <fstream>

namespace qcorr {

namespace {

const njson& field(const njson& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw std::invalid_argument(std::string("missing field: ") + key);
  return j.at(key);
}

long long to_int(const njson& v, const char* what) {
  if (!v.is_number_integer())
    throw std::invalid_argument(std::string(what) + ": expected an integer");
  return v.get<long long>();
}

double to_double(const njson& v, const char* what) {
  if (!v.is_number())
    throw std::invalid_argument(std::string(what) + ": expected a number");
  return v.get<double>();
}

std::vector<int> parse_dims(const njson& j, const char* key) {
  const njson& d = field(j, key);
  if (!d.is_array() || d.empty())
    throw std::invalid_argument(std::string(key) + ": expected a nonempty array");
  std::vector<int> dims;
  long product = 1;
  for (const njson& v : d) {
    long long x = to_int(v, key);
    if (x < 1 || x > dimension_cap())
      throw std::invalid_argument(std::string(key) + ": dimension out of range");
    product *= static_cast<long>(x);
    if (product > dimension_cap())
      throw std::invalid_argument(std::string(key) + ": total dimension exceeds the cap");
    dims.push_back(static_cast<int>(x));
  }
  return dims;
}

cplx parse_complex(const njson& j, const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + ": expected {re, im}");
  double re = j.contains("re") ? to_double(j.at("re"), what) : 0.0;
  double im = j.contains("im") ? to_double(j.at("im"), what) : 0.0;
  return cplx(re, im);
}

njson complex_json(const cplx& z) {
  njson j;
  j["re"] = z.real();
  j["im"] = z.imag();
  return j;
}

long parse_entry_index(const njson& e, const std::vector<int>& dims) {
  const njson& idx = field(e, "index");
  if (!idx.is_array() || idx.size() != dims.size())
    throw std::invalid_argument("index: wrong arity");
  std::vector<int> multi;
  for (size_t t = 0; t < dims.size(); ++t) {
    long long x = to_int(idx.at(t), "index");
    if (x < 0 || x >= dims[t]) throw std::invalid_argument("index: out of range");
    multi.push_back(static_cast<int>(x));
  }
  return flat_index(dims, multi);
}

Eigen::VectorXcd parse_sparse_amplitudes(const njson& entries,
                                         const std::vector<int>& dims) {
  if (!entries.is_array())
    throw std::invalid_argument("amplitudes: expected an array");
  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(dim_product(dims));
  std::vector<char> seen(amp.size(), 0);
  for (const njson& e : entries) {
    long flat = parse_entry_index(e, dims);
    if (seen[flat]) throw std::invalid_argument("amplitudes: duplicate index");
    seen[flat] = 1;
    amp(flat) = parse_complex(e, "amplitudes");
  }
  return amp;
}

njson sparse_amplitudes_json(const std::vector<int>& dims, const Eigen::VectorXcd& amp) {
  njson out = njson::array();
  for (long flat = 0; flat < amp.size(); ++flat) {
    if (amp(flat) == cplx(0.0, 0.0)) continue;
    njson e;
    e["index"] = multi_index(dims, flat);
    e["re"] = amp(flat).real();
    e["im"] = amp(flat).imag();
    out.push_back(std::move(e));
  }
  return out;
}

Eigen::MatrixXcd parse_matrix(const njson& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument(std::string(what) + ": expected a nonempty matrix");
  long rows = static_cast<long>(j.size());
  long cols = -1;
  Eigen::MatrixXcd m;
  for (long r = 0; r < rows; ++r) {
    const njson& row = j.at(r);
    if (!row.is_array() || row.empty())
      throw std::invalid_argument(std::string(what) + ": ragged matrix");
    if (cols < 0) {
      cols = static_cast<long>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<long>(row.size()) != cols) {
      throw std::invalid_argument(std::string(what) + ": ragged matrix");
    }
    for (long c = 0; c < cols; ++c) m(r, c) = parse_complex(row.at(c), what);
  }
  return m;
}

njson matrix_json(const Eigen::MatrixXcd& m) {
  njson out = njson::array();
  for (long r = 0; r < m.rows(); ++r) {
    njson row = njson::array();
    for (long c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

void expect_kind(const njson& j, const char* kind) {
  if (json_kind(j) != kind)
    throw std::invalid_argument(std::string("expected kind \"") + kind + "\"");
}

}  // namespace

njson load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw std::invalid_argument("cannot open file: " + path);
  try {
    return njson::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("invalid JSON in " + path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out.is_open()) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

std::string json_kind(const njson& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw std::invalid_argument("document has no \"kind\" field");
  return j.at("kind").get<std::string>();
}

PureState parse_pure(const njson& j) {
  expect_kind(j, "pure");
  std::vector<int> dims = parse_dims(j, "dims");
  return PureState(dims, parse_sparse_amplitudes(field(j, "amplitudes"), dims));
}

DensityOperator parse_density(const njson& j) {
  expect_kind(j, "density");
  std::vector<int> dims = parse_dims(j, "dims");
  Eigen::MatrixXcd m = parse_matrix(field(j, "matrix"), "matrix");
  if (m.rows() != m.cols() || m.rows() != dim_product(dims))
    throw std::invalid_argument("matrix: shape disagrees with dims");
  return DensityOperator(dims, std::move(m));
}

ClassicalDistribution parse_dist(const njson& j) {
  expect_kind(j, "dist");
  std::vector<int> dims = parse_dims(j, "dims");
  const njson& entries = field(j, "probs");
  if (!entries.is_array()) throw std::invalid_argument("probs: expected an array");
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(dim_product(dims));
  std::vector<char> seen(probs.size(), 0);
  for (const njson& e : entries) {
    long flat = parse_entry_index(e, dims);
    if (seen[flat]) throw std::invalid_argument("probs: duplicate index");
    seen[flat] = 1;
    probs(flat) = to_double(field(e, "p"), "probs");
  }
  return ClassicalDistribution(dims, std::move(probs));
}

PsdFactorization parse_factorization(const njson& j) {
  expect_kind(j, "factorization");
  long long k = to_int(field(j, "k"), "k");
  long long r = to_int(field(j, "r"), "r");
  if (k < 1 || k > 64) throw std::invalid_argument("k: out of range");
  if (r < 1 || r > dimension_cap()) throw std::invalid_argument("r: out of range");
  const njson& parties = field(j, "factors");
  if (!parties.is_array() || static_cast<long long>(parties.size()) != k)
    throw std::invalid_argument("factors: expected one entry per party");
  PsdFactorization f;
  f.r = static_cast<int>(r);
  for (const njson& symbols : parties) {
    if (!symbols.is_array() || symbols.empty())
      throw std::invalid_argument("factors: each party needs at least one symbol");
    std::vector<Eigen::MatrixXcd> fs;
    for (const njson& mj : symbols) {
      Eigen::MatrixXcd m = parse_matrix(mj, "factors");
      if (m.rows() != r || m.cols() != r)
        throw std::invalid_argument("factors: matrix shape disagrees with r");
      fs.push_back(std::move(m));
    }
    f.factors.push_back(std::move(fs));
  }
  validate(f);
  return f;
}

GenerationProtocol parse_protocol(const njson& j) {
  expect_kind(j, "protocol");
  long long parties = to_int(field(j, "parties"), "parties");
  if (parties < 1 || parties > 64) throw std::invalid_argument("parties: out of range");

  const njson& regs_json = field(j, "registers");
  if (!regs_json.is_array() || regs_json.empty())
    throw std::invalid_argument("registers: expected a nonempty array");
  std::vector<Register> regs;
  std::vector<int> reg_dims;
  long product = 1;
  for (const njson& rj : regs_json) {
    long long dim = to_int(field(rj, "dim"), "registers.dim");
    long long owner = to_int(field(rj, "owner"), "registers.owner");
    if (dim < 1 || dim > dimension_cap())
      throw std::invalid_argument("registers.dim: out of range");
    if (owner < 0 || owner >= parties)
      throw std::invalid_argument("registers.owner: out of range");
    product *= static_cast<long>(dim);
    if (product > dimension_cap())
      throw std::invalid_argument("registers: total dimension exceeds the cap");
    regs.push_back(Register{dim, static_cast<int>(owner)});
    reg_dims.push_back(static_cast<int>(dim));
  }

  PureState seed(reg_dims, parse_sparse_amplitudes(field(j, "seed"), reg_dims));
  PureState target = parse_pure(field(j, "target"));

  std::vector<ProtocolStep> steps;
  const njson& steps_json = field(j, "steps");
  if (!steps_json.is_array()) throw std::invalid_argument("steps: expected an array");
  for (const njson& sj : steps_json) {
    const njson& opj = field(sj, "op");
    if (!opj.is_string()) throw std::invalid_argument("steps.op: expected a string");
    std::string op = opj.get<std::string>();
    if (op == "isometry") {
      steps.push_back(make_isometry(
          static_cast<int>(to_int(field(sj, "party"), "steps.party")),
          parse_matrix(field(sj, "matrix"), "steps.matrix")));
    } else if (op == "send") {
      steps.push_back(make_send(
          static_cast<int>(to_int(field(sj, "from"), "steps.from")),
          static_cast<int>(to_int(field(sj, "to"), "steps.to")),
          to_int(field(sj, "qubits"), "steps.qubits")));
    } else if (op == "discard") {
      steps.push_back(make_discard(
          static_cast<int>(to_int(field(sj, "party"), "steps.party")),
          static_cast<int>(to_int(field(sj, "register"), "steps.register"))));
    } else {
      throw std::invalid_argument("steps.op: unknown operation \"" + op + "\"");
    }
  }
  return GenerationProtocol{static_cast<int>(parties), std::move(regs), std::move(seed),
                            std::move(target), std::move(steps)};
}

njson serialize_pure(const PureState& psi) {
  njson j;
  j["kind"] = "pure";
  j["dims"] = psi.dims;
  j["amplitudes"] = sparse_amplitudes_json(psi.dims, psi.amp);
  return j;
}

njson serialize_density(const DensityOperator& rho) {
  njson j;
  j["kind"] = "density";
  j["dims"] = rho.dims;
  j["matrix"] = matrix_json(rho.mat);
  return j;
}

njson serialize_dist(const ClassicalDistribution& p) {
  njson j;
  j["kind"] = "dist";
  j["dims"] = p.dims;
  njson entries = njson::array();
  for (long flat = 0; flat < p.probs.size(); ++flat) {
    if (p.probs(flat) == 0.0) continue;
    njson e;
    e["index"] = multi_index(p.dims, flat);
    e["p"] = p.probs(flat);
    entries.push_back(std::move(e));
  }
  j["probs"] = std::move(entries);
  return j;
}

njson serialize_factorization(const PsdFactorization& f) {
  njson j;
  j["kind"] = "factorization";
  j["k"] = f.parties();
  j["r"] = f.r;
  njson parties = njson::array();
  for (const auto& fs : f.factors) {
    njson symbols = njson::array();
    for (const auto& m : fs) symbols.push_back(matrix_json(m));
    parties.push_back(std::move(symbols));
  }
  j["factors"] = std::move(parties);
  return j;
}

njson serialize_protocol(const GenerationProtocol& p) {
  njson j;
  j["kind"] = "protocol";
  j["parties"] = p.parties;
  njson regs = njson::array();
  for (const Register& r : p.registers) {
    njson rj;
    rj["dim"] = r.dim;
    rj["owner"] = r.owner;
    regs.push_back(std::move(rj));
  }
  j["registers"] = std::move(regs);
  j["seed"] = sparse_amplitudes_json(p.seed.dims, p.seed.amp);
  j["target"] = serialize_pure(p.target);
  njson steps = njson::array();
  for (const ProtocolStep& s : p.steps) {
    njson sj;
    switch (s.kind) {
      case ProtocolStep::Kind::isometry:
        sj["op"] = "isometry";
        sj["party"] = s.party;
        sj["matrix"] = matrix_json(s.matrix);
        break;
      case ProtocolStep::Kind::send:
        sj["op"] = "send";
        sj["from"] = s.from;
        sj["to"] = s.to;
        sj["qubits"] = s.qubits;
        break;
      case ProtocolStep::Kind::discard:
        sj["op"] = "discard";
        sj["party"] = s.party;
        sj["register"] = s.reg;
        break;
    }
    steps.push_back(std::move(sj));
  }
  j["steps"] = std::move(steps);
  return j;
}

njson serialize_report(const ComplexityReport& rep,
                       const std::optional<std::string>& witness) {
  njson j;
  j["quantity"] = rep.quantity;
  if (rep.exact)
    j["exact"] = *rep.exact;
  else
    j["exact"] = nullptr;
  j["lower"] = njson{{"num", rep.lower.numerator()}, {"den", rep.lower.denominator()}};
  j["upper"] = njson{{"num", rep.upper.numerator()}, {"den", rep.upper.denominator()}};
  if (witness)
    j["witness"] = *witness;
  else
    j["witness"] = nullptr;
  j["notes"] = rep.notes;
  return j;
}

std::string dump_json(const njson& j) { return j.dump(2) + "\n"; }

}  // namespace qcorr
