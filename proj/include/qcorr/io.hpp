#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "qcorr/complexity.hpp"
#include "qcorr/synthesis.hpp"

namespace qcorr {

// Insertion-ordered JSON keeps serialized output stable byte for byte.
using njson = nlohmann::ordered_json;

// Reads and parses a JSON document; parse failures and unreadable files
// raise std::invalid_argument.
njson load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// The object's "kind" discriminator ("pure", "density", "dist",
// "factorization", "protocol"); missing or malformed kinds throw.
std::string json_kind(const njson& j);

// Object layouts.  All indices are 0-based; party 0 is the slowest axis of
// every flattened vector or matrix.
//
//   pure:          {"kind":"pure","dims":[...],
//                   "amplitudes":[{"index":[...],"re":..,"im":..},...]}
//                  (omitted entries are zero; re/im default to 0)
//   density:       {"kind":"density","dims":[...],
//                   "matrix":[[{"re":..,"im":..},...],...]}     (row-major)
//   dist:          {"kind":"dist","dims":[...],
//                   "probs":[{"index":[...],"p":..},...]}
//   factorization: {"kind":"factorization","k":..,"r":..,
//                   "factors":[party][symbol] = r x r matrix of {re,im}}
//   protocol:      {"kind":"protocol","parties":..,
//                   "registers":[{"dim":..,"owner":..},...],
//                   "seed":[sparse amplitudes],"target":{pure object},
//                   "steps":[{"op":"isometry","party":..,"matrix":[[{re,im}..]..]}
//                           |{"op":"send","from":..,"to":..,"qubits":..}
//                           |{"op":"discard","party":..,"register":..}]}

PureState parse_pure(const njson& j);
DensityOperator parse_density(const njson& j);
ClassicalDistribution parse_dist(const njson& j);
PsdFactorization parse_factorization(const njson& j);
GenerationProtocol parse_protocol(const njson& j);

njson serialize_pure(const PureState& psi);
njson serialize_density(const DensityOperator& rho);
njson serialize_dist(const ClassicalDistribution& p);
njson serialize_factorization(const PsdFactorization& f);
njson serialize_protocol(const GenerationProtocol& p);

// {"quantity":..,"exact":..|null,"lower":{"num","den"},"upper":{"num","den"},
//  "witness":..|null,"notes":[...]}
njson serialize_report(const ComplexityReport& rep,
                       const std::optional<std::string>& witness);

// Canonical dump: two-space indentation plus a trailing newline.
std::string dump_json(const njson& j);

}  // namespace qcorr
