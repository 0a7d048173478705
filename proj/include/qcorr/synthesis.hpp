#pragma once

#include <optional>
#include <vector>

#include "qcorr/psd_rank.hpp"
#include "qcorr/tensor_core.hpp"

namespace qcorr {

struct Register {
  long long dim;
  int owner;
};

struct ProtocolStep {
  enum class Kind { isometry, send, discard };
  Kind kind;
  int party = -1;           // isometry, discard
  Eigen::MatrixXcd matrix;  // isometry: columns index the party's merged registers
  int from = -1;
  int to = -1;
  long long qubits = 0;     // send
  int reg = -1;             // discard: index into the current register list
};

ProtocolStep make_isometry(int party, Eigen::MatrixXcd matrix);
ProtocolStep make_send(int from, int to, long long qubits);
ProtocolStep make_discard(int party, int reg);

// A seed state distributed over registers plus the local steps that turn it
// into the target.  Register order is significant: earlier registers vary
// more slowly, and a party's output is the product of its registers in list
// order.
struct GenerationProtocol {
  int parties;
  std::vector<Register> registers;
  PureState seed;    // dims must equal the register dims
  PureState target;  // per-party output dims
  std::vector<ProtocolStep> steps;
};

struct SimulationResult {
  std::optional<PureState> state;       // produced unless a discard occurred
  std::optional<DensityOperator> mixed; // produced when a discard occurred
  std::vector<std::vector<long long>> qubits_sent;  // [from][to]
  long long total_qubits_sent;
};

// Runs a protocol and returns the produced state with the communication
// ledger.  Violations of the step contracts raise protocol_error.
SimulationResult simulate_protocol(const GenerationProtocol& p);

// Minimal-size seed achieving the state exactly: one register per party of
// dimension 2^ceil(log2(marginal rank)), followed by one local isometry per
// party.  Total seed qubits equal the state's marginal complexity.
GenerationProtocol canonical_seed(const PureState& psi);

// Same seed prepared entirely at the party with the largest register, which
// then distributes the other registers.  Certifies the communication upper
// bound: the qubits sent never exceed floor((parties-1) * m / parties).
GenerationProtocol qcomm_upper_protocol(const PureState& psi);

// Purification of the distribution realized by a factorization.  Party t
// holds three registers [symbol, symbol copy, width]; tracing every party
// down to its first register leaves the normalized realization, embedded as
// a diagonal operator.
PureState purification_from_psd(const PsdFactorization& f);

// Purification of rho with an ancilla of dimension rank(rho) appended inside
// the last party (the visible subsystem stays the slower index).
PureState default_purification(const DensityOperator& rho);

struct TruncatedState {
  PureState state;
  double fidelity;             // overlap with the original, root convention
  std::vector<int> kept_ranks; // per-party retained rank
};

// Projects each party onto the top eigenvectors of its marginal, keeping
// spectral mass (1 - eps/k)^2 per party, then renormalizes.
TruncatedState truncate_pure(const PureState& psi, double eps);

// Zeroes every amplitude outside the given per-party index rectangle, then
// renormalizes.  Dimensions are unchanged.
TruncatedState subset_truncate(const PureState& psi,
                               const std::vector<std::vector<int>>& kept);

}  // namespace qcorr
