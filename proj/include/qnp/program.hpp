#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "qnp/angle.hpp"

namespace qnp {

using NodeId = std::string;
using BlockId = int;
using QubitId = int;
using Duration = int64_t;  // nanoseconds

enum class BlockType { CL, CC, QL, QC };

const char* to_string(BlockType t);

enum class GateKind { X, Z, H, RX, RY, RZ, CZ };

const char* to_string(GateKind g);
bool is_rotation(GateKind g);
bool is_two_qubit(GateKind g);

enum class Basis { X, Y, Z };

/// The six single-qubit eigenstates usable as initial states.
/// Zero is an alias of PlusZ kept distinct for round-tripping.
enum class InitState { PlusX, MinusX, PlusY, MinusY, PlusZ, MinusZ, Zero };

struct ClassicalCompute {
    int op_count = 1;
    // optional angle-arithmetic assignment evaluated when the block runs
    std::optional<std::string> dest;
    AngleExpr expr;
};

struct SendMsg {
    NodeId peer;
    std::string payload;  // variable holding the value to send
};

struct RecvMsg {
    NodeId peer;
    std::string dest;
};

struct QAlloc {
    QubitId qubit;
    InitState initial = InitState::Zero;
};

struct QGate {
    GateKind gate;
    QubitId q0;
    QubitId q1 = -1;  // only for CZ
    AngleExpr angle;  // only for RX/RY/RZ
};

struct QMeasure {
    QubitId qubit;
    Basis basis = Basis::Z;
    std::string dest;
};

struct QFree {
    QubitId qubit;
};

struct EprRequest {
    NodeId peer;
    int count = 1;
    std::vector<QubitId> dest_qubits;
};

using Instruction = std::variant<ClassicalCompute, SendMsg, RecvMsg, QAlloc,
                                 QGate, QMeasure, QFree, EprRequest>;

bool is_classical_instr(const Instruction& in);
bool is_quantum_instr(const Instruction& in);

/// Non-preemptable atomic unit of execution.
struct Block {
    BlockId id = 0;
    BlockType type = BlockType::CL;
    std::vector<Instruction> instrs;
    /// Relative deadline: maximum gap after the latest predecessor's
    /// completion, in ns. Unset means no deadline.
    std::optional<Duration> deadline;
    /// Live qubits carried into this block from a cooperative split;
    /// each one costs a quantum-instruction time to reload.
    int load_qubits = 0;
};

struct CriticalSection {
    BlockId first = 0;
    BlockId last = 0;  // inclusive, contiguous in block order
};

/// Success criterion attached by scenario builders: XOR of a set of
/// measured bit variables plus a constant must equal `expected`.
struct OutcomeCheck {
    std::vector<std::string> vars;
    int constant = 0;
    int expected = 0;
};

struct Program {
    std::string name;
    NodeId node_role;
    std::vector<Block> blocks;
    /// Precedence edges (from, to) over block ids. Empty means the
    /// linear chain in block order.
    std::vector<std::pair<BlockId, BlockId>> precedence;
    std::vector<CriticalSection> critical_sections;
    /// Declared variables; a value means the variable is initialized
    /// before the program starts.
    std::map<std::string, std::optional<double>> variables;
    /// Expected outcomes; empty means success is trivially true.
    std::vector<OutcomeCheck> success_checks;

    const Block* find_block(BlockId id) const;
    Block* find_block(BlockId id);
    int block_index(BlockId id) const;  // -1 if absent

    /// Predecessor lists in effect (explicit edges, or the default chain).
    std::map<BlockId, std::vector<BlockId>> predecessors() const;

    /// Renumbers blocks 1..n in current order and rebuilds the linear
    /// chain precedence. Only valid for chain-shaped programs.
    void renumber_chain();
};

struct Violation {
    BlockId block = 0;  // 0 when program-level
    std::string rule;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Structural validation of all Program and Block invariants.
ValidationReport validate(const Program& p);

/// Blocks whose predecessors are all completed and that are not yet
/// completed themselves. `completed` must be downward-closed under
/// precedence; throws std::invalid_argument otherwise.
std::set<BlockId> available_blocks(const Program& p, const std::set<BlockId>& completed);

/// Hardware/processor timing constants (defaults per the trapped-ion
/// configuration).
struct TimingParams {
    Duration classical_instr_ns = 15;
    Duration quantum_instr_ns = 50'000;
    Duration gate_1q_ns = 26'600;
    Duration gate_2q_ns = 107'000;
    Duration sched_msg_ns = 60;
    Duration recv_proc_ns = 150;

    Duration gate_duration(GateKind g) const {
        return is_two_qubit(g) ? gate_2q_ns : gate_1q_ns;
    }
    Duration max_gate_ns() const { return std::max(gate_1q_ns, gate_2q_ns); }
    bool valid() const;
};

enum class ExpectDeterministic { No, Yes };

/// Deterministic duration of a block. QC blocks are stochastic and
/// return 0 unless ExpectDeterministic::Yes is passed, which throws.
Duration estimate_block_duration(const Block& b, const TimingParams& timing,
                                 ExpectDeterministic expect = ExpectDeterministic::No);

// --- serialization (line-oriented text format, see README) ---

std::string serialize(const Program& p);
Program parse_program(const std::string& text);  // throws std::runtime_error
Program load_program(const std::string& path);
void save_program(const Program& p, const std::string& path);

}  // namespace qnp
