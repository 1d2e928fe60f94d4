#pragma once

#include "qnp/program.hpp"

namespace qnp {

enum class Strategy {
    HybridOptimize,
    BlockSelfish,
    BlockCooperative,
    DeadlineFree,
    DeadlineSelfish,
    DeadlineCooperative,
    CriticalSection,
};

struct PassConfig {
    Strategy strategy = Strategy::HybridOptimize;
    int n = 1;  // gate cap for BlockCooperative
    int m = 1;  // deadline multiplier for DeadlineCooperative
    TimingParams timing;
};

/// Sinks QL blocks as late as data dependencies allow (variable
/// def-use, qubit lifetimes with diagonal-gate commutation, per-peer
/// message order). Non-QL blocks keep their relative order.
Program reorder_blocks(const Program& p);

/// Merges adjacent same-axis rotations on the same qubit within runs
/// of consecutive QL blocks, summing angle expressions; fixpoint.
Program merge_rotations(const Program& p);

/// reorder_blocks, merge_rotations, then coalescing of adjacent QL
/// blocks into single blocks.
Program hybrid_optimize(const Program& p);

/// Coalesces consecutive QL blocks, minimizing the QL block count.
Program block_selfish(const Program& p);

/// Splits QL blocks so none holds more than n gate instructions;
/// alloc/measure/free do not count. Qubits live across a split are
/// charged as load overhead on the following piece.
Program block_cooperative(const Program& p, int n);

enum class DeadlinePolicy { Free, Selfish, Cooperative };

Program assign_deadlines(const Program& p, DeadlinePolicy policy, const TimingParams& timing,
                         int m = 1);

/// Marks one critical section from the last QC block through the block
/// holding the last measurement. Throws std::runtime_error when the
/// program has no QC block or no measurement.
Program add_critical_section(const Program& p);

Program apply_strategy(const Program& p, const PassConfig& cfg);

}  // namespace qnp
