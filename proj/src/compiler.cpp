#include "qnp/compiler.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace qnp {

namespace {

// Commutation classes for qubit accesses. Z-diagonal operations commute
// with each other, as do X-diagonal ones; everything else conflicts.
enum class QAccess { Alloc, XDiag, ZDiag, Other, Kill };

bool accesses_commute(QAccess a, QAccess b) {
    return (a == QAccess::XDiag && b == QAccess::XDiag) ||
           (a == QAccess::ZDiag && b == QAccess::ZDiag);
}

QAccess gate_access(GateKind g) {
    switch (g) {
        case GateKind::X:
        case GateKind::RX: return QAccess::XDiag;
        case GateKind::Z:
        case GateKind::RZ:
        case GateKind::CZ: return QAccess::ZDiag;
        default: return QAccess::Other;
    }
}

struct BlockFootprint {
    std::set<std::string> reads, writes;
    std::multimap<QubitId, QAccess> qubits;
    std::set<NodeId> msg_peers;  // classical I/O and EPR, ordered per peer
};

BlockFootprint footprint(const Block& b) {
    BlockFootprint f;
    for (const auto& in : b.instrs) {
        if (const auto* c = std::get_if<ClassicalCompute>(&in)) {
            if (c->dest) {
                for (auto& v : c->expr.free_vars()) f.reads.insert(v);
                f.writes.insert(*c->dest);
            }
        } else if (const auto* s = std::get_if<SendMsg>(&in)) {
            f.reads.insert(s->payload);
            f.msg_peers.insert(s->peer);
        } else if (const auto* r = std::get_if<RecvMsg>(&in)) {
            f.writes.insert(r->dest);
            f.msg_peers.insert(r->peer);
        } else if (const auto* a = std::get_if<QAlloc>(&in)) {
            f.qubits.emplace(a->qubit, QAccess::Alloc);
        } else if (const auto* g = std::get_if<QGate>(&in)) {
            f.qubits.emplace(g->q0, gate_access(g->gate));
            if (is_two_qubit(g->gate)) f.qubits.emplace(g->q1, gate_access(g->gate));
            if (is_rotation(g->gate))
                for (auto& v : g->angle.free_vars()) f.reads.insert(v);
        } else if (const auto* m = std::get_if<QMeasure>(&in)) {
            f.qubits.emplace(m->qubit, QAccess::Kill);
            f.writes.insert(m->dest);
        } else if (const auto* q = std::get_if<QFree>(&in)) {
            f.qubits.emplace(q->qubit, QAccess::Kill);
        } else if (const auto* e = std::get_if<EprRequest>(&in)) {
            for (QubitId q : e->dest_qubits) f.qubits.emplace(q, QAccess::Alloc);
            f.msg_peers.insert(e->peer);
        }
    }
    return f;
}

bool intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
    for (const auto& x : a)
        if (b.count(x)) return true;
    return false;
}

/// Order between two blocks must be preserved.
bool depends(const BlockFootprint& a, const BlockFootprint& b) {
    if (intersects(a.writes, b.reads) || intersects(a.reads, b.writes) ||
        intersects(a.writes, b.writes))
        return true;
    for (const auto& p : a.msg_peers)
        if (b.msg_peers.count(p)) return true;
    for (const auto& [q, acc] : a.qubits) {
        auto range = b.qubits.equal_range(q);
        for (auto it = range.first; it != range.second; ++it)
            if (!accesses_commute(acc, it->second)) return true;
    }
    return false;
}

void require_chain(const Program& p, const char* pass) {
    if (!p.precedence.empty())
        throw std::invalid_argument(std::string(pass) + ": explicit precedence not supported");
    if (!p.critical_sections.empty())
        throw std::invalid_argument(std::string(pass) + ": critical sections already placed");
}

std::set<QubitId> live_before(const Program& p, size_t block_idx) {
    std::set<QubitId> live;
    for (size_t i = 0; i < block_idx; ++i) {
        for (const auto& in : p.blocks[i].instrs) {
            if (const auto* a = std::get_if<QAlloc>(&in)) live.insert(a->qubit);
            else if (const auto* e = std::get_if<EprRequest>(&in))
                live.insert(e->dest_qubits.begin(), e->dest_qubits.end());
            else if (const auto* m = std::get_if<QMeasure>(&in)) live.erase(m->qubit);
            else if (const auto* f = std::get_if<QFree>(&in)) live.erase(f->qubit);
        }
    }
    return live;
}

int gate_count(const Block& b) {
    int n = 0;
    for (const auto& in : b.instrs)
        if (std::holds_alternative<QGate>(in)) ++n;
    return n;
}

}  // namespace

namespace {

bool alloc_only(const Block& b) {
    for (const auto& in : b.instrs)
        if (!std::holds_alternative<QAlloc>(in)) return false;
    return !b.instrs.empty();
}

// single-qubit rotation block on one qubit: a candidate for deferred
// merging with a later same-axis rotation
std::optional<std::pair<QubitId, GateKind>> rotation_only(const Block& b) {
    std::optional<std::pair<QubitId, GateKind>> sig;
    for (const auto& in : b.instrs) {
        const auto* g = std::get_if<QGate>(&in);
        if (!g || !is_rotation(g->gate)) return std::nullopt;
        if (sig && (sig->first != g->q0 || sig->second != g->gate)) return std::nullopt;
        sig = {g->q0, g->gate};
    }
    return sig;
}

bool has_same_axis_rotation(const Block& b, QubitId q, GateKind axis) {
    for (const auto& in : b.instrs)
        if (const auto* g = std::get_if<QGate>(&in))
            if (g->gate == axis && g->q0 == q) return true;
    return false;
}

}  // namespace

Program reorder_blocks(const Program& p) {
    require_chain(p, "reorder_blocks");
    Program out = p;
    auto& blocks = out.blocks;
    std::vector<BlockFootprint> fp;
    fp.reserve(blocks.size());
    for (const auto& b : blocks) fp.push_back(footprint(b));

    // Two kinds of QL blocks sink, rightmost-first: allocation-only
    // blocks move to just before the first use of their qubits, and
    // single-axis rotation blocks move to just before a later block
    // carrying a same-axis rotation on the same qubit (enabling a
    // merge). Other quantum work keeps its place; parking it behind
    // unrelated message waits would only delay it.
    for (int i = static_cast<int>(blocks.size()) - 1; i >= 0; --i) {
        if (blocks[i].type != BlockType::QL) continue;
        size_t j = static_cast<size_t>(i);
        if (alloc_only(blocks[j])) {
            while (j + 1 < blocks.size() && !depends(fp[j], fp[j + 1])) {
                std::swap(blocks[j], blocks[j + 1]);
                std::swap(fp[j], fp[j + 1]);
                ++j;
            }
        } else if (auto sig = rotation_only(blocks[j])) {
            // find a reachable merge target before committing to move
            size_t target = 0;
            for (size_t k = j + 1; k < blocks.size(); ++k) {
                if (blocks[k].type == BlockType::QL &&
                    has_same_axis_rotation(blocks[k], sig->first, sig->second)) {
                    target = k;
                    break;
                }
                if (depends(fp[j], fp[k])) break;  // unreachable past this block
            }
            while (target != 0 && j + 1 < target) {
                std::swap(blocks[j], blocks[j + 1]);
                std::swap(fp[j], fp[j + 1]);
                ++j;
            }
        }
    }
    out.renumber_chain();
    return out;
}

Program merge_rotations(const Program& p) {
    require_chain(p, "merge_rotations");
    Program out = p;
    bool changed = true;
    while (changed) {
        changed = false;
        // locate maximal runs of adjacent QL blocks
        size_t i = 0;
        while (i < out.blocks.size()) {
            if (out.blocks[i].type != BlockType::QL) { ++i; continue; }
            size_t end = i;
            while (end + 1 < out.blocks.size() && out.blocks[end + 1].type == BlockType::QL) ++end;
            // instruction positions in the run, per qubit
            struct Pos { size_t blk, idx; };
            std::map<QubitId, std::vector<Pos>> per_qubit;
            for (size_t b = i; b <= end; ++b) {
                for (size_t k = 0; k < out.blocks[b].instrs.size(); ++k) {
                    const auto& in = out.blocks[b].instrs[k];
                    auto touch = [&](QubitId q) { per_qubit[q].push_back({b, k}); };
                    if (const auto* a = std::get_if<QAlloc>(&in)) touch(a->qubit);
                    else if (const auto* g = std::get_if<QGate>(&in)) {
                        touch(g->q0);
                        if (is_two_qubit(g->gate)) touch(g->q1);
                    } else if (const auto* m = std::get_if<QMeasure>(&in)) touch(m->qubit);
                    else if (const auto* f = std::get_if<QFree>(&in)) touch(f->qubit);
                }
            }
            for (auto& [q, seq] : per_qubit) {
                for (size_t k = 0; k + 1 < seq.size() && !changed; ++k) {
                    auto* g1 = std::get_if<QGate>(&out.blocks[seq[k].blk].instrs[seq[k].idx]);
                    auto* g2 = std::get_if<QGate>(&out.blocks[seq[k + 1].blk].instrs[seq[k + 1].idx]);
                    if (!g1 || !g2) continue;
                    if (!is_rotation(g1->gate) || g1->gate != g2->gate) continue;
                    if (is_two_qubit(g1->gate)) continue;
                    // merge into the later gate; drop the earlier one
                    g2->angle = g1->angle + g2->angle;
                    out.blocks[seq[k].blk].instrs.erase(out.blocks[seq[k].blk].instrs.begin() +
                                                        static_cast<long>(seq[k].idx));
                    changed = true;
                }
                if (changed) break;
            }
            if (changed) break;
            i = end + 1;
        }
        // drop blocks emptied by merging
        std::erase_if(out.blocks, [](const Block& b) { return b.instrs.empty(); });
    }
    out.renumber_chain();
    return out;
}

namespace {

Program coalesce_ql_runs(const Program& p) {
    Program out = p;
    std::vector<Block> merged;
    for (auto& b : out.blocks) {
        if (!merged.empty() && merged.back().type == BlockType::QL && b.type == BlockType::QL) {
            merged.back().instrs.insert(merged.back().instrs.end(), b.instrs.begin(),
                                        b.instrs.end());
            // the merged block keeps the first piece's deadline and load count
        } else {
            merged.push_back(std::move(b));
        }
    }
    out.blocks = std::move(merged);
    out.renumber_chain();
    return out;
}

}  // namespace

Program hybrid_optimize(const Program& p) {
    require_chain(p, "hybrid_optimize");
    return coalesce_ql_runs(merge_rotations(reorder_blocks(p)));
}

Program block_selfish(const Program& p) {
    require_chain(p, "block_selfish");
    return coalesce_ql_runs(p);
}

Program block_cooperative(const Program& p, int n) {
    require_chain(p, "block_cooperative");
    if (n < 1) throw std::invalid_argument("gate cap must be >= 1");
    Program out;
    out.name = p.name;
    out.node_role = p.node_role;
    out.variables = p.variables;
    out.success_checks = p.success_checks;
    for (size_t bi = 0; bi < p.blocks.size(); ++bi) {
        const Block& b = p.blocks[bi];
        if (b.type != BlockType::QL || gate_count(b) <= n) {
            out.blocks.push_back(b);
            continue;
        }
        std::set<QubitId> live = live_before(p, bi);
        Block piece;
        piece.type = BlockType::QL;
        piece.deadline = b.deadline;
        piece.load_qubits = b.load_qubits;
        int gates_here = 0;
        bool first = true;
        for (const auto& in : b.instrs) {
            bool is_gate = std::holds_alternative<QGate>(in);
            if (is_gate && gates_here == n) {
                out.blocks.push_back(std::move(piece));
                piece = Block{};
                piece.type = BlockType::QL;
                piece.load_qubits = static_cast<int>(live.size());
                gates_here = 0;
                first = false;
            }
            piece.instrs.push_back(in);
            if (is_gate) ++gates_here;
            if (const auto* a = std::get_if<QAlloc>(&in)) live.insert(a->qubit);
            else if (const auto* m = std::get_if<QMeasure>(&in)) live.erase(m->qubit);
            else if (const auto* f = std::get_if<QFree>(&in)) live.erase(f->qubit);
        }
        (void)first;
        if (!piece.instrs.empty()) out.blocks.push_back(std::move(piece));
    }
    out.renumber_chain();
    return out;
}

Program assign_deadlines(const Program& p, DeadlinePolicy policy, const TimingParams& timing,
                         int m) {
    if (policy == DeadlinePolicy::Cooperative && m < 1)
        throw std::invalid_argument("deadline multiplier must be >= 1");
    Program out = p;
    for (size_t i = 0; i < out.blocks.size(); ++i) {
        Block& b = out.blocks[i];
        if (policy == DeadlinePolicy::Free || i == 0) {
            // the first block of a program carries no deadline
            b.deadline.reset();
            continue;
        }
        bool quantum = b.type == BlockType::QL || b.type == BlockType::QC;
        switch (policy) {
            case DeadlinePolicy::Selfish:
                b.deadline = quantum ? timing.quantum_instr_ns : timing.classical_instr_ns;
                break;
            case DeadlinePolicy::Cooperative:
                b.deadline = quantum
                                 ? static_cast<Duration>(m) *
                                       (timing.quantum_instr_ns + timing.max_gate_ns())
                                 : static_cast<Duration>(m) * timing.classical_instr_ns;
                break;
            default: break;
        }
    }
    return out;
}

Program add_critical_section(const Program& p) {
    int last_qc = -1, last_meas = -1;
    for (size_t i = 0; i < p.blocks.size(); ++i) {
        if (p.blocks[i].type == BlockType::QC) last_qc = static_cast<int>(i);
        for (const auto& in : p.blocks[i].instrs)
            if (std::holds_alternative<QMeasure>(in)) last_meas = static_cast<int>(i);
    }
    if (last_qc < 0 || last_meas < 0 || last_meas < last_qc)
        throw std::runtime_error("critical section not applicable");
    Program out = p;
    out.critical_sections.clear();
    out.critical_sections.push_back({p.blocks[last_qc].id, p.blocks[last_meas].id});
    return out;
}

Program apply_strategy(const Program& p, const PassConfig& cfg) {
    switch (cfg.strategy) {
        case Strategy::HybridOptimize: return hybrid_optimize(p);
        case Strategy::BlockSelfish: return block_selfish(p);
        case Strategy::BlockCooperative: return block_cooperative(p, cfg.n);
        case Strategy::DeadlineFree: return assign_deadlines(p, DeadlinePolicy::Free, cfg.timing);
        case Strategy::DeadlineSelfish:
            return assign_deadlines(p, DeadlinePolicy::Selfish, cfg.timing);
        case Strategy::DeadlineCooperative:
            return assign_deadlines(p, DeadlinePolicy::Cooperative, cfg.timing, cfg.m);
        case Strategy::CriticalSection: return add_critical_section(p);
    }
    throw std::invalid_argument("unknown strategy");
}

}  // namespace qnp
