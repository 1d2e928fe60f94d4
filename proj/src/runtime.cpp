#include "qnp/runtime.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>
#include <memory>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace qnp {

const char* to_string(ProcKind p) { return p == ProcKind::CPS ? "CPS" : "QPS"; }

const char* to_string(TraceKind k) {
    switch (k) {
        case TraceKind::Start: return "start";
        case TraceKind::End: return "end";
        case TraceKind::EprAttempt: return "epr_attempt";
        case TraceKind::MsgSend: return "msg_send";
        case TraceKind::MsgRecv: return "msg_recv";
    }
    return "?";
}

Duration SimConfig::latency_between(const NodeId& a, const NodeId& b) const {
    auto it = latency.find({a, b});
    if (it != latency.end()) return it->second;
    it = latency.find({b, a});
    if (it != latency.end()) return it->second;
    return default_latency_ns;
}

std::optional<size_t> edf_select(const std::vector<SchedCandidate>& cands, Duration /*now*/) {
    std::optional<size_t> best;
    for (size_t i = 0; i < cands.size(); ++i) {
        if (!best) { best = i; continue; }
        const auto& a = cands[i];
        const auto& b = cands[*best];
        bool a_wins;
        if (a.abs_deadline.has_value() != b.abs_deadline.has_value()) {
            a_wins = a.abs_deadline.has_value();  // deadline-bearing first
        } else if (a.abs_deadline && *a.abs_deadline != *b.abs_deadline) {
            a_wins = *a.abs_deadline < *b.abs_deadline;
        } else if (a.ready_at != b.ready_at) {
            a_wins = a.ready_at < b.ready_at;
        } else if (a.instance != b.instance) {
            a_wins = a.instance < b.instance;
        } else {
            a_wins = a.block < b.block;
        }
        if (a_wins) best = i;
    }
    return best;
}

std::string Trace::to_jsonl() const {
    std::ostringstream os;
    char buf[256];
    for (const auto& e : events) {
        std::snprintf(buf, sizeof buf,
                      R"({"t":%lld,"node":"%s","proc":"%s","kind":"%s","inst":%d,"block":%d,"slice":%d)",
                      static_cast<long long>(e.time), e.node.c_str(), to_string(e.proc),
                      to_string(e.kind), e.instance, e.block, e.slice);
        os << buf;
        if (e.kind == TraceKind::EprAttempt) {
            std::snprintf(buf, sizeof buf, R"(,"elapsed":%lld,"attempts":%llu,"success":%s)",
                          static_cast<long long>(e.elapsed),
                          static_cast<unsigned long long>(e.attempts),
                          e.success ? "true" : "false");
            os << buf;
        }
        if (e.kind == TraceKind::MsgSend || e.kind == TraceKind::MsgRecv)
            os << ",\"var\":\"" << e.var << "\"";
        os << "}\n";
    }
    for (const auto& r : instances) {
        std::snprintf(buf, sizeof buf,
                      R"({"kind":"summary","inst":%d,"role":"%s","completed":%s,"first_start":%lld,"last_end":%lld,"success":%s})",
                      r.instance, r.role.c_str(), r.completed ? "true" : "false",
                      static_cast<long long>(r.first_start), static_cast<long long>(r.last_end),
                      r.success ? "true" : "false");
        os << buf << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------

namespace {

enum class EvType { Sweep, BlockEnd, MsgDeliver, BurstStart, BurstResolve, LoneBinEnd };

struct Event {
    Duration t = 0;
    uint64_t seq = 0;
    EvType type = EvType::Sweep;
    int inst = -1;
    BlockId block = 0;
    ProcKind proc = ProcKind::CPS;
    std::string var;
    double value = 0;
    int app = -1;
    int side = -1;
    int src = -1;
    uint64_t gen = 0;
    bool success = false;
    Duration elapsed = 0;
    uint64_t attempts = 0;
    int64_t bin = 0;
};

struct EventCmp {
    bool operator()(const Event& a, const Event& b) const {
        if (a.t != b.t) return a.t > b.t;
        return a.seq > b.seq;
    }
};

enum class BlockSt { Waiting, Ready, Running, Done };

struct BlockRt {
    BlockSt st = BlockSt::Waiting;
    int preds_left = 0;
    Duration ready_at = 0;
    std::optional<Duration> abs_deadline;
    Duration park_until = 0;   // QC: earliest re-dispatch time
    Duration dispatched_at = 0;
    int slices = 0;
};

struct InstRt {
    const ProgramInstance* spec = nullptr;
    size_t node_idx = 0;
    VarStore vars;
    std::vector<BlockRt> blocks;            // parallel to program.blocks
    std::unordered_map<BlockId, size_t> block_pos;
    std::map<BlockId, std::vector<BlockId>> succs;
    std::map<BlockId, BlockId> cs_last_of_first;
    std::map<QubitId, QKey> qmap;
    int blocks_left = 0;
    InstanceResult result;
    // pending CC effects between dispatch and completion
    std::vector<std::pair<std::string, double>> pending_writes;
};

struct ProcRt {
    bool busy = false;
    int inst = -1;
    BlockId block = 0;
};

struct NodeRt {
    const NodeConfig* cfg = nullptr;
    ProcRt cps, qps;
    std::optional<std::pair<int, BlockId>> cs;  // owner instance, last block of section
    int live_qubits = 0;
    std::map<std::pair<int, int>, std::vector<double>> inbox;  // (dest, src) -> FIFO values
};

struct LinkSide {
    int inst = -1;
    BlockId block = 0;
    enum class St { None, ReadyWait, Attempting } st = St::None;
    Duration avail = 0;
};

struct LinkRt {
    LinkSide side[2];
    int pairs_left = 0;
    int pairs_requested = 0;
    uint64_t gen = 1;
    LinkParams params;
    Duration cycle = 0;
    Duration wake_scheduled_until = -1;
};

struct QuantumStore {
    std::map<QKey, std::shared_ptr<DensityMatrix>> groups;
    std::map<QKey, Duration> last_touch;
    std::map<QKey, size_t> node_of;
    QKey next = 1;

    QKey fresh(size_t node, Duration t) {
        QKey k = next++;
        node_of[k] = node;
        last_touch[k] = t;
        return k;
    }

    void drop(QKey k) {
        groups.erase(k);
        last_touch.erase(k);
        node_of.erase(k);
    }

    std::shared_ptr<DensityMatrix>& group(QKey k) { return groups.at(k); }

    void merge_groups(QKey a, QKey b) {
        auto ga = groups.at(a), gb = groups.at(b);
        if (ga == gb) return;
        auto merged = std::make_shared<DensityMatrix>(DensityMatrix::merged(*ga, *gb));
        for (QKey k : merged->keys()) groups[k] = merged;
    }
};

class Simulation {
public:
    Simulation(const SimConfig& cfg, uint64_t seed) : cfg_(cfg), rng_(seed) {}

    Trace run();

private:
    const SimConfig& cfg_;
    Rng rng_;
    Duration now_ = 0;
    uint64_t seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, EventCmp> queue_;
    std::vector<NodeRt> nodes_;
    std::vector<InstRt> insts_;
    std::map<int, LinkRt> links_;
    std::map<std::pair<int, NodeId>, int> send_route_;  // (inst, peer node) -> dest inst
    QuantumStore store_;
    Trace trace_;

    void setup();
    void push(Event e) {
        e.seq = seq_++;
        queue_.push(std::move(e));
    }
    void sweep();
    bool try_dispatch(size_t node_idx, ProcKind proc);
    void dispatch_block(size_t node_idx, ProcKind proc, int inst, BlockId block);
    void finish_block(int inst, BlockId block, ProcKind proc);
    void on_block_ready(int inst, BlockId block, Duration at);
    void run_quantum_block(InstRt& ir, const Block& b, Duration dispatched_at);
    void deliver_pair(LinkRt& lr, int pair_idx);
    void release_qc_side(LinkRt& lr, int side_idx, int64_t expired_bin);
    void handle_burst_start(const Event& ev);
    void handle_burst_resolve(const Event& ev);
    ProcRt& proc_of(NodeRt& n, ProcKind p) { return p == ProcKind::CPS ? n.cps : n.qps; }
    static ProcKind proc_for(BlockType t) {
        return (t == BlockType::CL || t == BlockType::CC) ? ProcKind::CPS : ProcKind::QPS;
    }
    const NoiseModel& noise_of(size_t node_idx) const { return cfg_.nodes[node_idx].noise; }
    const TimingParams& timing_of(size_t node_idx) const { return cfg_.nodes[node_idx].timing; }
    LinkRt* link_of_app(int app) {
        auto it = links_.find(app);
        return it == links_.end() ? nullptr : &it->second;
    }
    int side_index(const LinkRt& lr, int inst) const {
        return lr.side[0].inst == inst ? 0 : 1;
    }
    void record(TraceEvent e) {
        if (cfg_.record_trace) trace_.events.push_back(std::move(e));
    }
    void dephase_to(QKey k, Duration t);
    void ensure_bin_wake(LinkRt& lr, int app, Duration from);
    [[noreturn]] void deadlock_diagnostic() const;
};

void Simulation::setup() {
    nodes_.resize(cfg_.nodes.size());
    std::map<NodeId, size_t> node_idx;
    for (size_t i = 0; i < cfg_.nodes.size(); ++i) {
        nodes_[i].cfg = &cfg_.nodes[i];
        if (!node_idx.emplace(cfg_.nodes[i].id, i).second)
            throw SimError("duplicate node id " + cfg_.nodes[i].id);
        if (!cfg_.nodes[i].timing.valid() || !cfg_.nodes[i].noise.valid())
            throw SimError("invalid node configuration " + cfg_.nodes[i].id);
    }

    insts_.resize(cfg_.instances.size());
    std::map<int, std::vector<size_t>> by_app;
    for (size_t i = 0; i < cfg_.instances.size(); ++i) {
        const auto& spec = cfg_.instances[i];
        if (static_cast<size_t>(spec.id) != i)
            throw SimError("instance ids must be dense and in order");
        auto nit = node_idx.find(spec.node);
        if (nit == node_idx.end()) throw SimError("unknown node " + spec.node);
        InstRt& ir = insts_[i];
        ir.spec = &spec;
        ir.node_idx = nit->second;
        ir.result.instance = spec.id;
        ir.result.role = spec.role;
        ir.result.arrival = spec.arrival;
        for (const auto& [name, init] : spec.program.variables)
            if (init) ir.vars[name] = *init;
        const auto& blocks = spec.program.blocks;
        ir.blocks.resize(blocks.size());
        ir.blocks_left = static_cast<int>(blocks.size());
        for (size_t b = 0; b < blocks.size(); ++b) ir.block_pos[blocks[b].id] = b;
        auto preds = spec.program.predecessors();
        for (const auto& [to, froms] : preds) {
            ir.blocks[ir.block_pos.at(to)].preds_left = static_cast<int>(froms.size());
            for (BlockId f : froms) ir.succs[f].push_back(to);
        }
        for (const auto& cs : spec.program.critical_sections)
            ir.cs_last_of_first[cs.first] = cs.last;
        if (spec.app_id >= 0) by_app[spec.app_id].push_back(i);
    }

    // message routing and entanglement pairing
    for (size_t i = 0; i < cfg_.instances.size(); ++i) {
        const auto& spec = cfg_.instances[i];
        for (const auto& b : spec.program.blocks) {
            for (const auto& in : b.instrs) {
                const NodeId* peer = nullptr;
                if (const auto* s = std::get_if<SendMsg>(&in)) peer = &s->peer;
                else if (const auto* r = std::get_if<RecvMsg>(&in)) peer = &r->peer;
                else if (const auto* e = std::get_if<EprRequest>(&in)) peer = &e->peer;
                if (!peer) continue;
                int dest = -1;
                for (size_t j : by_app[spec.app_id])
                    if (j != i && cfg_.instances[j].node == *peer) dest = static_cast<int>(j);
                if (dest < 0)
                    throw SimError("no peer instance on node " + *peer + " for app " +
                                   std::to_string(spec.app_id));
                send_route_[{static_cast<int>(i), *peer}] = dest;
            }
        }
    }

    // per-app link processes
    for (const auto& [app, members] : by_app) {
        std::vector<std::vector<int>> qc_counts;
        std::vector<size_t> qc_sides;
        for (size_t m : members) {
            std::vector<int> counts;
            for (const auto& b : cfg_.instances[m].program.blocks) {
                if (b.type != BlockType::QC) continue;
                if (b.instrs.size() != 1)
                    throw SimError("QC blocks must hold exactly one EPR request");
                counts.push_back(std::get<EprRequest>(b.instrs[0]).count);
            }
            if (!counts.empty()) {
                qc_counts.push_back(std::move(counts));
                qc_sides.push_back(m);
            }
        }
        if (qc_counts.empty()) continue;
        if (qc_counts.size() != 2 || qc_counts[0] != qc_counts[1])
            throw SimError("mismatched EPR protocol for app " + std::to_string(app));
        LinkRt lr;
        lr.side[0].inst = static_cast<int>(qc_sides[0]);
        lr.side[1].inst = static_cast<int>(qc_sides[1]);
        lr.params = cfg_.link;
        if (auto it = cfg_.app_links.find(app); it != cfg_.app_links.end()) lr.params = it->second;
        lr.cycle = t_cycle(lr.params);
        if (!cfg_.schedule.valid()) throw SimError("invalid network schedule");
        if (cfg_.schedule.next_owned_bin(app, 0) < 0)
            throw SimError("app " + std::to_string(app) + " not in network schedule");
        if (cfg_.schedule.bin_length_ns < lr.cycle)
            throw SimError("bin shorter than one attempt cycle");
        links_.emplace(app, std::move(lr));
    }

    for (size_t i = 0; i < insts_.size(); ++i) {
        const auto& spec = cfg_.instances[i];
        for (size_t b = 0; b < insts_[i].blocks.size(); ++b)
            if (insts_[i].blocks[b].preds_left == 0)
                on_block_ready(static_cast<int>(i), spec.program.blocks[b].id, spec.arrival);
        push({.t = spec.arrival, .type = EvType::Sweep});
    }
}

void Simulation::on_block_ready(int inst, BlockId block, Duration at) {
    InstRt& ir = insts_[inst];
    size_t pos = ir.block_pos.at(block);
    BlockRt& brt = ir.blocks[pos];
    brt.st = BlockSt::Ready;
    brt.ready_at = at;
    const Block& b = ir.spec->program.blocks[pos];
    if (b.deadline) brt.abs_deadline = at + *b.deadline;
    if (auto it = ir.cs_last_of_first.find(block); it != ir.cs_last_of_first.end()) {
        // the critical section engages as soon as its first block is
        // released; a section held by another instance defers it to
        // dispatch time
        NodeRt& node = nodes_[ir.node_idx];
        if (!node.cs) node.cs = {{inst, it->second}};
    }
    if (b.type == BlockType::QC) {
        LinkRt* lr = link_of_app(ir.spec->app_id);
        if (!lr) throw SimError("QC block without link");
        int s = side_index(*lr, inst);
        lr->side[s].block = block;
        lr->side[s].st = LinkSide::St::ReadyWait;
        if (lr->pairs_left == 0) {
            lr->pairs_requested = std::get<EprRequest>(b.instrs[0]).count;
            lr->pairs_left = lr->pairs_requested;
        }
    }
}

void Simulation::sweep() {
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t n = 0; n < nodes_.size(); ++n) {
            if (try_dispatch(n, ProcKind::CPS)) changed = true;
            if (try_dispatch(n, ProcKind::QPS)) changed = true;
        }
    }
}

bool Simulation::try_dispatch(size_t node_idx, ProcKind proc) {
    NodeRt& node = nodes_[node_idx];
    if (proc_of(node, proc).busy) return false;
    std::vector<SchedCandidate> cands;
    std::vector<std::pair<int, BlockId>> refs;
    for (size_t i = 0; i < insts_.size(); ++i) {
        InstRt& ir = insts_[i];
        if (ir.node_idx != node_idx) continue;
        if (node.cs && node.cs->first != static_cast<int>(i)) continue;
        for (size_t b = 0; b < ir.blocks.size(); ++b) {
            BlockRt& brt = ir.blocks[b];
            if (brt.st != BlockSt::Ready) continue;
            const Block& blk = ir.spec->program.blocks[b];
            if (proc_for(blk.type) != proc) continue;
            if (brt.ready_at > now_ || brt.park_until > now_) continue;
            if (blk.type == BlockType::CC) {
                // receive blocks are dispatchable only with messages present
                std::map<int, int> needed;  // src instance -> count
                for (const auto& in : blk.instrs)
                    if (const auto* r = std::get_if<RecvMsg>(&in))
                        needed[send_route_.at({static_cast<int>(i), r->peer})]++;
                bool ok = true;
                for (const auto& [src, cnt] : needed) {
                    auto it = node.inbox.find({static_cast<int>(i), src});
                    if (it == node.inbox.end() || static_cast<int>(it->second.size()) < cnt) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) continue;
            } else if (blk.type == BlockType::QC) {
                LinkRt* lr = link_of_app(ir.spec->app_id);
                int64_t bin = cfg_.schedule.bin_index(now_);
                if (cfg_.schedule.owner(bin) != ir.spec->app_id) {
                    ensure_bin_wake(*lr, ir.spec->app_id, now_);
                    continue;
                }
                Duration after_dispatch = now_ + timing_of(node_idx).sched_msg_ns;
                if (cfg_.schedule.bin_end(bin) - after_dispatch < lr->cycle) {
                    ensure_bin_wake(*lr, ir.spec->app_id, cfg_.schedule.bin_end(bin));
                    continue;
                }
                int other = 1 - side_index(*lr, static_cast<int>(i));
                if (lr->side[other].st == LinkSide::St::None) continue;  // peer not ready yet
            }
            cands.push_back({brt.abs_deadline, brt.ready_at, static_cast<int>(i), blk.id});
            refs.emplace_back(static_cast<int>(i), blk.id);
        }
    }
    auto pick = edf_select(cands, now_);
    if (!pick) return false;
    dispatch_block(node_idx, proc, refs[*pick].first, refs[*pick].second);
    return true;
}

void Simulation::dispatch_block(size_t node_idx, ProcKind proc, int inst, BlockId block) {
    NodeRt& node = nodes_[node_idx];
    InstRt& ir = insts_[inst];
    size_t pos = ir.block_pos.at(block);
    BlockRt& brt = ir.blocks[pos];
    const Block& blk = ir.spec->program.blocks[pos];
    const TimingParams& timing = timing_of(node_idx);

    brt.st = BlockSt::Running;
    brt.dispatched_at = now_;
    ProcRt& p = proc_of(node, proc);
    p.busy = true;
    p.inst = inst;
    p.block = block;
    if (ir.result.first_start < 0) ir.result.first_start = now_;
    record({now_, node.cfg->id, proc, TraceKind::Start, inst, block, brt.slices});

    if (auto it = ir.cs_last_of_first.find(block); it != ir.cs_last_of_first.end())
        if (!node.cs) node.cs = {{inst, it->second}};

    if (blk.type == BlockType::QC) {
        LinkRt& lr = *link_of_app(ir.spec->app_id);
        int s = side_index(lr, inst);
        lr.side[s].st = LinkSide::St::Attempting;
        lr.side[s].avail = now_ + timing.sched_msg_ns;
        int other = 1 - s;
        if (lr.side[other].st == LinkSide::St::Attempting) {
            lr.gen++;
            Duration t0 = std::max(lr.side[0].avail, lr.side[1].avail);
            push({.t = t0, .type = EvType::BurstStart, .app = ir.spec->app_id, .gen = lr.gen});
        } else {
            int64_t bin = cfg_.schedule.bin_index(now_);
            push({.t = cfg_.schedule.bin_end(bin),
                  .type = EvType::LoneBinEnd,
                  .app = ir.spec->app_id,
                  .side = s,
                  .gen = lr.gen,
                  .bin = bin});
        }
        return;
    }

    Duration duration = estimate_block_duration(blk, timing);
    Duration body_start = now_ + timing.sched_msg_ns;

    if (blk.type == BlockType::CC) {
        // consume receives, schedule sends, buffer writes until completion
        Duration t = body_start;
        VarStore overlay;
        auto lookup = [&](const std::string& v) -> double {
            if (auto it = overlay.find(v); it != overlay.end()) return it->second;
            if (auto it = ir.vars.find(v); it != ir.vars.end()) return it->second;
            throw SimError("send of undefined variable " + v);
        };
        for (const auto& in : blk.instrs) {
            if (const auto* s = std::get_if<SendMsg>(&in)) {
                Duration end = t + timing.classical_instr_ns;
                int dest = send_route_.at({inst, s->peer});
                Duration arrival =
                    end + cfg_.latency_between(node.cfg->id, s->peer);
                push({.t = arrival,
                      .type = EvType::MsgDeliver,
                      .inst = dest,
                      .var = s->payload,
                      .value = lookup(s->payload),
                      .src = inst});
                record({end, node.cfg->id, proc, TraceKind::MsgSend, inst, block, brt.slices, 0, 0,
                        false, s->payload});
                t = end;
            } else if (const auto* r = std::get_if<RecvMsg>(&in)) {
                Duration end = t + timing.classical_instr_ns + timing.recv_proc_ns;
                int src = send_route_.at({inst, r->peer});
                auto& q = node.inbox.at({inst, src});
                overlay[r->dest] = q.front();
                q.erase(q.begin());
                if (q.empty()) node.inbox.erase({inst, src});
                ir.pending_writes.emplace_back(r->dest, overlay[r->dest]);
                record({end, node.cfg->id, proc, TraceKind::MsgRecv, inst, block, brt.slices, 0, 0,
                        false, r->dest});
                t = end;
            }
        }
    }

    push({.t = body_start + duration,
          .type = EvType::BlockEnd,
          .inst = inst,
          .block = block,
          .proc = proc});
}

void Simulation::dephase_to(QKey k, Duration t) {
    Duration last = store_.last_touch.at(k);
    if (t > last) {
        idle_dephase(*store_.group(k), k, t - last, noise_of(store_.node_of.at(k)));
        store_.last_touch[k] = t;
    }
}

void Simulation::run_quantum_block(InstRt& ir, const Block& b, Duration dispatched_at) {
    NodeRt& node = nodes_[ir.node_idx];
    const TimingParams& timing = timing_of(ir.node_idx);
    const NoiseModel& noise = noise_of(ir.node_idx);
    Duration t = dispatched_at + timing.sched_msg_ns +
                 static_cast<Duration>(b.load_qubits) * timing.quantum_instr_ns;
    auto key_of = [&](QubitId q) -> QKey {
        auto it = ir.qmap.find(q);
        if (it == ir.qmap.end()) throw SimError("operation on dead qubit");
        return it->second;
    };
    for (const auto& in : b.instrs) {
        Duration s = t;
        if (const auto* a = std::get_if<QAlloc>(&in)) {
            t += timing.quantum_instr_ns;
            if (ir.qmap.count(a->qubit)) throw SimError("allocation of live qubit");
            if (++node.live_qubits > node.cfg->num_qubits)
                throw SimError("qubit capacity exhausted on " + node.cfg->id);
            QKey k = store_.fresh(ir.node_idx, t);
            store_.groups[k] =
                std::make_shared<DensityMatrix>(DensityMatrix::single(k, a->initial));
            ir.qmap[a->qubit] = k;
        } else if (const auto* g = std::get_if<QGate>(&in)) {
            t += timing.quantum_instr_ns + timing.gate_duration(g->gate);
            QKey k0 = key_of(g->q0);
            double angle = 0;
            if (is_rotation(g->gate)) {
                auto v = g->angle.eval(ir.vars);
                if (!v) throw SimError("gate angle uses undefined variable");
                angle = *v;
            }
            if (is_two_qubit(g->gate)) {
                QKey k1 = key_of(g->q1);
                dephase_to(k0, s);
                dephase_to(k1, s);
                store_.merge_groups(k0, k1);
                apply_gate(*store_.group(k0), g->gate, k0, k1, angle, noise);
                store_.last_touch[k0] = t;
                store_.last_touch[k1] = t;
            } else {
                dephase_to(k0, s);
                apply_gate(*store_.group(k0), g->gate, k0, -1, angle, noise);
                store_.last_touch[k0] = t;
            }
        } else if (const auto* m = std::get_if<QMeasure>(&in)) {
            t += timing.quantum_instr_ns;
            QKey k = key_of(m->qubit);
            dephase_to(k, s);
            auto grp = store_.group(k);
            int outcome = grp->measure(k, m->basis, rng_.uniform());
            ir.vars[m->dest] = outcome;
            store_.drop(k);
            ir.qmap.erase(m->qubit);
            --node.live_qubits;
        } else if (const auto* f = std::get_if<QFree>(&in)) {
            t += timing.quantum_instr_ns;
            QKey k = key_of(f->qubit);
            auto grp = store_.group(k);
            if (grp->num_qubits() > 1) grp->remove(k);
            store_.drop(k);
            ir.qmap.erase(f->qubit);
            --node.live_qubits;
        }
    }
}

void Simulation::finish_block(int inst, BlockId block, ProcKind proc) {
    InstRt& ir = insts_[inst];
    NodeRt& node = nodes_[ir.node_idx];
    size_t pos = ir.block_pos.at(block);
    BlockRt& brt = ir.blocks[pos];
    const Block& blk = ir.spec->program.blocks[pos];

    if (blk.type == BlockType::CL) {
        for (const auto& in : blk.instrs) {
            const auto& c = std::get<ClassicalCompute>(in);
            if (c.dest) {
                auto v = c.expr.eval(ir.vars);
                if (!v) throw SimError("compute uses undefined variable");
                ir.vars[*c.dest] = *v;
            }
        }
    } else if (blk.type == BlockType::CC) {
        for (auto& [var, val] : ir.pending_writes) ir.vars[var] = val;
        ir.pending_writes.clear();
    } else if (blk.type == BlockType::QL) {
        run_quantum_block(ir, blk, brt.dispatched_at);
    }

    record({now_, node.cfg->id, proc, TraceKind::End, inst, block, brt.slices});
    brt.slices++;
    brt.st = BlockSt::Done;
    ProcRt& p = proc_of(node, proc);
    p.busy = false;
    p.inst = -1;

    if (node.cs && node.cs->first == inst && node.cs->second == block) node.cs.reset();

    ir.result.last_end = now_;
    if (--ir.blocks_left == 0) {
        ir.result.completed = true;
        ir.result.final_vars = ir.vars;
        bool ok = true;
        for (const auto& ch : ir.spec->program.success_checks) {
            int x = ch.constant;
            for (const auto& v : ch.vars) {
                auto it = ir.vars.find(v);
                if (it == ir.vars.end()) { ok = false; break; }
                x ^= static_cast<int>(it->second) & 1;
            }
            if (x != ch.expected) ok = false;
            if (!ok) break;
        }
        ir.result.success = ok;
    }
    for (BlockId s : ir.succs[block]) {
        BlockRt& srt = ir.blocks[ir.block_pos.at(s)];
        if (--srt.preds_left == 0) on_block_ready(inst, s, now_);
    }
}

void Simulation::ensure_bin_wake(LinkRt& lr, int app, Duration from) {
    int64_t bin = cfg_.schedule.next_owned_bin(app, from);
    if (bin < 0) return;
    Duration t = cfg_.schedule.bin_start(bin);
    if (lr.wake_scheduled_until >= t) return;
    lr.wake_scheduled_until = t;
    push({.t = t, .type = EvType::Sweep});
}

void Simulation::release_qc_side(LinkRt& lr, int side_idx, int64_t expired_bin) {
    LinkSide& side = lr.side[side_idx];
    InstRt& ir = insts_[side.inst];
    NodeRt& node = nodes_[ir.node_idx];
    BlockRt& brt = ir.blocks[ir.block_pos.at(side.block)];
    record({now_, node.cfg->id, ProcKind::QPS, TraceKind::End, side.inst, side.block, brt.slices});
    brt.slices++;
    brt.st = BlockSt::Ready;  // keeps its original ready_at for FIFO
    brt.park_until = 0;
    int64_t nb = cfg_.schedule.next_owned_bin(ir.spec->app_id, cfg_.schedule.bin_end(expired_bin));
    if (nb < 0) throw SimError("app lost its schedule slot");
    brt.park_until = cfg_.schedule.bin_start(nb);
    push({.t = brt.park_until, .type = EvType::Sweep});
    ProcRt& p = proc_of(node, ProcKind::QPS);
    p.busy = false;
    p.inst = -1;
    side.st = LinkSide::St::ReadyWait;
}

void Simulation::deliver_pair(LinkRt& lr, int pair_idx) {
    QKey keys[2];
    for (int s = 0; s < 2; ++s) {
        LinkSide& side = lr.side[s];
        InstRt& ir = insts_[side.inst];
        NodeRt& node = nodes_[ir.node_idx];
        const Block& blk =
            ir.spec->program.blocks[ir.block_pos.at(side.block)];
        const auto& req = std::get<EprRequest>(blk.instrs[0]);
        QubitId vq = req.dest_qubits.at(static_cast<size_t>(pair_idx));
        if (ir.qmap.count(vq)) throw SimError("EPR delivery to live qubit");
        if (++node.live_qubits > node.cfg->num_qubits)
            throw SimError("qubit capacity exhausted on " + node.cfg->id);
        keys[s] = store_.fresh(ir.node_idx, now_);
        ir.qmap[vq] = keys[s];
    }
    // pair fidelity comes from the first side's node model
    auto dm = std::make_shared<DensityMatrix>(
        make_epr(noise_of(insts_[lr.side[0].inst].node_idx), keys[0], keys[1]));
    store_.groups[keys[0]] = dm;
    store_.groups[keys[1]] = dm;
}

void Simulation::handle_burst_start(const Event& ev) {
    LinkRt& lr = links_.at(ev.app);
    if (ev.gen != lr.gen) return;
    int64_t bin = cfg_.schedule.bin_index(now_);
    if (cfg_.schedule.owner(bin) != ev.app) {
        // dispatch latency spilled past the owned bin
        lr.gen++;
        release_qc_side(lr, 0, bin - 1 >= 0 ? bin - 1 : 0);
        release_qc_side(lr, 1, bin - 1 >= 0 ? bin - 1 : 0);
        return;
    }
    Duration remaining = cfg_.schedule.bin_end(bin) - now_;
    EprSample s = sample_epr(lr.params, remaining, rng_);
    for (int k = 0; k < 2; ++k) {
        const LinkSide& side = lr.side[k];
        const InstRt& ir = insts_[side.inst];
        record({now_, nodes_[ir.node_idx].cfg->id, ProcKind::QPS, TraceKind::EprAttempt,
                side.inst, side.block, ir.blocks.at(ir.block_pos.at(side.block)).slices,
                s.elapsed_ns, s.attempts, s.success});
    }
    if (!s.success && s.elapsed_ns == 0) {
        lr.gen++;
        release_qc_side(lr, 0, bin);
        release_qc_side(lr, 1, bin);
        return;
    }
    push({.t = now_ + s.elapsed_ns,
          .type = EvType::BurstResolve,
          .app = ev.app,
          .gen = lr.gen,
          .success = s.success,
          .bin = bin});
}

void Simulation::handle_burst_resolve(const Event& ev) {
    LinkRt& lr = links_.at(ev.app);
    if (ev.gen != lr.gen) return;
    if (!ev.success) {
        lr.gen++;
        release_qc_side(lr, 0, ev.bin);
        release_qc_side(lr, 1, ev.bin);
        return;
    }
    deliver_pair(lr, lr.pairs_requested - lr.pairs_left);
    if (--lr.pairs_left > 0) {
        lr.gen++;
        push({.t = now_, .type = EvType::BurstStart, .app = ev.app, .gen = lr.gen});
        return;
    }
    lr.gen++;
    for (int s = 0; s < 2; ++s) {
        LinkSide& side = lr.side[s];
        side.st = LinkSide::St::None;
        finish_block(side.inst, side.block, ProcKind::QPS);
    }
}

Trace Simulation::run() {
    setup();
    while (!queue_.empty()) {
        Event ev = queue_.top();
        queue_.pop();
        if (ev.t < now_) throw SimError("time went backwards");
        now_ = ev.t;
        if (now_ > cfg_.max_sim_time_ns)
            throw SimError("simulation horizon exceeded (livelock?)");
        switch (ev.type) {
            case EvType::Sweep: break;
            case EvType::BlockEnd: finish_block(ev.inst, ev.block, ev.proc); break;
            case EvType::MsgDeliver: {
                InstRt& ir = insts_[ev.inst];
                nodes_[ir.node_idx].inbox[{ev.inst, ev.src}].push_back(ev.value);
                break;
            }
            case EvType::BurstStart: handle_burst_start(ev); break;
            case EvType::BurstResolve: handle_burst_resolve(ev); break;
            case EvType::LoneBinEnd: {
                LinkRt& lr = links_.at(ev.app);
                if (ev.gen != lr.gen) break;
                if (lr.side[ev.side].st == LinkSide::St::Attempting) {
                    lr.gen++;
                    release_qc_side(lr, ev.side, ev.bin);
                }
                break;
            }
        }
        sweep();
        bool all_done = true;
        for (const auto& ir : insts_)
            if (!ir.result.completed) { all_done = false; break; }
        if (all_done) break;
    }
    for (const auto& ir : insts_)
        if (!ir.result.completed) deadlock_diagnostic();

    std::stable_sort(trace_.events.begin(), trace_.events.end(),
                     [](const TraceEvent& a, const TraceEvent& b) { return a.time < b.time; });
    for (auto& ir : insts_) trace_.instances.push_back(std::move(ir.result));
    return std::move(trace_);
}

void Simulation::deadlock_diagnostic() const {
    std::ostringstream os;
    os << "deadlock: incomplete instances:";
    for (const auto& ir : insts_) {
        if (ir.result.completed) continue;
        os << " [inst " << ir.result.instance << " (" << ir.result.role << ") blocks";
        for (size_t b = 0; b < ir.blocks.size(); ++b) {
            if (ir.blocks[b].st == BlockSt::Done) continue;
            os << " " << ir.spec->program.blocks[b].id
               << (ir.blocks[b].st == BlockSt::Ready ? "(ready)"
                   : ir.blocks[b].st == BlockSt::Running ? "(running)" : "(waiting)");
        }
        os << "]";
    }
    throw SimError(os.str());
}

}  // namespace

Trace run_simulation(const SimConfig& cfg, uint64_t seed) {
    Simulation sim(cfg, seed);
    return sim.run();
}

bool success_of(const ProgramInstance& inst, const Trace& trace) {
    for (const auto& r : trace.instances) {
        if (r.instance != inst.id) continue;
        if (!r.completed) throw SimError("instance did not complete");
        return r.success;
    }
    throw SimError("instance not in trace");
}

}  // namespace qnp
