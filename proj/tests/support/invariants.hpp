#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "qnp/runtime.hpp"

namespace qnp::testsupport {

/// Checks the runtime trace invariants: processor exclusivity and
/// non-overlap, slice-level non-preemption, bin discipline of
/// entanglement attempts, critical-section atomicity, and precedence.
/// Returns human-readable violations (empty = all good).
inline std::vector<std::string> check_trace_invariants(const SimConfig& cfg, const Trace& tr) {
    std::vector<std::string> bad;
    auto fail = [&](const std::string& s) { bad.push_back(s); };

    std::map<int, const ProgramInstance*> inst_of;
    for (const auto& i : cfg.instances) inst_of[i.id] = &i;

    // processor walks: exclusivity, non-preemption, matching start/end
    struct Running {
        bool busy = false;
        int inst = -1;
        BlockId block = 0;
        int slice = 0;
    };
    std::map<std::pair<NodeId, ProcKind>, Running> procs;
    for (const auto& e : tr.events) {
        auto& r = procs[{e.node, e.proc}];
        switch (e.kind) {
            case TraceKind::Start: {
                if (r.busy)
                    fail("start while busy: node " + e.node + " inst " +
                         std::to_string(e.instance));
                r = {true, e.instance, e.block, e.slice};
                const auto& prog = inst_of.at(e.instance)->program;
                BlockType bt = prog.find_block(e.block)->type;
                bool cps = bt == BlockType::CL || bt == BlockType::CC;
                if (cps != (e.proc == ProcKind::CPS))
                    fail("block type on wrong processor: inst " + std::to_string(e.instance) +
                         " block " + std::to_string(e.block));
                break;
            }
            case TraceKind::End:
                if (!r.busy || r.inst != e.instance || r.block != e.block || r.slice != e.slice)
                    fail("end without matching start: inst " + std::to_string(e.instance) +
                         " block " + std::to_string(e.block));
                r.busy = false;
                break;
            default:
                if (r.busy && (r.inst != e.instance || r.block != e.block))
                    fail("event from another block during execution: inst " +
                         std::to_string(e.instance));
                break;
        }
    }
    for (const auto& [key, r] : procs)
        if (r.busy) fail("unterminated slice on " + key.first);

    // bin discipline
    for (const auto& e : tr.events) {
        if (e.kind != TraceKind::EprAttempt) continue;
        int app = inst_of.at(e.instance)->app_id;
        int64_t bin = cfg.schedule.bin_index(e.time);
        if (cfg.schedule.owner(bin) != app)
            fail("epr attempt outside owned bin: inst " + std::to_string(e.instance));
        if (e.time + e.elapsed > cfg.schedule.bin_end(bin))
            fail("epr attempt crosses bin boundary: inst " + std::to_string(e.instance));
    }

    // per-block first start / last end
    std::map<std::pair<int, BlockId>, std::pair<Duration, Duration>> spans;
    for (const auto& e : tr.events) {
        if (e.kind != TraceKind::Start && e.kind != TraceKind::End) continue;
        auto key = std::make_pair(e.instance, e.block);
        auto it = spans.find(key);
        if (it == spans.end()) it = spans.emplace(key, std::make_pair(e.time, e.time)).first;
        it->second.first = std::min(it->second.first, e.time);
        it->second.second = std::max(it->second.second, e.time);
    }

    // precedence
    for (const auto& i : cfg.instances) {
        auto preds = i.program.predecessors();
        for (const auto& [to, froms] : preds) {
            auto it = spans.find({i.id, to});
            if (it == spans.end()) continue;
            for (BlockId f : froms) {
                auto fit = spans.find({i.id, f});
                if (fit == spans.end() || fit->second.second > it->second.first)
                    fail("block started before predecessor finished: inst " +
                         std::to_string(i.id) + " block " + std::to_string(to));
            }
        }
    }

    // critical-section atomicity
    for (const auto& i : cfg.instances) {
        for (const auto& cs : i.program.critical_sections) {
            auto first = spans.find({i.id, cs.first});
            auto last = spans.find({i.id, cs.last});
            if (first == spans.end() || last == spans.end()) {
                fail("critical section blocks missing from trace");
                continue;
            }
            Duration t0 = first->second.first, t1 = last->second.second;
            for (const auto& e : tr.events) {
                if (e.kind != TraceKind::Start) continue;
                if (e.node != i.node) continue;
                if (e.time <= t0 || e.time >= t1) continue;
                if (e.instance != i.id)
                    fail("foreign dispatch inside critical section: inst " +
                         std::to_string(e.instance) + " at " + std::to_string(e.time));
            }
        }
    }

    return bad;
}

}  // namespace qnp::testsupport
