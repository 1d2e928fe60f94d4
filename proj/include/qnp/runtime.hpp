#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qnp/link.hpp"
#include "qnp/program.hpp"
#include "qnp/quantum.hpp"
#include "qnp/rng.hpp"

namespace qnp {

struct NodeConfig {
    NodeId id;
    int num_qubits = 64;
    TimingParams timing;
    NoiseModel noise;
};

/// One admitted execution of a program on a node.
struct ProgramInstance {
    int id = 0;
    NodeId node;
    int app_id = -1;  // entanglement/messaging pairing; -1 for purely local
    std::string role;  // metrics label
    Program program;
    Duration arrival = 0;
};

enum class ProcKind { CPS, QPS };
enum class TraceKind { Start, End, EprAttempt, MsgSend, MsgRecv };

const char* to_string(ProcKind p);
const char* to_string(TraceKind k);

struct TraceEvent {
    Duration time = 0;
    NodeId node;
    ProcKind proc = ProcKind::CPS;
    TraceKind kind = TraceKind::Start;
    int instance = -1;
    BlockId block = 0;
    int slice = 0;            // QC blocks run one slice per owned bin
    Duration elapsed = 0;     // EprAttempt: burst length
    uint64_t attempts = 0;    // EprAttempt
    bool success = false;     // EprAttempt
    std::string var;          // MsgSend / MsgRecv
};

struct InstanceResult {
    int instance = -1;
    std::string role;
    bool completed = false;
    Duration arrival = 0;
    Duration first_start = -1;
    Duration last_end = -1;
    bool success = false;
    VarStore final_vars;

    /// Wall-clock span from instantiation to the last block's end. The
    /// wait for the first network-schedule slot counts toward it.
    Duration exec_time() const { return completed ? last_end - arrival : -1; }
};

struct Trace {
    std::vector<TraceEvent> events;  // empty unless recording was enabled
    std::vector<InstanceResult> instances;
    std::string to_jsonl() const;
};

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimConfig {
    std::vector<NodeConfig> nodes;
    std::vector<ProgramInstance> instances;
    NetworkSchedule schedule;
    LinkParams link;                      // default link for every app
    std::map<int, LinkParams> app_links;  // per-app override
    /// Classical latency between node pairs; falls back to default_latency_ns.
    std::map<std::pair<NodeId, NodeId>, Duration> latency;
    Duration default_latency_ns = 155'000;
    bool record_trace = false;
    Duration max_sim_time_ns = 3'600'000'000'000;  // livelock guard

    Duration latency_between(const NodeId& a, const NodeId& b) const;
};

/// Deterministic event-driven execution of all instances to completion.
/// Throws SimError on deadlock, capacity exhaustion, or a malformed
/// workload.
Trace run_simulation(const SimConfig& cfg, uint64_t seed);

/// Success flag of a completed instance; throws if it did not complete.
bool success_of(const ProgramInstance& inst, const Trace& trace);

/// Scheduling candidate for EDF selection.
struct SchedCandidate {
    std::optional<Duration> abs_deadline;
    Duration ready_at = 0;
    int instance = 0;
    BlockId block = 0;
};

/// Earliest absolute deadline first; deadline-free candidates rank last;
/// ties broken by ready time, then instance id, then block id. Returns
/// an index into `cands`, or nullopt when empty.
std::optional<size_t> edf_select(const std::vector<SchedCandidate>& cands, Duration now);

}  // namespace qnp
