#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qnp/program.hpp"
#include "qnp/rng.hpp"

namespace qnp {

/// Heralded entanglement link parameters. Defaults are the anticipated
/// trapped-ion values; `succ_scale` rescales the success probability so
/// the zero-distance point can be pinned to a measured value.
struct LinkParams {
    double alpha_db_per_km = 0.2;   // fiber attenuation at telecom
    double eta_ion = 0.5;           // photon emit/collect efficiency
    double eta_fc = 0.7;            // ion->telecom frequency conversion
    double eta_det = 0.9;           // telecom detection efficiency
    double eta_penalty = 0.2;       // detection-window truncation penalty
    Duration t_class_ns = 0;        // classical comm time within an attempt
    Duration t_prep_ns = 200'000;   // ion preparation time
    double distance_km = 0.0;
    double succ_scale = 1.0;
    /// Overrides the formula entirely when set (lab-measured value).
    std::optional<double> succ_override;

    bool valid() const {
        return alpha_db_per_km >= 0 && eta_ion > 0 && eta_ion <= 1 && eta_fc > 0 &&
               eta_fc <= 1 && eta_det > 0 && eta_det <= 1 && eta_penalty > 0 &&
               eta_penalty <= 1 && t_class_ns >= 0 && t_prep_ns > 0 && distance_km >= 0 &&
               succ_scale > 0;
    }

    /// Lab-setting link pinned to the measured trapped-ion triple
    /// (p = 0.013, attempt = 200us).
    static LinkParams lab();
    /// Link at a given distance; p_succ rescaled so d=0 matches the lab
    /// value, classical time set to the node-to-midpoint latency.
    static LinkParams at_distance(double distance_km);
};

/// Per-attempt success probability:
/// 1/2 eta_pen (eta_ion eta_fc eta_det)^2 10^{-(alpha/10)(d/2)}.
double p_succ(const LinkParams& link);

/// Duration of one generation attempt: t_class + t_prep.
Duration t_cycle(const LinkParams& link);

/// Expected time to produce one pair: t_cycle / p_succ.
Duration expected_epr_ns(const LinkParams& link);

/// CCL = h * 244us + 155us + d / (200,000 km/s).
Duration classical_latency(double distance_km, int hops);

struct EprSample {
    bool success = false;
    Duration elapsed_ns = 0;  // integer multiple of t_cycle
    uint64_t attempts = 0;
};

/// Runs generation attempts of t_cycle each within the remaining bin
/// time. Success after k attempts iff k*t_cycle fits; otherwise all
/// fitting attempts fail and elapsed covers them.
EprSample sample_epr(const LinkParams& link, Duration remaining_ns, Rng& rng);

/// Repeating time-bin schedule; pattern entry i owns bins i, i+len, ...
struct NetworkSchedule {
    Duration bin_length_ns = 1;
    std::vector<int> pattern;  // application ids, one per bin

    bool valid() const { return bin_length_ns > 0 && !pattern.empty(); }
    int64_t bin_index(Duration t) const { return t / bin_length_ns; }
    Duration bin_start(int64_t index) const { return index * bin_length_ns; }
    Duration bin_end(int64_t index) const { return (index + 1) * bin_length_ns; }
    int owner(int64_t index) const {
        return pattern[static_cast<size_t>(index % static_cast<int64_t>(pattern.size()))];
    }
    /// First bin owned by app with start >= t.
    int64_t next_owned_bin(int app, Duration t) const;
};

/// bin_length = multiple * expected_epr_time; pattern is a uniformly
/// random permutation of the app ids.
NetworkSchedule build_schedule(std::vector<int> app_ids, int bin_multiple,
                               Duration expected_epr_time_ns, Rng& rng);

struct TopologyEntry {
    std::string server;
    std::string client;
    double distance_km = 0;
    int hops = 0;
};

/// Embedded metro-network distance table.
const std::vector<TopologyEntry>& surfnet_topology();
TopologyEntry topology_lookup(const std::string& server, const std::string& client);
std::vector<TopologyEntry> load_topology_csv(const std::string& path);

}  // namespace qnp
