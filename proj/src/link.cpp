#include "qnp/link.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qnp {

namespace {
constexpr double kLabSuccProb = 0.013;
constexpr double kSignalKmPerSec = 200'000.0;
}  // namespace

LinkParams LinkParams::lab() {
    LinkParams l;
    l.succ_override = kLabSuccProb;
    l.t_class_ns = 0;
    l.t_prep_ns = 200'000;
    return l;
}

LinkParams LinkParams::at_distance(double distance_km) {
    LinkParams l;
    l.distance_km = distance_km;
    LinkParams base = l;
    base.distance_km = 0;
    l.succ_scale = kLabSuccProb / p_succ(base);
    l.t_class_ns = distance_km > 0 ? classical_latency(distance_km / 2.0, 0) : 0;
    return l;
}

double p_succ(const LinkParams& link) {
    if (!link.valid()) throw std::invalid_argument("invalid link parameters");
    double p;
    if (link.succ_override) {
        p = *link.succ_override;
    } else {
        double eta = link.eta_ion * link.eta_fc * link.eta_det;
        p = 0.5 * link.eta_penalty * eta * eta *
            std::pow(10.0, -(link.alpha_db_per_km / 10.0) * (link.distance_km / 2.0)) *
            link.succ_scale;
    }
    if (p >= 1.0 || p <= 0.0) throw std::invalid_argument("nonphysical success probability");
    return p;
}

Duration t_cycle(const LinkParams& link) {
    if (!link.valid()) throw std::invalid_argument("invalid link parameters");
    return link.t_class_ns + link.t_prep_ns;
}

Duration expected_epr_ns(const LinkParams& link) {
    return static_cast<Duration>(std::llround(static_cast<double>(t_cycle(link)) / p_succ(link)));
}

Duration classical_latency(double distance_km, int hops) {
    if (distance_km < 0 || hops < 0) throw std::invalid_argument("negative distance or hops");
    return static_cast<Duration>(hops) * 244'000 + 155'000 +
           static_cast<Duration>(std::llround(distance_km / kSignalKmPerSec * 1e9));
}

EprSample sample_epr(const LinkParams& link, Duration remaining_ns, Rng& rng) {
    if (remaining_ns < 0) throw std::invalid_argument("negative remaining time");
    const Duration cycle = t_cycle(link);
    const uint64_t max_attempts = static_cast<uint64_t>(remaining_ns / cycle);
    EprSample s;
    if (max_attempts == 0) return s;  // no attempt fits
    const double p = p_succ(link);
    uint64_t k = rng.geometric(p);
    if (k <= max_attempts) {
        s.success = true;
        s.attempts = k;
        s.elapsed_ns = static_cast<Duration>(k) * cycle;
    } else {
        s.success = false;
        s.attempts = max_attempts;
        s.elapsed_ns = static_cast<Duration>(max_attempts) * cycle;
    }
    return s;
}

int64_t NetworkSchedule::next_owned_bin(int app, Duration t) const {
    int64_t i = (t + bin_length_ns - 1) / bin_length_ns;  // first bin starting at or after t
    for (size_t k = 0; k < pattern.size(); ++k) {
        if (owner(i + static_cast<int64_t>(k)) == app) return i + static_cast<int64_t>(k);
    }
    return -1;  // app does not appear in the pattern
}

NetworkSchedule build_schedule(std::vector<int> app_ids, int bin_multiple,
                               Duration expected_epr_time_ns, Rng& rng) {
    if (app_ids.empty()) throw std::invalid_argument("empty application list");
    if (bin_multiple < 1) throw std::invalid_argument("bin multiple must be >= 1");
    NetworkSchedule s;
    s.bin_length_ns = static_cast<Duration>(bin_multiple) * expected_epr_time_ns;
    rng.shuffle(app_ids);
    s.pattern = std::move(app_ids);
    return s;
}

const std::vector<TopologyEntry>& surfnet_topology() {
    static const std::vector<TopologyEntry> table = {
        {"Delft 1", "Delft 1", 0.0, 0},        {"Delft 1", "Delft 2", 2.2, 0},
        {"Delft 1", "Rotterdam 1", 16.8, 1},   {"Delft 1", "Den Haag 2", 19.8, 0},
        {"Delft 1", "Den Haag 1", 26.3, 1},    {"Delft 1", "Leiden 1", 30.6, 0},
        {"Delft 1", "Rotterdam 2", 33.1, 0},   {"Delft 1", "Rotterdam 3", 40.2, 1},
        {"Delft 1", "Leiden 2", 47.9, 2},      {"Delft 1", "Leiden 3", 55.2, 3},
    };
    return table;
}

TopologyEntry topology_lookup(const std::string& server, const std::string& client) {
    for (const auto& e : surfnet_topology())
        if (e.server == server && e.client == client) return e;
    throw std::out_of_range("no topology entry for (" + server + ", " + client + ")");
}

std::vector<TopologyEntry> load_topology_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::vector<TopologyEntry> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string server, client, dist, hops;
        if (!std::getline(ss, server, ',') || !std::getline(ss, client, ',') ||
            !std::getline(ss, dist, ',') || !std::getline(ss, hops))
            throw std::runtime_error("bad topology row: " + line);
        if (server == "server") continue;  // header
        out.push_back({server, client, std::stod(dist), std::stoi(hops)});
    }
    return out;
}

}  // namespace qnp
