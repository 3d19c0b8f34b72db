#include "airrange/twin.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "airrange/plant.hpp"

namespace airrange {

std::string_view to_string(TwinMode m) {
    return m == TwinMode::counters_only ? "counters_only" : "telemetry_correlated";
}

TwinMode parse_twin_mode(std::string_view text) {
    if (text == "counters_only") return TwinMode::counters_only;
    if (text == "telemetry_correlated") return TwinMode::telemetry_correlated;
    throw std::invalid_argument("unknown twin mode: " + std::string(text));
}

std::string_view to_string(Belief b) {
    switch (b) {
        case Belief::pending: return "pending";
        case Belief::sorted_ok: return "sorted_ok";
        case Belief::suspect: return "suspect";
        case Belief::unknown: return "unknown";
    }
    return "unknown";
}

PollOutcome PollOutcome::from_parameters(const nlohmann::json& params) {
    const double shown = params.at("PRESSURE").get<double>();
    const PressureUnit unit = parse_unit(params.value("UNIT", std::string("PSI")));
    return reading(from_display_unit(shown, unit));
}

TwinEstimate make_twin(TwinMode mode, double required_psi) {
    TwinEstimate t;
    t.mode = mode;
    t.required_psi = required_psi;
    return t;
}

TwinEstimate update_twin(TwinEstimate twin, const std::array<std::uint64_t, 3>& plc_counters,
                         const std::vector<PlcCommand>& new_commands, const PollOutcome& poll,
                         std::int64_t now_ms) {
    twin.seen_counters = plc_counters;
    for (const auto& cmd : new_commands) {
        if (twin.mode == TwinMode::counters_only) {
            twin.believed[cmd.package_id] = Belief::sorted_ok;
        } else {
            twin.believed[cmd.package_id] = Belief::pending;
            twin.pending.push_back(cmd);
        }
    }

    switch (poll.kind) {
        case PollOutcome::Kind::not_polled:
            break;
        case PollOutcome::Kind::ok: {
            twin.last_poll_psi = poll.psi;
            twin.missed_polls = 0;
            twin.stale = false;
            if (twin.mode == TwinMode::counters_only) break;
            std::vector<PlcCommand> still_pending;
            for (const auto& cmd : twin.pending) {
                if (cmd.time_ms > now_ms) {
                    still_pending.push_back(cmd);
                    continue;
                }
                if (poll.psi < twin.required_psi) {
                    twin.believed[cmd.package_id] = Belief::suspect;
                    twin.fault_flag = true;
                    twin.fault_latencies_s.push_back(static_cast<double>(now_ms - cmd.time_ms) / 1000.0);
                } else {
                    twin.believed[cmd.package_id] = Belief::sorted_ok;
                }
            }
            twin.pending = std::move(still_pending);
            break;
        }
        case PollOutcome::Kind::unavailable:
            ++twin.missed_polls;
            if (twin.missed_polls >= twin.stale_threshold) {
                twin.stale = true;
                for (const auto& cmd : twin.pending) twin.believed[cmd.package_id] = Belief::unknown;
                twin.pending.clear();
            }
            break;
    }
    return twin;
}

nlohmann::json DivergenceReport::to_json() const {
    nlohmann::json j = {{"true_sorted_ok", true_sorted_ok},
                        {"twin_believed_ok", twin_believed_ok},
                        {"false_beliefs", false_beliefs},
                        {"unknown", unknown}};
    j["fault_latency_s"] = fault_latency_s ? nlohmann::json(*fault_latency_s) : nlohmann::json(nullptr);
    return j;
}

DivergenceReport divergence_report(const WorkcellState& truth, const TwinEstimate& twin) {
    DivergenceReport r;
    for (const auto& p : truth.packages) {
        if (p.outcome == Outcome::sorted_ok) ++r.true_sorted_ok;
        auto it = twin.believed.find(p.id);
        if (it == twin.believed.end()) continue;
        const Belief b = it->second;
        if (b == Belief::sorted_ok) ++r.twin_believed_ok;
        if (b == Belief::unknown) ++r.unknown;
        if (p.outcome == Outcome::pending) continue;
        const bool truly_ok = p.outcome == Outcome::sorted_ok;
        if ((b == Belief::sorted_ok && !truly_ok) || (b == Belief::suspect && truly_ok)) ++r.false_beliefs;
    }
    if (!twin.fault_latencies_s.empty()) {
        r.fault_latency_s = *std::max_element(twin.fault_latencies_s.begin(), twin.fault_latencies_s.end());
    }
    return r;
}

}  // namespace airrange
