#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "airrange/workcell.hpp"

namespace airrange {

enum class TwinMode { counters_only, telemetry_correlated };
std::string_view to_string(TwinMode m);
TwinMode parse_twin_mode(std::string_view text);  // throws std::invalid_argument

/// pending: waiting for telemetry; suspect: believed not delivered;
/// unknown: telemetry went stale before the actuation could be checked.
enum class Belief { pending, sorted_ok, suspect, unknown };
std::string_view to_string(Belief b);

/// What the PLC knows about an actuation it commanded.
struct PlcCommand {
    int package_id = 0;
    int actuator = 1;
    std::int64_t time_ms = 0;
};

struct PollOutcome {
    enum class Kind { not_polled, ok, unavailable };
    Kind kind = Kind::not_polled;
    double psi = 0.0;

    static PollOutcome none() { return {}; }
    static PollOutcome reading(double psi) { return {Kind::ok, psi}; }
    static PollOutcome unavailable() { return {Kind::unavailable, 0.0}; }
    /// Reads PRESSURE/UNIT from a parameter document.
    static PollOutcome from_parameters(const nlohmann::json& params);
};

struct TwinEstimate {
    TwinMode mode = TwinMode::counters_only;
    std::map<int, Belief> believed;
    bool fault_flag = false;
    std::optional<double> last_poll_psi;
    int missed_polls = 0;
    bool stale = false;
    std::array<std::uint64_t, 3> seen_counters{};
    std::vector<PlcCommand> pending;
    std::vector<double> fault_latencies_s;
    double required_psi = 80.0;
    int stale_threshold = 3;
};

[[nodiscard]] TwinEstimate make_twin(TwinMode mode, double required_psi = 80.0);

/// Folds new PLC commands and an optional telemetry poll into the estimate.
/// counters_only believes every counted actuation delivered its package.
/// telemetry_correlated holds each actuation until the next successful
/// reading and marks it suspect (raising the fault flag) when the reading is
/// below the required supply pressure.
[[nodiscard]] TwinEstimate update_twin(TwinEstimate twin, const std::array<std::uint64_t, 3>& plc_counters,
                                       const std::vector<PlcCommand>& new_commands, const PollOutcome& poll,
                                       std::int64_t now_ms);

struct DivergenceReport {
    int true_sorted_ok = 0;
    int twin_believed_ok = 0;
    int false_beliefs = 0;
    int unknown = 0;
    std::optional<double> fault_latency_s;  // worst observed, none when no fault

    [[nodiscard]] nlohmann::json to_json() const;
};

[[nodiscard]] DivergenceReport divergence_report(const WorkcellState& truth, const TwinEstimate& twin);

}  // namespace airrange
