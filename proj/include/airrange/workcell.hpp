#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace airrange {

enum class Stage { scanning, conveying, actuating, done };
enum class Position { upstream, at_scanner, at_actuator, tray, overflow };
enum class Outcome { pending, sorted_ok, missorted };

struct Package {
    int id = 0;
    int barcode_class = 1;  // 1..3, equals the correct tray
    Stage stage = Stage::scanning;
    Position position = Position::upstream;
    int index = 0;  // actuator or tray index when applicable
    Outcome outcome = Outcome::pending;
    std::int64_t arrived_ms = 0;
    std::int64_t actuated_ms = -1;
};

struct WorkcellConfig {
    bool enabled = true;
    double required_psi = 80.0;
    std::int64_t arrival_period_ms = 5000;
    std::int64_t scan_ms = 1000;
    std::int64_t convey_ms = 1000;
};

struct WorkcellState {
    bool conveyor_running = true;
    std::array<std::uint64_t, 3> actuator_counters{};
    std::vector<Package> packages;
    double required_psi = 80.0;
    int next_id = 0;
};

/// One actuator pulse commanded by the PLC. `succeeded` is physical truth;
/// the PLC itself only sees the counter.
struct ActuationEvent {
    int package_id = 0;
    int actuator = 1;
    std::int64_t time_ms = 0;
    bool succeeded = false;
    double true_psi = 0.0;
};

struct WorkcellStep {
    WorkcellState state;
    int actuations = 0;
    std::vector<ActuationEvent> events;
};

/// Advances the sorting cell to `now_ms`. Packages arrive every arrival
/// period with classes 1,2,3 round robin, are scanned, conveyed, and pushed
/// by actuator i. The push only lands in tray i when the supply is at or
/// above required_psi; otherwise the package runs into overflow. The
/// actuator counter increments either way.
[[nodiscard]] WorkcellStep step_workcell(const WorkcellState& state, const WorkcellConfig& cfg,
                                         std::int64_t now_ms, double true_psi);

struct WorkcellTotals {
    int sorted_ok = 0;
    int missorted = 0;
    int in_flight = 0;
};
[[nodiscard]] WorkcellTotals totals(const WorkcellState& state);

}  // namespace airrange
