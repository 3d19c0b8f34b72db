#include "airrange/workcell.hpp"

namespace airrange {

WorkcellStep step_workcell(const WorkcellState& state, const WorkcellConfig& cfg, std::int64_t now_ms,
                           double true_psi) {
    WorkcellStep out{state, 0, {}};
    WorkcellState& s = out.state;
    s.required_psi = cfg.required_psi;
    if (!cfg.enabled || !s.conveyor_running) return out;

    if (cfg.arrival_period_ms > 0 && now_ms % cfg.arrival_period_ms == 0) {
        Package p;
        p.id = s.next_id++;
        p.barcode_class = p.id % 3 + 1;
        p.stage = Stage::scanning;
        p.position = Position::at_scanner;
        p.arrived_ms = now_ms;
        s.packages.push_back(p);
    }

    for (auto& p : s.packages) {
        if (p.stage == Stage::done) continue;
        const std::int64_t age = now_ms - p.arrived_ms;
        if (p.stage == Stage::scanning && age >= cfg.scan_ms) {
            p.stage = Stage::conveying;
            p.position = Position::upstream;
            p.index = p.barcode_class;
        }
        if (p.stage == Stage::conveying && age >= cfg.scan_ms + cfg.convey_ms) {
            p.stage = Stage::actuating;
            p.position = Position::at_actuator;
        }
        if (p.stage == Stage::actuating) {
            const int actuator = p.index;
            ++s.actuator_counters[static_cast<std::size_t>(actuator - 1)];
            const bool pushed = true_psi >= cfg.required_psi;
            p.actuated_ms = now_ms;
            p.stage = Stage::done;
            if (pushed) {
                p.position = Position::tray;
                p.outcome = p.index == p.barcode_class ? Outcome::sorted_ok : Outcome::missorted;
            } else {
                p.position = Position::overflow;
                p.outcome = Outcome::missorted;
            }
            ++out.actuations;
            out.events.push_back({p.id, actuator, now_ms, pushed, true_psi});
        }
    }
    return out;
}

WorkcellTotals totals(const WorkcellState& state) {
    WorkcellTotals t;
    for (const auto& p : state.packages) {
        switch (p.outcome) {
            case Outcome::sorted_ok: ++t.sorted_ok; break;
            case Outcome::missorted: ++t.missorted; break;
            case Outcome::pending: ++t.in_flight; break;
        }
    }
    return t;
}

}  // namespace airrange
