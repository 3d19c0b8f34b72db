#include "airrange/plant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace airrange {

std::string_view to_string(PressureUnit unit) {
    return unit == PressureUnit::bar ? "BAR" : "PSI";
}

PressureUnit parse_unit(std::string_view text) {
    if (text == "PSI" || text == "psi") return PressureUnit::psi;
    if (text == "BAR" || text == "bar") return PressureUnit::bar;
    throw std::invalid_argument("unknown pressure unit: " + std::string(text));
}

bool PlantConfig::valid() const {
    return fill_rate > 0.0 && relief_psi > 130.0 && tick > 0.0 && leak_rate >= 0.0 &&
           consumption_per_actuation >= 0.0;
}

bool DeviceConfig::setpoints_within_limits(double low, double high) const {
    return std::isfinite(low) && std::isfinite(high) && low > 0.0 && low < high &&
           high <= max_cut_out_psi && low <= max_cut_in_psi;
}

PlantState tick_plant(const PlantState& state,
                      const PlantConfig& pcfg,
                      const DeviceConfig& dcfg,
                      int actuations,
                      bool firmware_running) {
    PlantState next = state;
    double psi = state.true_psi;
    if (state.motor_on) psi += pcfg.fill_rate * pcfg.tick;
    psi -= pcfg.leak_rate * pcfg.tick;
    psi -= pcfg.consumption_per_actuation * static_cast<double>(std::max(actuations, 0));
    next.true_psi = std::clamp(psi, 0.0, pcfg.relief_psi);
    next.sim_time = state.sim_time + pcfg.tick;
    if (state.motor_on) next.run_time_total = state.run_time_total + pcfg.tick;

    if (!firmware_running || voltage_trip(next, dcfg)) {
        next.motor_on = false;
        return next;
    }
    const double high_limit = std::min(dcfg.cut_out_psi, pcfg.relief_psi);
    if (state.motor_on) {
        next.motor_on = next.true_psi < high_limit;
    } else {
        const bool engageable = dcfg.cut_in_psi < pcfg.relief_psi;
        next.motor_on = engageable && next.true_psi <= dcfg.cut_in_psi;
    }
    return next;
}

double reported_psi(const PlantState& state, const SensorCalibration& cal) {
    const double raw = cal.scale * state.true_psi + cal.zero_offset_psi;
    return std::round(raw * 10.0) / 10.0;
}

bool voltage_trip(const PlantState& state, const DeviceConfig& dcfg) {
    return state.supply_voltage < dcfg.under_volt || state.supply_voltage > dcfg.over_volt;
}

double to_display_unit(double psi, PressureUnit unit) {
    if (unit == PressureUnit::psi) return psi;
    return std::round(psi * kBarPerPsi * 1000.0) / 1000.0;
}

double from_display_unit(double value, PressureUnit unit) {
    return unit == PressureUnit::psi ? value : value / kBarPerPsi;
}

PlantState vent(PlantState state) {
    state.true_psi = 0.0;
    return state;
}

}  // namespace airrange
