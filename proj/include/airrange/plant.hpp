#pragma once

#include <string_view>

namespace airrange {

enum class PressureUnit { psi, bar };

inline constexpr double kBarPerPsi = 0.0689476;

std::string_view to_string(PressureUnit unit);
PressureUnit parse_unit(std::string_view text);  // throws std::invalid_argument

/// Linear tank dynamics. Every constant here is a simulator choice.
struct PlantConfig {
    double fill_rate = 2.0;                  // PSI/s while the motor runs
    double consumption_per_actuation = 1.5;  // PSI per actuator pulse
    double leak_rate = 0.05;                 // PSI/s
    double relief_psi = 150.0;               // relief valve ceiling
    double nominal_voltage = 230.0;
    double tick = 0.1;                       // seconds per step

    [[nodiscard]] bool valid() const;
};

struct PlantState {
    double true_psi = 0.0;
    bool motor_on = false;
    double supply_voltage = 230.0;
    double sim_time = 0.0;
    double run_time_total = 0.0;
};

/// Controller setpoints and protection limits (the configuration store).
struct DeviceConfig {
    double cut_in_psi = 90.0;
    double cut_out_psi = 120.0;
    double max_cut_in_psi = 105.0;
    double max_cut_out_psi = 130.0;
    double under_volt = 180.0;
    double over_volt = 260.0;
    PressureUnit unit = PressureUnit::psi;

    /// Range check applied by hardened firmware before storing setpoints.
    [[nodiscard]] bool setpoints_within_limits(double low, double high) const;
};

struct SensorCalibration {
    double scale = 1.0;
    double zero_offset_psi = 0.0;
};

/// Advances the plant by one tick. Pressure integrates first; the motor
/// command is then recomputed from the new pressure.
///
/// Hysteresis: an idle motor engages at or below cut-in, a running motor
/// stops at or above min(cut-out, relief). Engagement additionally requires
/// cut-in below the relief pressure; a controller configured with an
/// unreachable cut-in never starts the motor. `firmware_running == false`
/// and a voltage trip both force the motor off.
[[nodiscard]] PlantState tick_plant(const PlantState& state,
                                    const PlantConfig& pcfg,
                                    const DeviceConfig& dcfg,
                                    int actuations,
                                    bool firmware_running);

/// scale * true + offset, rounded to 0.1 PSI. The only way any consumer
/// observes pressure.
[[nodiscard]] double reported_psi(const PlantState& state, const SensorCalibration& cal);

[[nodiscard]] bool voltage_trip(const PlantState& state, const DeviceConfig& dcfg);

/// Converts a PSI value into the display unit (bar rounded to 0.001).
[[nodiscard]] double to_display_unit(double psi, PressureUnit unit);
[[nodiscard]] double from_display_unit(double value, PressureUnit unit);

/// Removes all air from the tank (opening the drain valve).
[[nodiscard]] PlantState vent(PlantState state);

}  // namespace airrange
