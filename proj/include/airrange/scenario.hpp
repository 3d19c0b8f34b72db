#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "airrange/defense.hpp"
#include "airrange/netsim.hpp"
#include "airrange/plant.hpp"
#include "airrange/twin.hpp"
#include "airrange/workcell.hpp"

namespace airrange {

/// Scenario file does not match the schema.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scenario or output file could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScheduledAttack {
    std::string id;    // AT1..AT14 or a TB4 probe id
    std::string kind;  // resolved from the registry when only id is given
    double t_start = 0.0;
    nlohmann::json params = nlohmann::json::object();
};

/// Legitimate activity and environment changes: operator logins and
/// commands, tank drains, supply voltage changes.
struct ScenarioEvent {
    double t = 0.0;
    std::string action;
    nlohmann::json params = nlohmann::json::object();
};

enum class TwinSource { poll, bus };

struct Scenario {
    std::string name = "unnamed";
    std::uint64_t seed = 1;
    double duration_s = 60.0;
    DefenseProfile profile;
    TwinMode twin_mode = TwinMode::telemetry_correlated;
    TwinSource twin_source = TwinSource::poll;
    LinkMode wifi_mode = LinkMode::station;
    double initial_psi = 100.0;
    PlantConfig plant;
    DeviceConfig device;
    WorkcellConfig workcell;
    bool maintenance_mode = false;
    bool commissioned = true;
    std::vector<ScheduledAttack> attacks;
    std::vector<ScenarioEvent> events;

    /// Throws SchemaError naming the offending field.
    static Scenario from_json(const nlohmann::json& j);
    /// Normalized form; from_json(to_json()) reproduces the scenario.
    [[nodiscard]] nlohmann::json to_json() const;

    [[nodiscard]] std::int64_t ticks_per_second() const;
    [[nodiscard]] std::int64_t total_ticks() const;
};

/// Reads and validates a scenario file. Throws IoError or SchemaError.
Scenario load_scenario(const std::filesystem::path& path);

inline const std::vector<std::string>& event_actions() {
    static const std::vector<std::string> actions = {"login", "logout", "on", "off", "set_range", "set_target",
                                                     "set_unit", "drain", "set_voltage"};
    return actions;
}

}  // namespace airrange
