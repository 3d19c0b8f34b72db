#include "airrange/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "airrange/threat_model.hpp"

namespace airrange {

using nlohmann::json;

namespace {

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw SchemaError(where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; });
        if (!known) throw SchemaError(fmt::format("{}: unknown field '{}'", where, key));
    }
}

double number(const json& obj, const char* key, double fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw SchemaError(fmt::format("{}.{} must be a number", where, key));
    double d = v.get<double>();
    if (!std::isfinite(d)) throw SchemaError(fmt::format("{}.{} must be finite", where, key));
    return d;
}

bool boolean(const json& obj, const char* key, bool fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) throw SchemaError(fmt::format("{}.{} must be a boolean", where, key));
    return v.get<bool>();
}

std::string text(const json& obj, const char* key, const std::string& fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) throw SchemaError(fmt::format("{}.{} must be a string", where, key));
    return v.get<std::string>();
}

json params_of(const json& obj, const std::string& where) {
    if (!obj.contains("params")) return json::object();
    const auto& p = obj.at("params");
    if (!p.is_object()) throw SchemaError(where + ".params must be an object");
    return p;
}

ScheduledAttack parse_attack(const json& a, std::size_t index) {
    const std::string where = fmt::format("attacks[{}]", index);
    only_keys(a, where, {"id", "kind", "t_start", "params"});
    ScheduledAttack out;
    out.id = text(a, "id", "", where);
    out.kind = text(a, "kind", "", where);
    const auto& model = ThreatModel::shipped();
    if (!out.id.empty()) {
        const AttackInfo* info = model.find_attack(out.id);
        if (info == nullptr) throw SchemaError(fmt::format("{}: unknown attack id '{}'", where, out.id));
        if (!out.kind.empty() && out.kind != info->kind) {
            throw SchemaError(fmt::format("{}: kind '{}' does not match {} ({})", where, out.kind, out.id,
                                          info->kind));
        }
        out.kind = info->kind;
    } else if (!out.kind.empty()) {
        auto it = std::find_if(model.attacks().begin(), model.attacks().end(),
                               [&](const AttackInfo& i) { return i.kind == out.kind; });
        if (it == model.attacks().end()) {
            throw SchemaError(fmt::format("{}: unknown attack kind '{}'", where, out.kind));
        }
        out.id = it->id;
    } else {
        throw SchemaError(where + ": needs id or kind");
    }
    out.t_start = number(a, "t_start", 0.0, where);
    if (out.t_start < 0) throw SchemaError(where + ".t_start must be >= 0");
    out.params = params_of(a, where);
    return out;
}

ScenarioEvent parse_event(const json& e, std::size_t index) {
    const std::string where = fmt::format("events[{}]", index);
    only_keys(e, where, {"t", "action", "params"});
    ScenarioEvent out;
    out.t = number(e, "t", 0.0, where);
    if (out.t < 0) throw SchemaError(where + ".t must be >= 0");
    out.action = text(e, "action", "", where);
    const auto& actions = event_actions();
    if (std::find(actions.begin(), actions.end(), out.action) == actions.end()) {
        throw SchemaError(fmt::format("{}: unknown action '{}'", where, out.action));
    }
    out.params = params_of(e, where);
    return out;
}

}  // namespace

std::int64_t Scenario::ticks_per_second() const { return std::llround(1.0 / plant.tick); }

std::int64_t Scenario::total_ticks() const { return std::llround(duration_s * ticks_per_second()); }

Scenario Scenario::from_json(const json& j) {
    only_keys(j, "scenario",
              {"name", "seed", "duration_s", "defense_profile", "twin_mode", "twin_source", "wifi_mode",
               "initial_psi", "plant", "device", "workcell", "maintenance_mode", "commissioned", "attacks",
               "events", "description"});
    Scenario s;
    s.name = text(j, "name", s.name, "scenario");
    if (j.contains("seed")) {
        const auto& seed = j.at("seed");
        if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
            throw SchemaError("scenario.seed must be a non-negative integer");
        }
        s.seed = j.at("seed").get<std::uint64_t>();
    }
    s.duration_s = number(j, "duration_s", s.duration_s, "scenario");
    if (s.duration_s <= 0 || s.duration_s > 86400) throw SchemaError("scenario.duration_s must be in (0, 86400]");

    if (j.contains("defense_profile")) {
        try {
            s.profile = DefenseProfile::from_json(j.at("defense_profile"));
        } catch (const std::invalid_argument& e) {
            throw SchemaError(std::string("scenario.defense_profile: ") + e.what());
        }
    }
    try {
        s.twin_mode = parse_twin_mode(text(j, "twin_mode", std::string(to_string(s.twin_mode)), "scenario"));
    } catch (const std::invalid_argument& e) {
        throw SchemaError(std::string("scenario.twin_mode: ") + e.what());
    }
    auto source = text(j, "twin_source", "poll", "scenario");
    if (source == "poll") {
        s.twin_source = TwinSource::poll;
    } else if (source == "bus") {
        s.twin_source = TwinSource::bus;
    } else {
        throw SchemaError("scenario.twin_source must be 'poll' or 'bus'");
    }
    auto mode = text(j, "wifi_mode", "station", "scenario");
    if (mode == "station") {
        s.wifi_mode = LinkMode::station;
    } else if (mode == "ap") {
        s.wifi_mode = LinkMode::ap;
    } else {
        throw SchemaError("scenario.wifi_mode must be 'station' or 'ap'");
    }

    if (j.contains("plant")) {
        const auto& p = j.at("plant");
        only_keys(p, "scenario.plant",
                  {"fill_rate", "consumption_per_actuation", "leak_rate", "relief_psi", "nominal_voltage", "tick"});
        s.plant.fill_rate = number(p, "fill_rate", s.plant.fill_rate, "plant");
        s.plant.consumption_per_actuation =
            number(p, "consumption_per_actuation", s.plant.consumption_per_actuation, "plant");
        s.plant.leak_rate = number(p, "leak_rate", s.plant.leak_rate, "plant");
        s.plant.relief_psi = number(p, "relief_psi", s.plant.relief_psi, "plant");
        s.plant.nominal_voltage = number(p, "nominal_voltage", s.plant.nominal_voltage, "plant");
        s.plant.tick = number(p, "tick", s.plant.tick, "plant");
    }
    if (!s.plant.valid()) throw SchemaError("scenario.plant violates its invariants");
    const double per_second = 1.0 / s.plant.tick;
    if (std::abs(per_second - std::round(per_second)) > 1e-9) {
        throw SchemaError("scenario.plant.tick must divide one second");
    }

    s.initial_psi = number(j, "initial_psi", s.initial_psi, "scenario");
    if (s.initial_psi < 0 || s.initial_psi > s.plant.relief_psi) {
        throw SchemaError("scenario.initial_psi must be within [0, relief_psi]");
    }

    if (j.contains("device")) {
        const auto& d = j.at("device");
        only_keys(d, "scenario.device", {"cut_in_psi", "cut_out_psi", "under_volt", "over_volt", "unit"});
        s.device.cut_in_psi = number(d, "cut_in_psi", s.device.cut_in_psi, "device");
        s.device.cut_out_psi = number(d, "cut_out_psi", s.device.cut_out_psi, "device");
        s.device.under_volt = number(d, "under_volt", s.device.under_volt, "device");
        s.device.over_volt = number(d, "over_volt", s.device.over_volt, "device");
        try {
            s.device.unit = parse_unit(text(d, "unit", "PSI", "device"));
        } catch (const std::invalid_argument& e) {
            throw SchemaError(std::string("scenario.device.unit: ") + e.what());
        }
    }

    if (j.contains("workcell")) {
        const auto& w = j.at("workcell");
        only_keys(w, "scenario.workcell", {"enabled", "required_psi", "arrival_period_s"});
        s.workcell.enabled = boolean(w, "enabled", s.workcell.enabled, "workcell");
        s.workcell.required_psi = number(w, "required_psi", s.workcell.required_psi, "workcell");
        double period = number(w, "arrival_period_s", 5.0, "workcell");
        if (period < 1 || std::abs(period - std::round(period)) > 1e-9) {
            throw SchemaError("scenario.workcell.arrival_period_s must be a whole number of seconds >= 1");
        }
        s.workcell.arrival_period_ms = std::llround(period * 1000.0);
    }

    s.maintenance_mode = boolean(j, "maintenance_mode", s.maintenance_mode, "scenario");
    s.commissioned = boolean(j, "commissioned", s.commissioned, "scenario");

    if (j.contains("attacks")) {
        if (!j.at("attacks").is_array()) throw SchemaError("scenario.attacks must be an array");
        std::size_t i = 0;
        for (const auto& a : j.at("attacks")) s.attacks.push_back(parse_attack(a, i++));
    }
    if (j.contains("events")) {
        if (!j.at("events").is_array()) throw SchemaError("scenario.events must be an array");
        std::size_t i = 0;
        for (const auto& e : j.at("events")) s.events.push_back(parse_event(e, i++));
    }
    return s;
}

json Scenario::to_json() const {
    json attacks_j = json::array();
    for (const auto& a : attacks) {
        attacks_j.push_back({{"id", a.id}, {"kind", a.kind}, {"t_start", a.t_start}, {"params", a.params}});
    }
    json events_j = json::array();
    for (const auto& e : events) events_j.push_back({{"t", e.t}, {"action", e.action}, {"params", e.params}});
    return {
        {"name", name},
        {"seed", seed},
        {"duration_s", duration_s},
        {"defense_profile", profile.to_json()},
        {"twin_mode", to_string(twin_mode)},
        {"twin_source", twin_source == TwinSource::poll ? "poll" : "bus"},
        {"wifi_mode", to_string(wifi_mode)},
        {"initial_psi", initial_psi},
        {"plant",
         {{"fill_rate", plant.fill_rate},
          {"consumption_per_actuation", plant.consumption_per_actuation},
          {"leak_rate", plant.leak_rate},
          {"relief_psi", plant.relief_psi},
          {"nominal_voltage", plant.nominal_voltage},
          {"tick", plant.tick}}},
        {"device",
         {{"cut_in_psi", device.cut_in_psi},
          {"cut_out_psi", device.cut_out_psi},
          {"under_volt", device.under_volt},
          {"over_volt", device.over_volt},
          {"unit", to_string(device.unit)}}},
        {"workcell",
         {{"enabled", workcell.enabled},
          {"required_psi", workcell.required_psi},
          {"arrival_period_s", static_cast<double>(workcell.arrival_period_ms) / 1000.0}}},
        {"maintenance_mode", maintenance_mode},
        {"commissioned", commissioned},
        {"attacks", attacks_j},
        {"events", events_j},
    };
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read scenario " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw SchemaError(fmt::format("{}: not valid JSON: {}", path.string(), e.what()));
    }
    return Scenario::from_json(j);
}

}  // namespace airrange
