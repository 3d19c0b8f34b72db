#include "airrange/traceability.hpp"

#include <map>

#include <fmt/format.h>

namespace airrange {

using nlohmann::json;

Scenario scenario_for_attack(const std::string& attack_id, const DefenseProfile& profile) {
    const AttackInfo* info = ThreatModel::shipped().find_attack(attack_id);
    if (info == nullptr) throw SchemaError("unknown attack id " + attack_id);

    json s = {{"name", "sweep-" + attack_id}, {"seed", 11}, {"duration_s", 10}, {"defense_profile", profile.to_json()}};
    json attack = {{"id", attack_id}, {"t_start", 1}};
    json events = json::array();
    const std::string& kind = info->kind;
    if (kind == "ap_join") {
        s["wifi_mode"] = "ap";
        attack["t_start"] = 0;
    } else if (kind == "sniff") {
        attack["t_start"] = 0;
        events.push_back({{"t", 2}, {"action", "login"}, {"params", {{"user", "cpc"}}}});
    } else if (kind == "link_disruption") {
        s["duration_s"] = 60;
        attack["t_start"] = 5;
        attack["params"] = {{"duration_s", 30}};
    } else if (kind == "off_loop") {
        s["duration_s"] = 60;
        s["initial_psi"] = 90;
        attack["t_start"] = 0;
    } else if (kind == "reboot_loop") {
        s["duration_s"] = 60;
        attack["t_start"] = 0;
    } else if (kind == "infeasible_setpoints") {
        s["duration_s"] = 60;
        events.push_back({{"t", 10}, {"action", "drain"}});
    } else if (kind == "injection") {
        s["twin_source"] = "bus";
    } else if (kind == "ota_unsigned" || kind == "ota_key_swap") {
        s["duration_s"] = 15;
    }
    s["attacks"] = json::array({attack});
    s["events"] = events;
    return Scenario::from_json(s);
}

json PairingVerdict::to_json() const {
    return {{"attack", pairing.attack},
            {"defense", pairing.defense},
            {"effect", pairing.effect == PairEffect::blocks ? "blocks" : "detects"},
            {"holds", holds},
            {"explanation", explanation},
            {"defense_off", defense_off.to_json()},
            {"defense_on", defense_on.to_json()}};
}

int SweepReport::violations() const {
    int n = 0;
    for (const auto& v : verdicts) n += v.holds ? 0 : 1;
    return n;
}

json SweepReport::to_json() const {
    json rows = json::array();
    for (const auto& v : verdicts) rows.push_back(v.to_json());
    return {{"schema_version", kReportSchemaVersion},
            {"pairings", verdicts.size()},
            {"violations", violations()},
            {"verdicts", rows}};
}

namespace {

AttackResult run_one(const std::string& attack_id, const DefenseProfile& profile) {
    RunResult r = execute(scenario_for_attack(attack_id, profile));
    const AttackResult* a = r.attack(attack_id);
    if (a == nullptr) throw std::logic_error("attack missing from its own scenario: " + attack_id);
    return *a;
}

}  // namespace

SweepReport sweep(const ThreatModel& model) {
    SweepReport report;
    std::map<std::string, AttackResult> baseline;
    for (const auto& p : model.all_pairings()) {
        auto defense = parse_defense_id(p.defense);
        if (!defense) throw ThreatModelError("pairing cites unknown defense " + p.defense);
        if (!baseline.count(p.attack)) baseline.emplace(p.attack, run_one(p.attack, DefenseProfile::vulnerable()));

        PairingVerdict v;
        v.pairing = p;
        v.defense_off = baseline.at(p.attack);
        v.defense_on = run_one(p.attack, DefenseProfile::only(*defense));
        if (p.effect == PairEffect::blocks) {
            const bool blocked_by_it = v.defense_on.blocked_by == p.defense;
            v.holds = v.defense_off.success && !v.defense_on.success && blocked_by_it;
            if (!v.defense_off.success) {
                v.explanation = fmt::format("{} failed with every defense off ({})", p.attack,
                                            v.defense_off.denied_reason.value_or("no reason"));
            } else if (v.defense_on.success) {
                v.explanation = fmt::format("{} still succeeded with {} on", p.attack, p.defense);
            } else if (!blocked_by_it) {
                v.explanation = fmt::format("{} failed with {} on but was not attributed to it ({})", p.attack,
                                            p.defense, v.defense_on.denied_reason.value_or("no reason"));
            } else {
                v.explanation = fmt::format("{} blocked by {}: {}", p.attack, p.defense,
                                            v.defense_on.denied_reason.value_or(""));
            }
        } else {
            v.holds = !v.defense_off.detected && v.defense_on.detected;
            v.explanation = v.holds ? fmt::format("{} recorded in the audit log only with {} on", p.attack, p.defense)
                                    : fmt::format("{} detection did not follow {}", p.attack, p.defense);
        }
        report.verdicts.push_back(std::move(v));
    }
    return report;
}

}  // namespace airrange
