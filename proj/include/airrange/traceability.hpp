#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "airrange/range.hpp"
#include "airrange/threat_model.hpp"

namespace airrange {

/// Minimal scenario that exercises one attack (or TB4 probe) under `profile`.
/// Throws SchemaError for unknown ids.
Scenario scenario_for_attack(const std::string& attack_id, const DefenseProfile& profile);

struct PairingVerdict {
    Pairing pairing;
    AttackResult defense_off;
    AttackResult defense_on;
    bool holds = false;
    std::string explanation;

    [[nodiscard]] nlohmann::json to_json() const;
};

struct SweepReport {
    std::vector<PairingVerdict> verdicts;

    [[nodiscard]] int violations() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// For every pairing in the matrix: run the attack with every defense off,
/// then with only the paired defense on. A blocking pairing holds when the
/// attack succeeds in the first run and fails in the second, blocked by that
/// defense; a detecting pairing holds when only the second run is audited.
SweepReport sweep(const ThreatModel& model);

}  // namespace airrange
