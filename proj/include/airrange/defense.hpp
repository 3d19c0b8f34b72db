#pragma once

#include <array>
#include <bitset>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace airrange {

enum class Defense : int {
    unique_credentials = 1,
    first_use_rotation,
    complexity_policy,
    no_hidden_accounts,
    mgmt_frame_protection,
    wpa3_join_secret,
    transport_security,
    lockout,
    audit_log,
    api_authentication,
    server_authorization,
    plane_separation,
    signed_firmware,
    root_of_trust,
};

inline constexpr int kDefenseCount = 14;

std::string defense_id(Defense d);                    // "D7"
std::optional<Defense> parse_defense_id(std::string_view id);
std::string_view defense_name(Defense d);

/// Firmware hardening toggles. All off reproduces the shipped device.
class DefenseProfile {
public:
    DefenseProfile() = default;

    static DefenseProfile vulnerable() { return {}; }
    static DefenseProfile hardened();
    static DefenseProfile only(Defense d);

    /// d14 (root of trust) implies d13 (signed firmware).
    [[nodiscard]] bool enabled(Defense d) const;
    DefenseProfile& set(Defense d, bool on = true);

    [[nodiscard]] bool any_credential_hardening() const;
    [[nodiscard]] bool all_off() const { return flags_.none(); }

    /// Accepts a preset name ("vulnerable", "hardened") or an object
    /// {"d1": bool, ...}. Throws std::invalid_argument on bad input.
    static DefenseProfile from_json(const nlohmann::json& j);
    [[nodiscard]] nlohmann::json to_json() const;

    /// "vulnerable", "hardened", or a comma list like "d8,d10".
    static DefenseProfile parse(std::string_view spec);

    friend bool operator==(const DefenseProfile&, const DefenseProfile&) = default;

private:
    std::bitset<kDefenseCount> flags_;
};

}  // namespace airrange
