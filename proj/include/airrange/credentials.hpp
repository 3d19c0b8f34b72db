#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "airrange/defense.hpp"

namespace airrange {

enum class Role { operator_role = 0, manufacturer = 1, cpc = 2 };

[[nodiscard]] constexpr int user_level(Role r) { return static_cast<int>(r); }
std::string_view role_name(Role r);

/// Operations gated by role (controller user roles table).
enum class Permission {
    start_stop,
    set_target,
    pressure_range,
    voltage_thresholds,
    change_unit,
    recalibrate,
    firmware_update,
    device_reset,
};

/// Minimum user level for a permission. Levels are cumulative.
[[nodiscard]] int required_level(Permission p);

struct Account {
    std::string name;
    Role role = Role::operator_role;
    std::string secret;
    bool documented = true;
    bool enabled = true;
    bool must_change = false;
};

enum class CredentialChange { ok, not_supported, bad_credentials, complexity_rejected, unknown_account };
std::string_view to_string(CredentialChange c);

inline constexpr std::string_view kFactoryWifiPsk = "CATMDR2i";
inline constexpr std::string_view kFactoryManufacturerPin = "1234";
inline constexpr std::string_view kFactoryCpcPin = "4321";
inline constexpr std::string_view kFactoryOperatorPin = "1111";

/// Role accounts and Wi-Fi secrets of one controller.
class CredentialStore {
public:
    /// Factory provisioning. With every credential defense off, all units
    /// share the same PINs and PSK.
    static CredentialStore provision(const std::string& serial, const DefenseProfile& profile,
                                     std::uint64_t seed);

    [[nodiscard]] const Account* find(std::string_view name) const;
    [[nodiscard]] std::optional<Role> verify(std::string_view name, std::string_view secret) const;

    CredentialChange change(std::string_view name, std::string_view old_secret,
                            std::string_view new_secret);

    /// Local (physical) provisioning by the asset owner; enables the account.
    void provision_owner(std::string_view name, std::string secret);

    [[nodiscard]] bool is_mutable() const { return mutable_; }
    [[nodiscard]] bool complexity_enforced() const { return complexity_; }
    [[nodiscard]] bool creds_changed() const { return creds_changed_; }

    [[nodiscard]] const std::string& wifi_ssid() const { return ssid_; }
    [[nodiscard]] const std::string& wifi_psk() const { return psk_; }
    /// Secret a station must present to join; equals the PSK unless a
    /// separate owner join secret is required.
    [[nodiscard]] const std::string& join_secret() const { return join_secret_; }

    [[nodiscard]] const std::vector<Account>& accounts() const { return accounts_; }
    [[nodiscard]] std::vector<std::string> documented_names() const;

    static bool meets_complexity(std::string_view secret);

private:
    Account* find_mutable(std::string_view name);

    std::vector<Account> accounts_;
    std::string ssid_;
    std::string psk_;
    std::string join_secret_;
    bool mutable_ = false;
    bool complexity_ = false;
    bool creds_changed_ = false;
};

/// Deterministic secret generator used for per-device and owner secrets.
std::string generate_secret(std::uint64_t seed, std::string_view salt, bool complex);

}  // namespace airrange
