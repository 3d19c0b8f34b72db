#include "airrange/credentials.hpp"

#include <algorithm>
#include <cctype>
#include <random>

namespace airrange {

namespace {

std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

std::string_view role_name(Role r) {
    switch (r) {
        case Role::operator_role: return "operator";
        case Role::manufacturer: return "manufacturer";
        case Role::cpc: return "cpc";
    }
    return "operator";
}

int required_level(Permission p) {
    switch (p) {
        case Permission::start_stop:
        case Permission::set_target:
            return user_level(Role::operator_role);
        case Permission::pressure_range:
        case Permission::voltage_thresholds:
        case Permission::device_reset:
            return user_level(Role::manufacturer);
        case Permission::change_unit:
        case Permission::recalibrate:
        case Permission::firmware_update:
            return user_level(Role::cpc);
    }
    return user_level(Role::cpc);
}

std::string_view to_string(CredentialChange c) {
    switch (c) {
        case CredentialChange::ok: return "ok";
        case CredentialChange::not_supported: return "not_supported";
        case CredentialChange::bad_credentials: return "bad_credentials";
        case CredentialChange::complexity_rejected: return "complexity_rejected";
        case CredentialChange::unknown_account: return "unknown_account";
    }
    return "not_supported";
}

std::string generate_secret(std::uint64_t seed, std::string_view salt, bool complex) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(fnv1a(salt)),
                      static_cast<std::uint32_t>(fnv1a(salt) >> 32)};
    std::mt19937_64 rng(seq);
    if (!complex) {
        std::uniform_int_distribution<int> digit(0, 9);
        std::string pin;
        for (int i = 0; i < 4; ++i) pin.push_back(static_cast<char>('0' + digit(rng)));
        return pin;
    }
    static constexpr std::string_view kAlphabet =
        "ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz23456789";
    std::uniform_int_distribution<std::size_t> pick(0, kAlphabet.size() - 1);
    std::string s;
    for (int i = 0; i < 12; ++i) s.push_back(kAlphabet[pick(rng)]);
    // guarantee one letter and one digit
    s[0] = "ABCDEFGH"[rng() % 8];
    s[11] = "23456789"[rng() % 8];
    return s;
}

CredentialStore CredentialStore::provision(const std::string& serial, const DefenseProfile& profile,
                                           std::uint64_t seed) {
    CredentialStore store;
    const bool unique = profile.enabled(Defense::unique_credentials);
    const bool complex = profile.enabled(Defense::complexity_policy);
    const bool rotate = profile.enabled(Defense::first_use_rotation);
    const bool no_hidden = profile.enabled(Defense::no_hidden_accounts);

    store.mutable_ = profile.any_credential_hardening();
    store.complexity_ = complex;
    store.ssid_ = "MDR2i_" + serial;

    // Per-unit material is derived from the serial; shared material only
    // from the vendor constant.
    const std::uint64_t unit_seed = fnv1a(serial, seed ^ 0x9e3779b97f4a7c15ull);
    const std::uint64_t vendor_seed = fnv1a("vendor-factory-image");

    auto factory_secret = [&](std::string_view account, std::string_view default_pin) {
        if (unique) return generate_secret(unit_seed, account, complex);
        if (complex) return generate_secret(vendor_seed, account, true);
        return std::string(default_pin);
    };

    store.accounts_.push_back({"operator", Role::operator_role,
                               factory_secret("operator", kFactoryOperatorPin), true, true, false});
    for (auto [name, role, pin] : {std::tuple{"manufacturer", Role::manufacturer, kFactoryManufacturerPin},
                                   std::tuple{"cpc", Role::cpc, kFactoryCpcPin}}) {
        Account a{name, role, factory_secret(name, pin), /*documented=*/false,
                  /*enabled=*/!no_hidden, /*must_change=*/rotate};
        store.accounts_.push_back(std::move(a));
    }

    store.psk_ = unique ? generate_secret(unit_seed, "wifi-psk", true) : std::string(kFactoryWifiPsk);
    store.join_secret_ = profile.enabled(Defense::wpa3_join_secret)
                             ? generate_secret(unit_seed, "wpa3-owner-secret", true)
                             : store.psk_;
    return store;
}

const Account* CredentialStore::find(std::string_view name) const {
    auto it = std::find_if(accounts_.begin(), accounts_.end(),
                           [&](const Account& a) { return a.name == name; });
    return it == accounts_.end() ? nullptr : &*it;
}

Account* CredentialStore::find_mutable(std::string_view name) {
    return const_cast<Account*>(std::as_const(*this).find(name));
}

std::optional<Role> CredentialStore::verify(std::string_view name, std::string_view secret) const {
    const Account* a = find(name);
    if (a == nullptr || !a->enabled || a->secret != secret) return std::nullopt;
    return a->role;
}

CredentialChange CredentialStore::change(std::string_view name, std::string_view old_secret,
                                         std::string_view new_secret) {
    if (!mutable_) return CredentialChange::not_supported;
    Account* a = find_mutable(name);
    if (a == nullptr) return CredentialChange::unknown_account;
    if (!a->enabled || a->secret != old_secret) return CredentialChange::bad_credentials;
    if (complexity_ && !meets_complexity(new_secret)) return CredentialChange::complexity_rejected;
    if (new_secret.empty()) return CredentialChange::complexity_rejected;
    a->secret = std::string(new_secret);
    a->must_change = false;
    creds_changed_ = true;
    return CredentialChange::ok;
}

void CredentialStore::provision_owner(std::string_view name, std::string secret) {
    Account* a = find_mutable(name);
    if (a == nullptr) return;
    a->secret = std::move(secret);
    a->enabled = true;
    a->documented = true;
    a->must_change = false;
    creds_changed_ = true;
}

std::vector<std::string> CredentialStore::documented_names() const {
    std::vector<std::string> names;
    for (const auto& a : accounts_) {
        if (a.documented) names.push_back(a.name);
    }
    return names;
}

bool CredentialStore::meets_complexity(std::string_view secret) {
    if (secret.size() < 8) return false;
    bool letter = false;
    bool digit = false;
    for (unsigned char c : secret) {
        if (!std::isalnum(c)) return false;
        letter |= std::isalpha(c) != 0;
        digit |= std::isdigit(c) != 0;
    }
    return letter && digit;
}

}  // namespace airrange
