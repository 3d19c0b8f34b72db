#include "airrange/defense.hpp"

#include <cctype>
#include <charconv>
#include <stdexcept>

namespace airrange {

namespace {

constexpr std::array<std::string_view, kDefenseCount> kNames = {
    "Unique Per-Device Credentials",
    "Mandatory First-Use Credential Rotation",
    "Enforce Credential Complexity Policies",
    "Removal of Hardcoded Backdoors",
    "Management Frame Protection",
    "WPA3 Network Security",
    "Transport Layer Security",
    "Brute-Force Protection",
    "Authentication Event Auditing",
    "Per-Request API Authentication",
    "Server-Side Authorization",
    "Separate Control and Management Planes",
    "Secure Firmware Updates",
    "Hardware Root of Trust",
};

std::size_t index_of(Defense d) { return static_cast<std::size_t>(d) - 1; }

}  // namespace

std::string defense_id(Defense d) { return "D" + std::to_string(static_cast<int>(d)); }

std::optional<Defense> parse_defense_id(std::string_view id) {
    if (id.size() < 2 || (id[0] != 'D' && id[0] != 'd')) return std::nullopt;
    int n = 0;
    auto [ptr, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), n);
    if (ec != std::errc{} || ptr != id.data() + id.size()) return std::nullopt;
    if (n < 1 || n > kDefenseCount) return std::nullopt;
    return static_cast<Defense>(n);
}

std::string_view defense_name(Defense d) { return kNames[index_of(d)]; }

DefenseProfile DefenseProfile::hardened() {
    DefenseProfile p;
    p.flags_.set();
    return p;
}

DefenseProfile DefenseProfile::only(Defense d) {
    DefenseProfile p;
    p.set(d);
    return p;
}

bool DefenseProfile::enabled(Defense d) const {
    if (d == Defense::signed_firmware && flags_.test(index_of(Defense::root_of_trust))) return true;
    return flags_.test(index_of(d));
}

DefenseProfile& DefenseProfile::set(Defense d, bool on) {
    flags_.set(index_of(d), on);
    return *this;
}

bool DefenseProfile::any_credential_hardening() const {
    return enabled(Defense::unique_credentials) || enabled(Defense::first_use_rotation) ||
           enabled(Defense::complexity_policy) || enabled(Defense::no_hidden_accounts);
}

DefenseProfile DefenseProfile::from_json(const nlohmann::json& j) {
    if (j.is_string()) return parse(j.get<std::string>());
    if (!j.is_object()) throw std::invalid_argument("defense_profile must be an object or preset name");
    DefenseProfile p;
    for (const auto& [key, value] : j.items()) {
        auto d = parse_defense_id(key);
        if (!d) throw std::invalid_argument("unknown defense key: " + key);
        if (!value.is_boolean()) throw std::invalid_argument("defense flag " + key + " must be boolean");
        p.set(*d, value.get<bool>());
    }
    return p;
}

nlohmann::json DefenseProfile::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (int i = 1; i <= kDefenseCount; ++i) {
        auto d = static_cast<Defense>(i);
        j["d" + std::to_string(i)] = enabled(d);
    }
    return j;
}

DefenseProfile DefenseProfile::parse(std::string_view spec) {
    if (spec.empty() || spec == "vulnerable" || spec == "none") return vulnerable();
    if (spec == "hardened" || spec == "all") return hardened();
    DefenseProfile p;
    std::size_t start = 0;
    while (start <= spec.size()) {
        auto end = spec.find(',', start);
        if (end == std::string_view::npos) end = spec.size();
        auto token = spec.substr(start, end - start);
        while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) token.remove_prefix(1);
        while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.remove_suffix(1);
        if (!token.empty()) {
            auto d = parse_defense_id(token);
            if (!d) throw std::invalid_argument("unknown defense: " + std::string(token));
            p.set(*d);
        }
        start = end + 1;
    }
    return p;
}

}  // namespace airrange
