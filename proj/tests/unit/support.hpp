#pragma once

#include <string>

#include <json.hpp>

#include "airrange/device.hpp"
#include "airrange/range.hpp"
#include "airrange/scenario.hpp"

namespace airrange::testing {

inline DeviceOptions device_options(DefenseProfile profile = {}, double initial_psi = 100.0) {
    DeviceOptions o;
    o.profile = profile;
    o.initial.true_psi = initial_psi;
    return o;
}

inline HttpRequest from(HttpRequest r, std::string source = "10.0.0.5") {
    r.source = std::move(source);
    return r;
}

inline HttpRequest with_session(HttpRequest r, const std::string& token) {
    r.headers["cookie"] = "session=" + token;
    return r;
}

inline std::string session_of(const HttpResponse& r) {
    auto it = r.headers.find("Set-Cookie");
    if (it == r.headers.end()) return {};
    const std::string& v = it->second;
    return v.substr(8, v.find(';') - 8);
}

/// Logs in from `source` and returns the session token.
inline std::string login(Device& d, const std::string& user, const std::string& pass,
                         const std::string& source = "10.0.0.5") {
    auto r = d.serve(from(HttpRequest::post("/setpass", {{"user", user}, {"pass", pass}}), source));
    return r ? session_of(*r) : std::string{};
}

inline nlohmann::json params(Device& d, const std::string& source = "10.0.0.5") {
    return d.serve(from(HttpRequest::get("/parameters"), source))->json();
}

inline void step_seconds(Device& d, double seconds, int actuations_per_tick = 0) {
    const auto ticks = static_cast<int>(seconds / d.plant_config().tick + 0.5);
    for (int i = 0; i < ticks; ++i) d.step(actuations_per_tick);
}

/// Scenario built from a JSON fragment on top of quiet defaults.
inline Scenario scenario(nlohmann::json j) {
    if (!j.contains("name")) j["name"] = "test";
    return Scenario::from_json(j);
}

}  // namespace airrange::testing
