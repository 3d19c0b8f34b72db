#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "airrange/device.hpp"
#include "airrange/netsim.hpp"
#include "airrange/scenario.hpp"

namespace airrange {

struct AttackResult {
    std::string id;
    std::string kind;
    double started = 0.0;
    double ended = 0.0;
    bool success = false;
    nlohmann::json evidence = nlohmann::json::object();
    std::optional<std::string> denied_reason;
    std::optional<std::string> blocked_by;  // defense id such as "D10"
    bool detected = false;                  // the device's audit log recorded the attacker

    [[nodiscard]] nlohmann::json to_json() const;
};

struct AvailabilitySample {
    double t = 0.0;
    int up = 0;
};

/// 1 Hz record of whether the device answered GET /parameters.
struct AvailabilityTrace {
    std::vector<AvailabilitySample> samples;

    [[nodiscard]] double ratio() const;
    /// Ratio over samples with t0 <= t < t1; 1.0 when the window is empty.
    [[nodiscard]] double ratio(double t0, double t1) const;
    [[nodiscard]] int zeros(double t0, double t1) const;
};

/// One row per simulation tick.
struct TraceRow {
    double t = 0.0;
    double true_psi = 0.0;
    double reported_psi = 0.0;
    bool motor = false;
    int available = 1;
    std::array<std::uint64_t, 3> counters{};
    int sorted_ok = 0;
    int twin_believed_ok = 0;
    bool fault_flag = false;
    // Not part of the CSV; kept for evidence.
    bool online = true;
    bool tripped = false;
    double cut_in = 0.0;
    int missorted = 0;
};

/// HTTP client bound to one fabric node. Keeps the session cookie the
/// device hands out, like a browser would.
class ApiClient {
public:
    ApiClient(Fabric& fabric, std::string node);

    Delivery get(const std::string& path);
    Delivery post(const std::string& path, const FormFields& form = {},
                  const std::map<std::string, std::string>& headers = {}, std::string raw_body = {});
    /// GET /parameters parsed, or nullopt when the device did not answer.
    std::optional<nlohmann::json> parameters();

    void forget_session() { cookie_.reset(); }
    [[nodiscard]] const std::optional<std::string>& cookie() const { return cookie_; }
    [[nodiscard]] const std::string& node() const { return node_; }
    [[nodiscard]] std::uint64_t requests() const { return requests_; }

private:
    Delivery send(HttpRequest request);

    Fabric& fabric_;
    std::string node_;
    std::optional<std::string> cookie_;
    std::uint64_t requests_ = 0;
};

/// Response outcome as the attacker sees it.
struct CallOutcome {
    bool accepted = false;               // 200 with RESULT OK
    std::optional<std::string> reason;   // REASON from a denial or error, or the delivery failure
    int status = 0;
};
CallOutcome classify(const Delivery& d);

/// Maps a refusal to the defense responsible for it under `profile`.
std::optional<std::string> blocking_defense(const std::string& reason, const DefenseProfile& profile);

/// What an actor may touch during a tick.
struct AttackEnv {
    Fabric& fabric;
    ApiClient& client;  // the attacker's shared session
    std::int64_t tick = 0;
    std::int64_t ticks_per_second = 10;
    double now = 0.0;
    std::string serial;

    [[nodiscard]] bool on_second() const { return tick % ticks_per_second == 0; }
};

/// Read-only view of a finished run used to derive evidence.
struct RunRecord {
    const std::vector<TraceRow>& trace;
    const AvailabilityTrace& availability;
    const std::vector<AuditEvent>& audit;
    const Device& device;
    const Fabric& fabric;
    std::string attacker_address;
    double end_time = 0.0;
};

class AttackActor {
public:
    AttackActor(ScheduledAttack spec, double run_end);
    virtual ~AttackActor() = default;

    AttackActor(const AttackActor&) = delete;
    AttackActor& operator=(const AttackActor&) = delete;

    [[nodiscard]] const ScheduledAttack& spec() const { return spec_; }
    [[nodiscard]] double window_end() const { return window_end_; }
    [[nodiscard]] bool due(double now) const { return now + 1e-9 >= spec_.t_start && now < window_end_ - 1e-9; }

    /// Called once per tick while due.
    virtual void act(AttackEnv& env) = 0;
    /// Called at whole seconds right after the device published telemetry.
    virtual void after_telemetry(AttackEnv& /*env*/) {}

    /// Builds the result from what the actor saw plus the run record.
    [[nodiscard]] AttackResult finish(const RunRecord& run, const DefenseProfile& profile) const;

protected:
    virtual void evaluate(const RunRecord& run, const DefenseProfile& profile, AttackResult& r) const = 0;

    /// Params validated on construction; unknown keys are a schema error.
    void allow_params(std::initializer_list<const char*> keys) const;
    [[nodiscard]] double param(const char* key, double fallback) const;
    [[nodiscard]] bool param_bool(const char* key, bool fallback) const;
    [[nodiscard]] std::string param_text(const char* key, const std::string& fallback) const;

    ScheduledAttack spec_;
    double window_end_;
    std::optional<double> ended_;  // set by one-shot actors when they finish
};

/// Builds the actor for a scheduled attack. Throws SchemaError on bad params.
std::unique_ptr<AttackActor> make_attack(const ScheduledAttack& spec, double run_end);

}  // namespace airrange
