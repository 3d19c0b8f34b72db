#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "airrange/attacks.hpp"
#include "airrange/device.hpp"
#include "airrange/netsim.hpp"
#include "airrange/scenario.hpp"
#include "airrange/threat_model.hpp"
#include "airrange/twin.hpp"
#include "airrange/workcell.hpp"

namespace airrange {

inline constexpr std::string_view kReportSchemaVersion = "airrange.report/1";

struct RunResult {
    Scenario scenario;
    std::vector<AttackResult> attacks;
    std::vector<TraceRow> trace;
    AvailabilityTrace availability;
    WorkcellState workcell;
    TwinEstimate twin;
    DivergenceReport divergence;
    std::vector<AuditEvent> audit;
    std::vector<CaptureRecord> captures;
    std::vector<nlohmann::json> link_events;
    std::vector<nlohmann::json> operator_log;
    std::size_t telemetry_messages = 0;
    int reboots = 0;
    nlohmann::json final_state;
    std::map<Objective, TreeEvaluation> objectives;
    nlohmann::json matrix_eval;

    [[nodiscard]] const AttackResult* attack(std::string_view id) const;
    /// Fraction of ticks with the motor running, t0 <= t < t1.
    [[nodiscard]] double motor_duty(double t0, double t1) const;

    [[nodiscard]] nlohmann::json report() const;
    [[nodiscard]] std::string traces_csv() const;
    [[nodiscard]] std::string audit_jsonl() const;
    [[nodiscard]] std::string captures_jsonl() const;

    /// Writes report.json, traces.csv, audit.jsonl, captures.jsonl and
    /// matrix-eval.json. Throws IoError.
    void write(const std::filesystem::path& out_dir) const;
};

/// Node names on the fabric.
inline constexpr const char* kOperatorNode = "operator";
inline constexpr const char* kMonitorNode = "monitor";
inline constexpr const char* kTwinNode = "twin";
inline constexpr const char* kAttackerNode = "attacker";

/// The assembled range: plant and controller, fabric, workcell, twin,
/// availability monitor, operator and attacker. One tick at a time, in a
/// fixed order, so runs are reproducible.
class Range {
public:
    struct Options {
        bool record_trace = true;
    };

    explicit Range(Scenario scenario);
    Range(Scenario scenario, Options options);
    ~Range();

    Range(const Range&) = delete;
    Range& operator=(const Range&) = delete;

    void step();
    [[nodiscard]] bool finished() const { return tick_ >= scenario_.total_ticks(); }
    /// Collects results; call once after the last step.
    RunResult finish();

    [[nodiscard]] std::int64_t tick() const { return tick_; }
    [[nodiscard]] double now() const;
    Device& device() { return *device_; }
    Fabric& fabric() { return *fabric_; }
    [[nodiscard]] const Scenario& scenario() const { return scenario_; }
    /// Secrets the legitimate owner holds after commissioning.
    [[nodiscard]] const std::map<std::string, std::string>& owner_secrets() const { return secrets_; }

private:
    void apply_event(const ScenarioEvent& e);
    void second_boundary(const std::vector<PlcCommand>& commands);

    Scenario scenario_;
    Options options_;
    std::unique_ptr<Device> device_;
    std::unique_ptr<Fabric> fabric_;
    std::unique_ptr<ApiClient> operator_;
    std::unique_ptr<ApiClient> monitor_;
    std::unique_ptr<ApiClient> twin_client_;
    std::unique_ptr<ApiClient> attacker_;
    std::vector<std::unique_ptr<AttackActor>> actors_;
    std::map<std::string, std::string> secrets_;
    TelemetryBus::SubscriptionId twin_subscription_ = 0;

    WorkcellState workcell_;
    TwinEstimate twin_;
    std::vector<PlcCommand> unpolled_commands_;
    AvailabilityTrace availability_;
    std::vector<TraceRow> trace_;
    std::vector<nlohmann::json> operator_log_;
    std::int64_t tick_ = 0;
    int last_available_ = 1;
};

/// Runs a scenario to completion.
RunResult execute(const Scenario& scenario);

/// Per-row outcome of the attacks that ran, against the defenses enabled.
nlohmann::json evaluate_matrix(const ThreatModel& model, const DefenseProfile& profile,
                               const std::vector<AttackResult>& results);

}  // namespace airrange
