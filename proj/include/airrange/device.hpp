#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "airrange/credentials.hpp"
#include "airrange/defense.hpp"
#include "airrange/http.hpp"
#include "airrange/plant.hpp"
#include "airrange/signing.hpp"

namespace airrange {

inline constexpr std::string_view kShippedFirmwareVersion = "2501281017";
inline constexpr std::string_view kApModeAddress = "192.168.50.1";

enum class Plane { control, management };

enum class DenyReason { no_session, insufficient_role, wrong_plane, locked, must_change_credential };
std::string_view to_string(DenyReason r);
int http_status(DenyReason r);
std::optional<DenyReason> parse_deny_reason(std::string_view text);

enum class Route {
    console,
    parameters,
    login,
    set_credential,
    on,
    off,
    reset,
    set_pressure_range,
    set_param,
    calibrate,
    calibrate_zero_point,
    update,
    set_update_key,
};

struct EndpointInfo {
    std::string path;
    std::vector<std::string> aliases;
    Route route;
    bool state_changing;
    Plane plane;  // plane of the endpoint; /setparam varies by key
    std::optional<Permission> permission;
};

/// The controller's HTTP API table.
const std::vector<EndpointInfo>& endpoint_registry();
const EndpointInfo* find_endpoint(std::string_view path);

/// What the gate needs to know about one call.
struct ApiOperation {
    std::string endpoint;
    bool state_changing = false;
    int required_level = 0;
    Plane plane = Plane::control;
};

/// Resolves the gate descriptor; /setparam depends on its key.
ApiOperation resolve_operation(const EndpointInfo& endpoint, const FormFields& form);

struct Session {
    std::string session_id;
    int user_level = 0;
    double created_at = 0.0;
    int failed_attempts = 0;
    std::optional<double> locked_until;
    bool authenticated = false;
    std::string account;
    bool must_change = false;
};

struct AuthDecision {
    bool allowed = true;
    std::optional<DenyReason> reason;

    static AuthDecision allow() { return {}; }
    static AuthDecision deny(DenyReason r) { return {false, r}; }
};

/// The single gate every state-changing handler passes. `session` is the
/// caller's effective session (may be null for a fresh anonymous caller);
/// `token_valid` says whether it was identified by a session token.
AuthDecision authorize(const ApiOperation& op, const Session* session, bool token_valid,
                       const DefenseProfile& profile, Channel channel);

struct FirmwareImage {
    std::string version;
    Bytes payload;
    Digest payload_digest{};
    std::optional<Bytes> signature;

    static FirmwareImage make(std::string version, Bytes payload, std::optional<Bytes> signature = {});
};

enum class AuditKind {
    login_ok,
    login_fail,
    lockout,
    param_change,
    reset,
    update_accepted,
    update_rejected,
    denied,
};
std::string_view to_string(AuditKind k);

struct AuditEvent {
    double sim_time = 0.0;
    AuditKind kind = AuditKind::login_ok;
    std::string actor;   // session id or "anonymous"
    std::string source;  // client address
    std::string detail;

    [[nodiscard]] nlohmann::json to_json() const;
};

struct DeviceOptions {
    std::string serial = "MDR2I-0042";
    PlantConfig plant;
    PlantState initial;
    DeviceConfig config;
    SensorCalibration calibration;
    DefenseProfile profile;
    std::uint64_t seed = 1;
    double boot_duration = 8.0;
    int lockout_threshold = 5;
    double lockout_duration = 60.0;
    bool maintenance_mode = false;
    std::string firmware_version = std::string(kShippedFirmwareVersion);
};

/// The smart controller together with the tank it drives. All state is
/// guarded by one mutex, so handlers and the stepping thread serialize.
class Device {
public:
    explicit Device(DeviceOptions options);

    Device(const Device&) = delete;
    Device& operator=(const Device&) = delete;

    /// Serves one request. Returns nullopt when the device is rebooting or
    /// the request came in on a disabled management listener.
    std::optional<HttpResponse> serve(const HttpRequest& request);

    /// Advances physics by one tick and expires the boot timer.
    void step(int actuations);

    /// Owner commissioning: rotates (d2) or provisions (d4) credentials.
    /// Returns the secrets now valid for every account.
    std::map<std::string, std::string> commission(std::uint64_t owner_seed);

    /// Wi-Fi association check; audited when d9 is on.
    bool accept_wifi_join(std::string_view secret, std::string_view source);

    void set_supply_voltage(double volts);
    void drain_tank();
    void set_maintenance_mode(bool on);

    [[nodiscard]] bool online() const;
    [[nodiscard]] double now() const;
    [[nodiscard]] std::int64_t tick_index() const;
    [[nodiscard]] PlantState plant() const;
    [[nodiscard]] PlantConfig plant_config() const;
    [[nodiscard]] DeviceConfig config() const;
    [[nodiscard]] SensorCalibration calibration() const;
    [[nodiscard]] double reported_psi() const;
    [[nodiscard]] bool tripped() const;
    [[nodiscard]] bool stopped_by_command() const;
    [[nodiscard]] std::vector<AuditEvent> audit_log() const;
    [[nodiscard]] CredentialStore credentials() const;
    [[nodiscard]] std::string firmware_version() const;
    [[nodiscard]] PublicKey verification_key() const;
    [[nodiscard]] const DefenseProfile& profile() const { return profile_; }
    [[nodiscard]] const std::string& serial() const { return serial_; }
    [[nodiscard]] std::size_t session_count() const;
    [[nodiscard]] int reboot_count() const;

private:
    struct SourceState {
        std::string implicit_session;
        int consecutive_failures = 0;
        std::optional<double> locked_until;
    };

    struct Caller {
        Session* session = nullptr;
        bool token_valid = false;
        std::string source;
    };

    bool on(Defense d) const { return profile_.enabled(d); }
    double now_locked() const;
    Session& create_session();
    Caller resolve_caller(const HttpRequest& request);
    void audit(AuditKind kind, const Caller& caller, std::string detail);
    void begin_reboot();

    nlohmann::json parameters_document(int user_level) const;
    std::string console_html() const;

    HttpResponse handle_login(const HttpRequest& request, Caller& caller);
    HttpResponse handle_set_credential(const HttpRequest& request, Caller& caller);
    HttpResponse handle_on(Caller& caller);
    HttpResponse handle_off(Caller& caller);
    HttpResponse handle_reset(Caller& caller);
    HttpResponse handle_set_pressure_range(const FormFields& form, Caller& caller);
    HttpResponse handle_set_param(const FormFields& form, Caller& caller);
    HttpResponse handle_calibrate(const FormFields& form, Caller& caller);
    HttpResponse handle_calibrate_zero_point(const FormFields& form, Caller& caller);
    HttpResponse handle_update(const HttpRequest& request, Caller& caller);
    HttpResponse handle_set_update_key(const FormFields& form, Caller& caller);

    mutable std::mutex mu_;

    const std::string serial_;
    const DefenseProfile profile_;
    const PlantConfig pcfg_;
    const double boot_duration_;
    const int lockout_threshold_;
    const double lockout_duration_;

    PlantState plant_;
    DeviceConfig config_;
    SensorCalibration calibration_;
    CredentialStore creds_;
    PublicKey verification_key_;
    std::string firmware_version_;
    bool maintenance_mode_;

    std::int64_t tick_ = 0;
    bool online_ = true;
    std::int64_t online_at_tick_ = 0;
    bool stopped_ = false;
    int reboots_ = 0;

    std::map<std::string, Session> sessions_;
    std::map<std::string, SourceState> sources_;
    std::vector<AuditEvent> audit_;
    std::mt19937_64 rng_;
};

}  // namespace airrange
