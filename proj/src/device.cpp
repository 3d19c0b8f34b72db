#include "airrange/device.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fmt/format.h>

namespace airrange {

namespace {

HttpResponse ok_response() { return HttpResponse::ok_json({{"RESULT", "OK"}}); }

HttpResponse error_response(std::string_view reason, int status = 400) {
    return HttpResponse::ok_json({{"RESULT", "ERROR"}, {"REASON", reason}}, status);
}

HttpResponse deny_response(DenyReason reason) {
    return HttpResponse::ok_json({{"RESULT", "DENIED"}, {"REASON", to_string(reason)}},
                                 http_status(reason));
}

std::optional<double> parse_number(const FormFields& form, const std::string& key) {
    auto it = form.find(key);
    if (it == form.end() || it->second.empty()) return std::nullopt;
    const std::string& text = it->second;
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string field(const FormFields& form, const std::string& key) {
    auto it = form.find(key);
    return it == form.end() ? std::string{} : it->second;
}

double round_to(double v, double step) { return std::round(v / step) * step; }

}  // namespace

std::string_view to_string(DenyReason r) {
    switch (r) {
        case DenyReason::no_session: return "no_session";
        case DenyReason::insufficient_role: return "insufficient_role";
        case DenyReason::wrong_plane: return "wrong_plane";
        case DenyReason::locked: return "locked";
        case DenyReason::must_change_credential: return "must_change_credential";
    }
    return "no_session";
}

int http_status(DenyReason r) { return r == DenyReason::no_session ? 401 : 403; }

std::optional<DenyReason> parse_deny_reason(std::string_view text) {
    for (auto r : {DenyReason::no_session, DenyReason::insufficient_role, DenyReason::wrong_plane,
                   DenyReason::locked, DenyReason::must_change_credential}) {
        if (to_string(r) == text) return r;
    }
    return std::nullopt;
}

std::string_view to_string(AuditKind k) {
    switch (k) {
        case AuditKind::login_ok: return "login_ok";
        case AuditKind::login_fail: return "login_fail";
        case AuditKind::lockout: return "lockout";
        case AuditKind::param_change: return "param_change";
        case AuditKind::reset: return "reset";
        case AuditKind::update_accepted: return "update_accepted";
        case AuditKind::update_rejected: return "update_rejected";
        case AuditKind::denied: return "denied";
    }
    return "denied";
}

nlohmann::json AuditEvent::to_json() const {
    return {{"sim_time", sim_time}, {"kind", to_string(kind)}, {"actor", actor},
            {"source", source},     {"detail", detail}};
}

const std::vector<EndpointInfo>& endpoint_registry() {
    static const std::vector<EndpointInfo> registry = {
        {"/", {}, Route::console, false, Plane::control, std::nullopt},
        {"/parameters", {"/parameter", "/getparams"}, Route::parameters, false, Plane::control, std::nullopt},
        {"/setpass", {}, Route::login, false, Plane::control, std::nullopt},
        {"/setcredential", {}, Route::set_credential, false, Plane::control, std::nullopt},
        {"/on", {}, Route::on, true, Plane::control, Permission::start_stop},
        {"/off", {}, Route::off, true, Plane::control, Permission::start_stop},
        {"/reset", {}, Route::reset, true, Plane::control, Permission::device_reset},
        {"/setpressurerange", {}, Route::set_pressure_range, true, Plane::management,
         Permission::pressure_range},
        {"/setparam", {"/paramset"}, Route::set_param, true, Plane::management,
         Permission::voltage_thresholds},
        {"/calibrate", {}, Route::calibrate, true, Plane::management, Permission::recalibrate},
        {"/calibratezeropoint", {}, Route::calibrate_zero_point, true, Plane::management,
         Permission::recalibrate},
        {"/update", {}, Route::update, true, Plane::management, Permission::firmware_update},
        {"/setupdatekey", {}, Route::set_update_key, true, Plane::management,
         Permission::firmware_update},
    };
    return registry;
}

const EndpointInfo* find_endpoint(std::string_view path) {
    for (const auto& e : endpoint_registry()) {
        if (e.path == path) return &e;
        if (std::find(e.aliases.begin(), e.aliases.end(), path) != e.aliases.end()) return &e;
    }
    return nullptr;
}

ApiOperation resolve_operation(const EndpointInfo& endpoint, const FormFields& form) {
    ApiOperation op{endpoint.path, endpoint.state_changing, 0, endpoint.plane};
    if (endpoint.permission) op.required_level = required_level(*endpoint.permission);
    if (endpoint.route == Route::set_param) {
        const std::string key = field(form, "key");
        if (key == "OVERVOLT" || key == "UNDERVOLT") {
            op.plane = Plane::management;
            op.required_level = required_level(Permission::voltage_thresholds);
        } else if (key == "UNIT") {
            op.plane = Plane::control;
            op.required_level = required_level(Permission::change_unit);
        } else if (key == "TARGET") {
            op.plane = Plane::control;
            op.required_level = required_level(Permission::set_target);
        } else {
            op.plane = Plane::management;
            op.required_level = user_level(Role::cpc);
        }
    }
    return op;
}

AuthDecision authorize(const ApiOperation& op, const Session* session, bool token_valid,
                       const DefenseProfile& profile, Channel channel) {
    if (profile.enabled(Defense::plane_separation) && op.plane == Plane::management &&
        channel != Channel::management) {
        return AuthDecision::deny(DenyReason::wrong_plane);
    }
    const bool authenticated = session != nullptr && session->authenticated;
    if (profile.enabled(Defense::api_authentication) && op.state_changing &&
        !(token_valid && authenticated)) {
        return AuthDecision::deny(DenyReason::no_session);
    }
    const int level = session != nullptr ? session->user_level : 0;
    if (profile.enabled(Defense::server_authorization) && op.required_level > level) {
        return AuthDecision::deny(DenyReason::insufficient_role);
    }
    if (session != nullptr && session->must_change && op.state_changing && op.required_level > 0) {
        return AuthDecision::deny(DenyReason::must_change_credential);
    }
    return AuthDecision::allow();
}

FirmwareImage FirmwareImage::make(std::string version, Bytes payload, std::optional<Bytes> signature) {
    FirmwareImage img;
    img.version = std::move(version);
    img.payload_digest = sha256(img.payload = std::move(payload));
    img.signature = std::move(signature);
    return img;
}

Device::Device(DeviceOptions options)
    : serial_(std::move(options.serial)),
      profile_(options.profile),
      pcfg_(options.plant),
      boot_duration_(options.boot_duration),
      lockout_threshold_(options.lockout_threshold),
      lockout_duration_(options.lockout_duration),
      plant_(options.initial),
      config_(options.config),
      calibration_(options.calibration),
      creds_(CredentialStore::provision(serial_, profile_, options.seed)),
      verification_key_(vendor_keypair().public_key),
      firmware_version_(std::move(options.firmware_version)),
      maintenance_mode_(options.maintenance_mode),
      rng_(options.seed ^ 0x5eed5e55105ull) {}

double Device::now_locked() const { return round_to(static_cast<double>(tick_) * pcfg_.tick, 1e-6); }

Session& Device::create_session() {
    std::string id;
    do {
        id = fmt::format("{:016x}", rng_());
    } while (sessions_.count(id) != 0);
    Session s;
    s.session_id = id;
    s.created_at = now_locked();
    return sessions_.emplace(id, std::move(s)).first->second;
}

Device::Caller Device::resolve_caller(const HttpRequest& request) {
    Caller caller;
    caller.source = request.source;
    if (auto token = request.session_token()) {
        auto it = sessions_.find(*token);
        if (it != sessions_.end()) {
            caller.session = &it->second;
            caller.token_valid = true;
            return caller;
        }
    }
    SourceState& src = sources_[request.source];
    auto it = sessions_.find(src.implicit_session);
    if (it == sessions_.end()) {
        Session& s = create_session();
        src.implicit_session = s.session_id;
        caller.session = &s;
    } else {
        caller.session = &it->second;
    }
    return caller;
}

void Device::audit(AuditKind kind, const Caller& caller, std::string detail) {
    if (!on(Defense::audit_log)) return;
    AuditEvent e;
    e.sim_time = now_locked();
    e.kind = kind;
    e.actor = (caller.session != nullptr && caller.session->authenticated) ? caller.session->session_id
                                                                           : "anonymous";
    e.source = caller.source;
    e.detail = std::move(detail);
    audit_.push_back(std::move(e));
}

void Device::begin_reboot() {
    online_ = false;
    ++reboots_;
    online_at_tick_ = tick_ + static_cast<std::int64_t>(std::llround(boot_duration_ / pcfg_.tick));
    sessions_.clear();
    for (auto& [_, src] : sources_) src.implicit_session.clear();
    stopped_ = false;
    plant_.motor_on = false;
}

std::optional<HttpResponse> Device::serve(const HttpRequest& request) {
    std::lock_guard lock(mu_);
    if (!online_) return std::nullopt;
    if (request.channel == Channel::management && !maintenance_mode_) return std::nullopt;

    const EndpointInfo* endpoint = find_endpoint(request.path);
    if (endpoint == nullptr) return error_response("not_found", 404);

    const bool read_route = endpoint->route == Route::console || endpoint->route == Route::parameters;
    if (!read_route && request.method != Method::post) return error_response("method_not_allowed", 405);

    Caller caller = resolve_caller(request);
    switch (endpoint->route) {
        case Route::console: return HttpResponse::html(console_html());
        case Route::parameters:
            return HttpResponse::ok_json(parameters_document(caller.session->user_level));
        case Route::login: return handle_login(request, caller);
        case Route::set_credential: return handle_set_credential(request, caller);
        default: break;
    }

    const FormFields form = request.form();
    const ApiOperation op = resolve_operation(*endpoint, form);
    const AuthDecision decision =
        authorize(op, caller.session, caller.token_valid, profile_, request.channel);
    if (!decision.allowed) {
        audit(AuditKind::denied, caller, fmt::format("{} {}", op.endpoint, to_string(*decision.reason)));
        return deny_response(*decision.reason);
    }

    switch (endpoint->route) {
        case Route::on: return handle_on(caller);
        case Route::off: return handle_off(caller);
        case Route::reset: return handle_reset(caller);
        case Route::set_pressure_range: return handle_set_pressure_range(form, caller);
        case Route::set_param: return handle_set_param(form, caller);
        case Route::calibrate: return handle_calibrate(form, caller);
        case Route::calibrate_zero_point: return handle_calibrate_zero_point(form, caller);
        case Route::update: return handle_update(request, caller);
        case Route::set_update_key: return handle_set_update_key(form, caller);
        default: return error_response("not_found", 404);
    }
}

HttpResponse Device::handle_login(const HttpRequest& request, Caller& caller) {
    const FormFields form = request.form();
    const std::string user = field(form, "user");
    const std::string pass = field(form, "pass");
    const double now = now_locked();

    SourceState& src = sources_[request.source];
    if (src.locked_until && now >= *src.locked_until) {
        src.locked_until.reset();
        src.consecutive_failures = 0;
    }
    if (on(Defense::lockout) && src.locked_until) {
        audit(AuditKind::lockout, caller, fmt::format("user={} refused while locked", user));
        return deny_response(DenyReason::locked);
    }

    Session& s = *caller.session;
    HttpResponse response;
    nlohmann::json body = {{"RESULT", "OK"}};
    if (auto role = creds_.verify(user, pass)) {
        s.user_level = user_level(*role);
        s.authenticated = true;
        s.account = user;
        s.failed_attempts = 0;
        src.consecutive_failures = 0;
        const Account* account = creds_.find(user);
        s.must_change = on(Defense::first_use_rotation) && account->must_change;
        if (s.must_change) body["ACTION"] = "must_change_credential";
        audit(AuditKind::login_ok, caller, fmt::format("user={}", user));
    } else {
        s.user_level = 0;
        s.authenticated = false;
        s.account.clear();
        s.must_change = false;
        ++src.consecutive_failures;
        s.failed_attempts = src.consecutive_failures;
        std::string detail = fmt::format("user={}", user);
        if (on(Defense::lockout) && src.consecutive_failures >= lockout_threshold_) {
            src.locked_until = now + lockout_duration_;
            s.locked_until = src.locked_until;
            detail += fmt::format(" locked_until={}", *src.locked_until);
        }
        audit(AuditKind::login_fail, caller, std::move(detail));
    }
    response = HttpResponse::ok_json(body);
    response.headers["Set-Cookie"] = "session=" + s.session_id;
    return response;
}

HttpResponse Device::handle_set_credential(const HttpRequest& request, Caller& caller) {
    const FormFields form = request.form();
    const std::string user = field(form, "user");
    auto result = creds_.change(user, field(form, "pass"), field(form, "newpass"));
    if (result != CredentialChange::ok) return error_response(to_string(result));
    for (auto& [_, s] : sessions_) {
        if (s.account == user) s.must_change = false;
    }
    audit(AuditKind::param_change, caller, fmt::format("credential changed for {}", user));
    return ok_response();
}

HttpResponse Device::handle_on(Caller& caller) {
    stopped_ = false;
    audit(AuditKind::param_change, caller, "on");
    return ok_response();
}

HttpResponse Device::handle_off(Caller& caller) {
    stopped_ = true;
    plant_.motor_on = false;
    audit(AuditKind::param_change, caller, "off");
    return ok_response();
}

HttpResponse Device::handle_reset(Caller& caller) {
    audit(AuditKind::reset, caller, "reset requested");
    HttpResponse r = ok_response();
    begin_reboot();
    return r;
}

HttpResponse Device::handle_set_pressure_range(const FormFields& form, Caller& caller) {
    auto low = parse_number(form, "low");
    auto high = parse_number(form, "high");
    if (!low || !high) return error_response("invalid_value");
    if (on(Defense::server_authorization) && !config_.setpoints_within_limits(*low, *high)) {
        return error_response("range_rejected");
    }
    config_.cut_in_psi = *low;
    config_.cut_out_psi = *high;
    audit(AuditKind::param_change, caller, fmt::format("range {}..{}", *low, *high));
    return ok_response();
}

HttpResponse Device::handle_set_param(const FormFields& form, Caller& caller) {
    const std::string key = field(form, "key");
    if (key == "UNIT") {
        try {
            config_.unit = parse_unit(field(form, "value"));
        } catch (const std::invalid_argument&) {
            return error_response("invalid_value");
        }
    } else if (key == "OVERVOLT" || key == "UNDERVOLT" || key == "TARGET") {
        auto value = parse_number(form, "value");
        if (!value) return error_response("invalid_value");
        if (key == "OVERVOLT") {
            config_.over_volt = *value;
        } else if (key == "UNDERVOLT") {
            config_.under_volt = *value;
        } else {
            if (on(Defense::server_authorization) &&
                !config_.setpoints_within_limits(config_.cut_in_psi, *value)) {
                return error_response("range_rejected");
            }
            config_.cut_out_psi = *value;
        }
    } else {
        return error_response("unknown_key");
    }
    audit(AuditKind::param_change, caller, fmt::format("{}={}", key, field(form, "value")));
    return ok_response();
}

HttpResponse Device::handle_calibrate(const FormFields& form, Caller& caller) {
    auto scale = parse_number(form, "scale");
    if (!scale) return error_response("invalid_value");
    calibration_.scale = *scale;
    audit(AuditKind::param_change, caller, fmt::format("scale={}", *scale));
    return ok_response();
}

HttpResponse Device::handle_calibrate_zero_point(const FormFields& form, Caller& caller) {
    auto offset = parse_number(form, "offset");
    if (!offset) return error_response("invalid_value");
    calibration_.zero_offset_psi = *offset;
    audit(AuditKind::param_change, caller, fmt::format("offset={}", *offset));
    return ok_response();
}

HttpResponse Device::handle_update(const HttpRequest& request, Caller& caller) {
    std::optional<Bytes> signature;
    if (auto hex = request.header("x-signature")) signature = from_hex(*hex);
    FirmwareImage image = FirmwareImage::make(request.header("x-firmware-version").value_or("unversioned"),
                                              Bytes(request.body.begin(), request.body.end()), signature);
    if (on(Defense::signed_firmware)) {
        const bool verified =
            image.signature && verify_detached(image.payload, *image.signature, verification_key_);
        if (!verified) {
            audit(AuditKind::update_rejected, caller,
                  fmt::format("version={} digest={}", image.version, to_hex(image.payload_digest)));
            return error_response("bad_signature");
        }
    }
    firmware_version_ = image.version;
    audit(AuditKind::update_accepted, caller,
          fmt::format("version={} digest={}", image.version, to_hex(image.payload_digest)));
    HttpResponse r = ok_response();
    begin_reboot();
    return r;
}

HttpResponse Device::handle_set_update_key(const FormFields& form, Caller& caller) {
    if (on(Defense::root_of_trust)) return error_response("immutable_key", 403);
    auto key = from_hex(field(form, "key"));
    if (!key || key->size() != verification_key_.size()) return error_response("invalid_value");
    std::copy(key->begin(), key->end(), verification_key_.begin());
    audit(AuditKind::param_change, caller, "verification key replaced");
    return ok_response();
}

nlohmann::json Device::parameters_document(int level) const {
    const double reading = airrange::reported_psi(plant_, calibration_);
    return {
        {"PRESSURE", to_display_unit(reading, config_.unit)},
        {"UNIT", to_string(config_.unit)},
        {"MOTOR", plant_.motor_on ? 1 : 0},
        {"TARGETLOW", config_.cut_in_psi},
        {"TARGETHIGH", config_.cut_out_psi},
        {"VOLTAGE", plant_.supply_voltage},
        {"OVERVOLT", config_.over_volt},
        {"UNDERVOLT", config_.under_volt},
        {"USERLEVEL", level},
        {"RUNTIME", round_to(plant_.run_time_total, 0.1)},
        {"FIRMWARE", firmware_version_},
        {"SERIAL", serial_},
    };
}

std::string Device::console_html() const {
    std::string options;
    for (const auto& a : creds_.accounts()) options += fmt::format("<option value=\"{}\">", a.name);
    return fmt::format(
        "<!DOCTYPE html>\n<html><head><title>MDR2i {0}</title></head><body>\n"
        "<h1>Compressor controller {0}</h1>\n"
        "<div id=\"status\">firmware {1}</div>\n"
        "<form method=\"post\" action=\"/setpass\">\n"
        "<input name=\"user\" list=\"accounts\"><datalist id=\"accounts\">{2}</datalist>\n"
        "<input name=\"pass\" type=\"password\">\n"
        "<button type=\"submit\">Login</button>\n"
        "</form>\n</body></html>\n",
        serial_, firmware_version_, options);
}

void Device::step(int actuations) {
    std::lock_guard lock(mu_);
    const bool running = online_ && !stopped_;
    plant_ = tick_plant(plant_, pcfg_, config_, actuations, running);
    ++tick_;
    if (!online_ && tick_ >= online_at_tick_) online_ = true;
}

std::map<std::string, std::string> Device::commission(std::uint64_t owner_seed) {
    std::lock_guard lock(mu_);
    std::map<std::string, std::string> secrets;
    for (const auto& account : std::vector<Account>(creds_.accounts())) {
        std::string fresh = generate_secret(owner_seed, "owner-" + account.name, true);
        if (on(Defense::no_hidden_accounts) && account.role != Role::operator_role) {
            creds_.provision_owner(account.name, fresh);
        } else if (on(Defense::first_use_rotation)) {
            creds_.change(account.name, account.secret, fresh);
        }
    }
    for (const auto& account : creds_.accounts()) secrets[account.name] = account.secret;
    return secrets;
}

bool Device::accept_wifi_join(std::string_view secret, std::string_view source) {
    std::lock_guard lock(mu_);
    const bool ok = secret == creds_.join_secret();
    Caller caller;
    caller.source = std::string(source);
    audit(ok ? AuditKind::login_ok : AuditKind::login_fail, caller, "wifi_join");
    return ok;
}

void Device::set_supply_voltage(double volts) {
    std::lock_guard lock(mu_);
    plant_.supply_voltage = volts;
}

void Device::drain_tank() {
    std::lock_guard lock(mu_);
    plant_ = vent(plant_);
}

void Device::set_maintenance_mode(bool on) {
    std::lock_guard lock(mu_);
    maintenance_mode_ = on;
}

bool Device::online() const {
    std::lock_guard lock(mu_);
    return online_;
}

double Device::now() const {
    std::lock_guard lock(mu_);
    return now_locked();
}

std::int64_t Device::tick_index() const {
    std::lock_guard lock(mu_);
    return tick_;
}

PlantState Device::plant() const {
    std::lock_guard lock(mu_);
    return plant_;
}

PlantConfig Device::plant_config() const { return pcfg_; }

DeviceConfig Device::config() const {
    std::lock_guard lock(mu_);
    return config_;
}

SensorCalibration Device::calibration() const {
    std::lock_guard lock(mu_);
    return calibration_;
}

double Device::reported_psi() const {
    std::lock_guard lock(mu_);
    return airrange::reported_psi(plant_, calibration_);
}

bool Device::tripped() const {
    std::lock_guard lock(mu_);
    return voltage_trip(plant_, config_);
}

bool Device::stopped_by_command() const {
    std::lock_guard lock(mu_);
    return stopped_;
}

std::vector<AuditEvent> Device::audit_log() const {
    std::lock_guard lock(mu_);
    return audit_;
}

CredentialStore Device::credentials() const {
    std::lock_guard lock(mu_);
    return creds_;
}

std::string Device::firmware_version() const {
    std::lock_guard lock(mu_);
    return firmware_version_;
}

PublicKey Device::verification_key() const {
    std::lock_guard lock(mu_);
    return verification_key_;
}

std::size_t Device::session_count() const {
    std::lock_guard lock(mu_);
    return sessions_.size();
}

int Device::reboot_count() const {
    std::lock_guard lock(mu_);
    return reboots_;
}

}  // namespace airrange
