#include "airrange/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "airrange/signing.hpp"

namespace airrange {

using nlohmann::json;

namespace {

constexpr double kEps = 1e-9;

double round1(double v) { return std::round(v * 10.0) / 10.0; }

std::vector<const TraceRow*> rows_in(const RunRecord& run, double t0, double t1) {
    std::vector<const TraceRow*> out;
    for (const auto& row : run.trace) {
        if (row.t + kEps >= t0 && row.t < t1 - kEps) out.push_back(&row);
    }
    return out;
}

double motor_duty(const std::vector<const TraceRow*>& rows) {
    if (rows.empty()) return 0.0;
    auto on = std::count_if(rows.begin(), rows.end(), [](const TraceRow* r) { return r->motor; });
    return static_cast<double>(on) / static_cast<double>(rows.size());
}

/// (t, true, reported) once per second inside the window.
json pressure_series(const RunRecord& run, double t0, double t1, std::int64_t per_second) {
    json series = json::array();
    std::int64_t i = 0;
    for (const auto* row : rows_in(run, t0, t1)) {
        if (i++ % per_second != 0) continue;
        series.push_back({row->t, row->true_psi, row->reported_psi});
    }
    return series;
}

}  // namespace

// ---------------------------------------------------------------------------

json AttackResult::to_json() const {
    json j = {{"id", id},         {"kind", kind},         {"started", started},
              {"ended", ended},   {"success", success},   {"evidence", evidence},
              {"detected", detected}};
    j["denied_reason"] = denied_reason ? json(*denied_reason) : json(nullptr);
    j["blocked_by"] = blocked_by ? json(*blocked_by) : json(nullptr);
    return j;
}

double AvailabilityTrace::ratio() const {
    if (samples.empty()) return 1.0;
    int up = 0;
    for (const auto& s : samples) up += s.up;
    return static_cast<double>(up) / static_cast<double>(samples.size());
}

double AvailabilityTrace::ratio(double t0, double t1) const {
    int n = 0;
    int up = 0;
    for (const auto& s : samples) {
        if (s.t + kEps >= t0 && s.t < t1 - kEps) {
            ++n;
            up += s.up;
        }
    }
    return n == 0 ? 1.0 : static_cast<double>(up) / n;
}

int AvailabilityTrace::zeros(double t0, double t1) const {
    int n = 0;
    for (const auto& s : samples) {
        if (s.t + kEps >= t0 && s.t < t1 - kEps && s.up == 0) ++n;
    }
    return n;
}

// ---------------------------------------------------------------------------

ApiClient::ApiClient(Fabric& fabric, std::string node) : fabric_(fabric), node_(std::move(node)) {}

Delivery ApiClient::send(HttpRequest request) {
    ++requests_;
    if (cookie_) request.headers["cookie"] = "session=" + *cookie_;
    Delivery d = fabric_.deliver(node_, fabric_.device_address(), std::move(request));
    if (d.response) {
        auto it = d.response->headers.find("Set-Cookie");
        if (it != d.response->headers.end()) {
            const std::string& v = it->second;
            const auto eq = v.find('=');
            const auto semi = v.find(';');
            if (eq != std::string::npos) cookie_ = v.substr(eq + 1, semi == std::string::npos ? semi : semi - eq - 1);
        }
    }
    return d;
}

Delivery ApiClient::get(const std::string& path) { return send(HttpRequest::get(path)); }

Delivery ApiClient::post(const std::string& path, const FormFields& form,
                         const std::map<std::string, std::string>& headers, std::string raw_body) {
    HttpRequest r = HttpRequest::post(path, form);
    if (!raw_body.empty()) r.body = std::move(raw_body);
    for (const auto& [k, v] : headers) r.headers[k] = v;
    return send(std::move(r));
}

std::optional<json> ApiClient::parameters() {
    Delivery d = get("/parameters");
    if (!d.delivered() || d.response->status != 200) return std::nullopt;
    try {
        return d.response->json();
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

CallOutcome classify(const Delivery& d) {
    CallOutcome o;
    if (!d.delivered()) {
        o.reason = std::string(to_string(d.status));
        return o;
    }
    o.status = d.response->status;
    try {
        json body = d.response->json();
        const std::string result = body.value("RESULT", "");
        o.accepted = o.status == 200 && result == "OK";
        if (!o.accepted) o.reason = body.value("REASON", fmt::format("http_{}", o.status));
    } catch (const json::exception&) {
        o.accepted = o.status == 200;
        if (!o.accepted) o.reason = fmt::format("http_{}", o.status);
    }
    return o;
}

std::optional<std::string> blocking_defense(const std::string& reason, const DefenseProfile& p) {
    auto when = [&](Defense d) -> std::optional<std::string> {
        if (p.enabled(d)) return defense_id(d);
        return std::nullopt;
    };
    if (reason == "no_session" || reason == "publish_rejected") return when(Defense::api_authentication);
    if (reason == "insufficient_role" || reason == "range_rejected") return when(Defense::server_authorization);
    if (reason == "wrong_plane") return when(Defense::plane_separation);
    if (reason == "locked" || reason == "lockout") return when(Defense::lockout);
    if (reason == "must_change_credential") return when(Defense::first_use_rotation);
    if (reason == "bad_signature") return when(Defense::signed_firmware);
    if (reason == "immutable_key") return when(Defense::root_of_trust);
    if (reason == "opaque_capture") return when(Defense::transport_security);
    if (reason == "deauth_ignored") return when(Defense::mgmt_frame_protection);
    if (reason == "join_rejected") {
        if (auto d = when(Defense::wpa3_join_secret)) return d;
        return when(Defense::unique_credentials);
    }
    if (reason == "credential_rejected") {
        for (Defense d : {Defense::no_hidden_accounts, Defense::first_use_rotation, Defense::complexity_policy,
                          Defense::unique_credentials}) {
            if (auto id = when(d)) return id;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

AttackActor::AttackActor(ScheduledAttack spec, double run_end) : spec_(std::move(spec)), window_end_(run_end) {
    if (spec_.params.contains("duration_s")) {
        const auto& v = spec_.params.at("duration_s");
        if (!v.is_number() || v.get<double>() < 0) {
            throw SchemaError(fmt::format("{}: duration_s must be a non-negative number", spec_.id));
        }
        window_end_ = std::min(run_end, spec_.t_start + v.get<double>());
    }
}

void AttackActor::allow_params(std::initializer_list<const char*> keys) const {
    for (const auto& [key, _] : spec_.params.items()) {
        bool known = key == "duration_s" ||
                     std::any_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; });
        if (!known) throw SchemaError(fmt::format("{}: unknown param '{}'", spec_.id, key));
    }
}

double AttackActor::param(const char* key, double fallback) const {
    if (!spec_.params.contains(key)) return fallback;
    const auto& v = spec_.params.at(key);
    if (!v.is_number()) throw SchemaError(fmt::format("{}: param {} must be a number", spec_.id, key));
    return v.get<double>();
}

bool AttackActor::param_bool(const char* key, bool fallback) const {
    if (!spec_.params.contains(key)) return fallback;
    const auto& v = spec_.params.at(key);
    if (!v.is_boolean()) throw SchemaError(fmt::format("{}: param {} must be a boolean", spec_.id, key));
    return v.get<bool>();
}

std::string AttackActor::param_text(const char* key, const std::string& fallback) const {
    if (!spec_.params.contains(key)) return fallback;
    const auto& v = spec_.params.at(key);
    if (!v.is_string()) throw SchemaError(fmt::format("{}: param {} must be a string", spec_.id, key));
    return v.get<std::string>();
}

AttackResult AttackActor::finish(const RunRecord& run, const DefenseProfile& profile) const {
    AttackResult r;
    r.id = spec_.id;
    r.kind = spec_.kind;
    r.started = spec_.t_start;
    r.ended = ended_.value_or(window_end_);
    evaluate(run, profile, r);
    if (!r.success && r.denied_reason && !r.blocked_by) r.blocked_by = blocking_defense(*r.denied_reason, profile);
    for (const auto& e : run.audit) {
        if (e.source == run.attacker_address && e.sim_time + kEps >= r.started && e.sim_time <= r.ended + kEps) {
            r.detected = true;
            break;
        }
    }
    return r;
}

namespace {

/// Runs once at its start time.
class OneShot : public AttackActor {
public:
    using AttackActor::AttackActor;

    void act(AttackEnv& env) final {
        if (done_) return;
        done_ = true;
        fire(env);
        ended_ = env.now;
    }

protected:
    virtual void fire(AttackEnv& env) = 0;
    bool done_ = false;
};

// AT1
class ApJoin : public OneShot {
public:
    ApJoin(ScheduledAttack s, double end) : OneShot(std::move(s), end) {
        allow_params({"ssid", "psk"});
        psk_ = param_text("psk", "CATMDR2i");
        ssid_ = param_text("ssid", "");
    }

protected:
    void fire(AttackEnv& env) override {
        if (ssid_.empty()) ssid_ = "MDR2i_" + env.serial;
        mode_ = std::string(to_string(env.fabric.link(env.client.node()).mode));
        joined_ = env.fabric.join_ap(env.client.node(), ssid_, psk_);
        address_ = env.fabric.address_of(env.client.node());
    }

    void evaluate(const RunRecord&, const DefenseProfile&, AttackResult& r) const override {
        r.success = joined_;
        r.evidence = {{"ssid", ssid_}, {"psk", psk_}, {"joined", joined_}, {"address", address_}, {"mode", mode_}};
        if (!joined_) r.denied_reason = mode_ == "ap" ? "join_rejected" : "not_in_ap_mode";
    }

private:
    std::string ssid_;
    std::string psk_;
    std::string mode_;
    std::string address_;
    bool joined_ = false;
};

// AT2
class LanDiscovery : public OneShot {
public:
    LanDiscovery(ScheduledAttack s, double end) : OneShot(std::move(s), end) { allow_params({}); }

protected:
    void fire(AttackEnv& env) override {
        for (const auto& addr : env.fabric.address_plan(env.client.node())) {
            ++scanned_;
            for (int port : {80, 443}) {
                if (env.fabric.probe(env.client.node(), addr, port)) {
                    found_ = addr;
                    port_ = port;
                    return;
                }
            }
        }
    }

    void evaluate(const RunRecord& run, const DefenseProfile&, AttackResult& r) const override {
        r.success = found_.has_value() && *found_ == run.fabric.device_address();
        r.evidence = {{"hosts_scanned", scanned_}};
        if (found_) {
            r.evidence["address"] = *found_;
            r.evidence["port"] = port_;
        } else {
            r.denied_reason = "nothing_found";
        }
    }

private:
    std::optional<std::string> found_;
    int port_ = 0;
    int scanned_ = 0;
};

// AT3
class Sniff : public AttackActor {
public:
    Sniff(ScheduledAttack s, double end) : AttackActor(std::move(s), end) { allow_params({}); }

    void act(AttackEnv& env) override {
        if (attached_) return;
        attached_ = true;
        env.fabric.attach_sniffer(env.client.node());
    }

protected:
    void evaluate(const RunRecord& run, const DefenseProfile&, AttackResult& r) const override {
        json creds = json::array();
        int frames = 0;
        int opaque = 0;
        bool verified_any = false;
        const CredentialStore store = run.device.credentials();
        for (const auto& c : run.fabric.captures()) {
            if (c.sim_time + kEps < spec_.t_start || c.sim_time >= window_end_ - kEps) continue;
            ++frames;
            if (c.opaque()) {
                ++opaque;
                continue;
            }
            if (c.path != "/setpass") continue;
            FormFields f = form_decode(*c.body);
            if (!f.count("pass")) continue;
            const bool verified = store.verify(f["user"], f["pass"]).has_value();
            verified_any = verified_any || verified;
            creds.push_back({{"sim_time", c.sim_time}, {"user", f["user"]}, {"pass", f["pass"]}, {"valid", verified}});
        }
        r.success = verified_any;
        r.evidence = {{"frames", frames}, {"opaque_frames", opaque}, {"credentials", creds}};
        if (!r.success) r.denied_reason = opaque > 0 ? "opaque_capture" : "nothing_found";
    }

private:
    bool attached_ = false;
};

// AT4: ascending PIN enumeration against one account.
class BruteForce : public OneShot {
public:
    BruteForce(ScheduledAttack s, double end) : OneShot(std::move(s), end) {
        allow_params({"user", "scan_all", "max_attempts"});
        user_ = param_text("user", "");
        scan_all_ = param_bool("scan_all", false);
        max_attempts_ = static_cast<int>(param("max_attempts", 10000));
        if (max_attempts_ < 1 || max_attempts_ > 10000) {
            throw SchemaError(spec_.id + ": max_attempts must be within 1..10000");
        }
    }

protected:
    void fire(AttackEnv& env) override {
        Delivery page = env.client.get("/");
        if (page.delivered()) {
            const std::string& html = page.response->body;
            std::size_t pos = 0;
            const std::string marker = "<option value=\"";
            while ((pos = html.find(marker, pos)) != std::string::npos) {
                pos += marker.size();
                scraped_.push_back(html.substr(pos, html.find('"', pos) - pos));
            }
        }
        if (user_.empty()) {
            // The privileged account the manual does not tell operators about.
            user_ = std::find(scraped_.begin(), scraped_.end(), "cpc") != scraped_.end()
                        ? "cpc"
                        : (scraped_.empty() ? "cpc" : scraped_.back());
        }
        for (int p = 0; p < max_attempts_; ++p) {
            const std::string pin = fmt::format("{:04d}", p);
            CallOutcome login = classify(env.client.post("/setpass", {{"user", user_}, {"pass", pin}}));
            if (!login.accepted) {
                stop_reason_ = login.reason.value_or("refused");
                break;
            }
            ++attempts_;
            auto params = env.client.post("/getparams");
            if (!params.delivered()) {
                stop_reason_ = std::string(to_string(params.status));
                break;
            }
            int level = 0;
            try {
                level = params.response->json().value("USERLEVEL", 0);
            } catch (const json::exception&) {
            }
            if (level != 0) {
                hits_.push_back({{"pin", pin}, {"user_level", level}, {"attempt", attempts_}});
                if (!scan_all_) break;
            }
        }
        if (scan_all_ && !hits_.empty()) {
            // Leave the shared session holding the first privileged hit.
            env.client.post("/setpass", {{"user", user_}, {"pass", hits_.front()["pin"].get<std::string>()}});
        }
        requests_ = env.client.requests();
    }

    void evaluate(const RunRecord&, const DefenseProfile& profile, AttackResult& r) const override {
        r.success = !hits_.empty();
        r.evidence = {{"user", user_},         {"scraped_accounts", scraped_}, {"attempts", attempts_},
                      {"hits", hits_},         {"scan_all", scan_all_}};
        if (!hits_.empty()) {
            r.evidence["pin"] = hits_.front()["pin"];
            r.evidence["user_level"] = hits_.front()["user_level"];
        }
        if (!r.success) {
            if (stop_reason_ == "locked") {
                r.denied_reason = "lockout";
            } else if (!stop_reason_.empty()) {
                r.denied_reason = stop_reason_ == "unavailable" ? "device_unavailable" : stop_reason_;
            } else {
                r.denied_reason = "nothing_found";
                r.blocked_by = blocking_defense("credential_rejected", profile);
            }
        }
    }

private:
    std::string user_;
    bool scan_all_ = false;
    int max_attempts_ = 10000;
    int attempts_ = 0;
    std::uint64_t requests_ = 0;
    std::vector<std::string> scraped_;
    json hits_ = json::array();
    std::string stop_reason_;
};

// AT5
class SharedCredentials : public OneShot {
public:
    SharedCredentials(ScheduledAttack s, double end) : OneShot(std::move(s), end) {
        allow_params({"user", "pin"});
        user_ = param_text("user", "cpc");
        pin_ = param_text("pin", "4321");
    }

protected:
    void fire(AttackEnv& env) override {
        Delivery d = env.client.post("/setpass", {{"user", user_}, {"pass", pin_}});
        CallOutcome o = classify(d);
        if (!o.accepted) {
            reason_ = o.reason.value_or("refused");
            return;
        }
        try {
            if (d.response->json().value("ACTION", "") == "must_change_credential") must_change_ = true;
        } catch (const json::exception&) {
        }
        if (auto params = env.client.parameters()) level_ = params->value("USERLEVEL", 0);
    }

    void evaluate(const RunRecord&, const DefenseProfile&, AttackResult& r) const override {
        r.success = reason_.empty() && level_ > 0 && !must_change_;
        r.evidence = {{"user", user_}, {"pin", pin_}, {"user_level", level_}, {"must_change", must_change_}};
        if (r.success) return;
        if (!reason_.empty()) {
            r.denied_reason = reason_;
        } else if (must_change_) {
            r.denied_reason = "must_change_credential";
        } else {
            r.denied_reason = "credential_rejected";
        }
    }

private:
    std::string user_;
    std::string pin_;
    std::string reason_;
    int level_ = 0;
    bool must_change_ = false;
};

// AT6: a state-changing call with no credentials at all.
class UnauthApi : public OneShot {
public:
    UnauthApi(ScheduledAttack s, double end) : OneShot(std::move(s), end) {
        allow_params({"key", "value"});
        key_ = param_text("key", "OVERVOLT");
        value_ = param("value", 260.0);
    }

protected:
    void fire(AttackEnv& env) override {
        ApiClient anonymous(env.fabric, env.client.node());
        outcome_ = classify(anonymous.post("/setparam", {{"key", key_}, {"value", fmt::format("{}", value_)}}));
    }

    void evaluate(const RunRecord&, const DefenseProfile&, AttackResult& r) const override {
        r.success = outcome_.accepted;
        r.evidence = {{"endpoint", "/setparam"},
                      {"key", key_},
                      {"value", value_},
                      {"credentials", false},
                      {"status", outcome_.status}};
        if (!r.success) r.denied_reason = outcome_.reason.value_or("refused");
    }

private:
    std::string key_;
    double value_ = 260.0;
    CallOutcome outcome_;
};

// AT7
class LinkDisruption : public AttackActor {
public:
    LinkDisruption(ScheduledAttack s, double end) : AttackActor(std::move(s), end) {
        allow_params({});
        duration_ = param("duration_s", 30.0);
        window_end_ = std::min(end, spec_.t_start + duration_);
    }

    void act(AttackEnv& env) override {
        if (fired_) return;
        fired_ = true;
        if (duration_ <= 0) return;
        severed_ = env.fabric.deauth(Fabric::kDeviceNode, duration_);
    }

protected:
    void evaluate(const RunRecord& run, const DefenseProfile&, AttackResult& r) const override {
        const int gap = run.availability.zeros(spec_.t_start, spec_.t_start + duration_);
        r.evidence = {{"duration_s", duration_},
                      {"link_severed", severed_},
                      {"unavailable_samples", gap},
                      {"availability_ratio", run.availability.ratio(spec_.t_start, spec_.t_start + duration_)}};
        r.success = severed_ && gap > 0;
        if (r.success) return;
        if (duration_ <= 0) {
            r.denied_reason = "no_op";
        } else if (!severed_) {
            r.denied_reason = "deauth_ignored";
        } else {
            r.denied_reason = "no_effect";
        }
    }

private:
    double duration_ = 30.0;
    bool fired_ = false;
    bool severed_ = false;
};

/// Tracks outcomes of repeated calls for the loop attacks.
struct CallTally {
    int sent = 0;
    int accepted = 0;
    int dropped = 0;  // device or link did not answer
    std::optional<std::string> last_refusal;

    void add(const CallOutcome& o) {
        ++sent;
        if (o.accepted) {
            ++accepted;
        } else if (o.status == 0) {
            ++dropped;
        } else {
            last_refusal = o.reason;
        }
    }

    [[nodiscard]] json to_json() const {
        return {{"sent", sent}, {"accepted", accepted}, {"dropped", dropped}};
    }
};

// AT8
class OffLoop : public AttackActor {
public:
    OffLoop(ScheduledAttack s, double end) : AttackActor(std::move(s), end) { allow_params({}); }

    void act(AttackEnv& env) override {
        if (!env.on_second()) return;
        ++polls_;
        auto params = env.client.parameters();
        if (!params || params->value("MOTOR", 0) != 1) return;
        CallOutcome o = classify(env.client.post("/off"));
        if (o.accepted && !first_off_) first_off_ = env.now;
        tally_.add(o);
    }

protected:
    void evaluate(const RunRecord& run, const DefenseProfile&, AttackResult& r) const override {
        const auto window = rows_in(run, spec_.t_start, window_end_);
        r.evidence = {{"polls", polls_},
                      {"off_requests", tally_.to_json()},
                      {"motor_duty_cycle", motor_duty(window)},
                      {"availability_ratio", run.availability.ratio(spec_.t_start, window_end_)}};
        if (first_off_) {
            r.evidence["first_off_at"] = *first_off_;
            r.evidence["motor_duty_after_first_off"] = motor_duty(rows_in(run, *first_off_ + 0.1, window_end_));
        }
        r.success = tally_.accepted > 0;
        if (r.success) return;
        if (tally_.last_refusal) {
            r.denied_reason = tally_.last_refusal;
        } else if (tally_.sent == 0) {
            r.denied_reason = "no_opportunity";
        } else {
            r.denied_reason = "device_unavailable";
        }
    }

private:
    int polls_ = 0;
    CallTally tally_;
    std::optional<double> first_off_;
};

/// Fires every `period_s` from t_start.
class Periodic : public AttackActor {
public:
    Periodic(ScheduledAttack s, double end, double default_period) : AttackActor(std::move(s), end) {
        period_ = param("period_s", default_period);
        if (period_ <= 0) throw SchemaError(spec_.id + ": period_s must be positive");
        next_ = spec_.t_start;
    }

    void act(AttackEnv& env) override {
        if (env.now + kEps < next_) return;
        next_ += period_;
        fire(env);
    }

protected:
    virtual void fire(AttackEnv& env) = 0;
    double period_ = 1.0;
    double next_ = 0.0;
};

// AT9
class RebootLoop : public Periodic {
public:
    RebootLoop(ScheduledAttack s, double end) : Periodic(std::move(s), end, 10.0) { allow_params({"period_s"}); }

protected:
    void fire(AttackEnv& env) override { tally_.add(classify(env.client.post("/reset"))); }

    void evaluate(const RunRecord& run, const DefenseProfile&, AttackResult& r) const override {
        r.evidence = {{"period_s", period_},
                      {"resets", tally_.to_json()},
                      {"availability_ratio", run.availability.ratio(spec_.t_start, window_end_)},
                      {"unavailable_samples", run.availability.zeros(spec_.t_start, window_end_)}};
        r.success = tally_.accepted > 0;
        if (!r.success) r.denied_reason = tally_.last_refusal.value_or("device_unavailable");
    }

private:
    CallTally tally_;
};

// AT10
class InfeasibleSetpoints : public OneShot {
public:
    InfeasibleSetpoints(ScheduledAttack s, double end) : OneShot(std::move(s), end) {
        allow_params({"low", "high"});
        low_ = param("low", 200.0);
        high_ = param("high", 210.0);
    }

protected:
    void fire(AttackEnv& env) override {
        outcome_ = classify(env.client.post(
            "/setpressurerange", {{"low", fmt::format("{}", low_)}, {"high", fmt::format("{}", high_)}}));
        if (auto params = env.client.parameters()) stored_low_ = params->value("TARGETLOW", 0.0);
    }

    void evaluate(const RunRecord& run, const DefenseProfile&, AttackResult& r) const override {
        const auto after = rows_in(run, spec_.t_start + 0.1, run.end_time);
        int missorted_before = 0;
        int missorted_end = 0;
        for (const auto& row : run.trace) {
            if (row.t <= spec_.t_start + kEps) missorted_before = row.missorted;
            missorted_end = row.missorted;
        }
        r.evidence = {{"low", low_},
                      {"high", high_},
                      {"status", outcome_.status},
                      {"motor_duty_after", motor_duty(after)},
                      {"missorted_after", missorted_end - missorted_before}};
        if (stored_low_) r.evidence["stored_targetlow"] = *stored_low_;
        r.success = outcome_.accepted && stored_low_ && std::abs(*stored_low_ - low_) < kEps;
        if (!r.success) r.denied_reason = outcome_.reason.value_or("not_stored");
    }

private:
    double low_ = 200.0;
    double high_ = 210.0;
    CallOutcome outcome_;
    std::optional<double> stored_low_;
};

// AT11
class VoltageTrip : public OneShot {
public:
    VoltageTrip(ScheduledAttack s, double end) : OneShot(std::move(s), end) {
        allow_params({"key", "value"});
        key_ = param_text("key", "OVERVOLT");
        if (key_ != "OVERVOLT" && key_ != "UNDERVOLT") throw SchemaError(spec_.id + ": key must be OVERVOLT or UNDERVOLT");
        value_ = param("value", key_ == "OVERVOLT" ? 200.0 : 240.0);
    }

protected:
    void fire(AttackEnv& env) override {
        outcome_ = classify(env.client.post("/setparam", {{"key", key_}, {"value", fmt::format("{}", value_)}}));
    }

    void evaluate(const RunRecord& run, const DefenseProfile&, AttackResult& r) const override {
        const auto after = rows_in(run, spec_.t_start, run.end_time);
        const bool tripped = std::any_of(after.begin(), after.end(), [](const TraceRow* row) { return row->tripped; });
        r.evidence = {{"key", key_},
                      {"value", value_},
                      {"status", outcome_.status},
                      {"protective_shutdown", tripped},
                      {"motor_duty_after", motor_duty(after)}};
        r.success = outcome_.accepted && tripped;
        if (!r.success) r.denied_reason = outcome_.reason.value_or("no_trip");
    }

private:
    std::string key_;
    double value_ = 200.0;
    CallOutcome outcome_;
};

// AT12 and AT13
class Calibration : public Periodic {
public:
    Calibration(ScheduledAttack s, double end, bool zero_point) : Periodic(std::move(s), end, 1.0), zero_(zero_point) {
        const char* key = zero_ ? "offset" : "scale";
        allow_params({key, "values", "period_s"});
        if (spec_.params.contains("values")) {
            const auto& v = spec_.params.at("values");
            if (!v.is_array() || v.empty()) throw SchemaError(spec_.id + ": values must be a non-empty array");
            for (const auto& x : v) {
                if (!x.is_number()) throw SchemaError(spec_.id + ": values must be numbers");
                values_.push_back(x.get<double>());
            }
            if (spec_.params.contains(key)) throw SchemaError(spec_.id + ": give either values or " + key);
        } else {
            values_.push_back(param(key, zero_ ? 943.0 : 2.0));
        }
    }

protected:
    void fire(AttackEnv& env) override {
        if (values_.size() == 1 && tally_.accepted > 0) return;
        const double v = values_[index_++ % values_.size()];
        const std::string path = zero_ ? "/calibratezeropoint" : "/calibrate";
        tally_.add(classify(env.client.post(path, {{zero_ ? "offset" : "scale", fmt::format("{}", v)}})));
    }

    void evaluate(const RunRecord& run, const DefenseProfile&, AttackResult& r) const override {
        const auto window = rows_in(run, spec_.t_start, window_end_);
        double max_gap = 0.0;
        double rep_min = 0.0;
        double rep_max = 0.0;
        double sum = 0.0;
        double sq = 0.0;
        bool first = true;
        for (const auto* row : window) {
            if (!row->online) continue;
            max_gap = std::max(max_gap, std::abs(row->reported_psi - round1(row->true_psi)));
            rep_min = first ? row->reported_psi : std::min(rep_min, row->reported_psi);
            rep_max = first ? row->reported_psi : std::max(rep_max, row->reported_psi);
            first = false;
        }
        for (const auto* row : window) sum += row->true_psi;
        const double mean = window.empty() ? 0.0 : sum / static_cast<double>(window.size());
        for (const auto* row : window) sq += (row->true_psi - mean) * (row->true_psi - mean);
        const double sd = window.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(window.size()));
        const std::int64_t per_second = window.size() > 1
                                            ? std::max<std::int64_t>(1, std::llround(1.0 / (window[1]->t - window[0]->t)))
                                            : 1;
        r.evidence = {{zero_ ? "offsets" : "scales", values_},
                      {"calls", tally_.to_json()},
                      {"max_reported_minus_true", max_gap},
                      {"reported_min", rep_min},
                      {"reported_max", rep_max},
                      {"true_stddev", sd},
                      {"series", pressure_series(run, spec_.t_start, window_end_, per_second)}};
        r.success = tally_.accepted > 0 && max_gap > 0.05;
        if (!r.success) r.denied_reason = tally_.last_refusal.value_or(tally_.accepted ? "no_divergence" : "device_unavailable");
    }

private:
    bool zero_;
    std::vector<double> values_;
    std::size_t index_ = 0;
    CallTally tally_;
};

// AT14
class TelemetryInjection : public AttackActor {
public:
    TelemetryInjection(ScheduledAttack s, double end) : AttackActor(std::move(s), end) {
        allow_params({"psi", "period_s"});
        psi_ = param("psi", 120.0);
        period_ = param("period_s", 1.0);
        if (period_ <= 0) throw SchemaError(spec_.id + ": period_s must be positive");
        next_ = spec_.t_start;
    }

    void act(AttackEnv&) override {}

    void after_telemetry(AttackEnv& env) override {
        if (!due(env.now) || env.now + kEps < next_) return;
        next_ += period_;
        TelemetryMessage msg;
        msg.topic = pressure_topic(env.serial);
        msg.sim_time = env.now;
        msg.psi = psi_;
        publisher_ = "node:" + env.client.node();
        msg.publisher_id = publisher_;
        switch (env.fabric.bus().publish(msg)) {
            case PublishStatus::delivered: ++delivered_; break;
            case PublishStatus::rejected: ++rejected_; break;
            case PublishStatus::unknown_topic: ++unknown_; break;
        }
    }

protected:
    void evaluate(const RunRecord& run, const DefenseProfile&, AttackResult& r) const override {
        int in_log = 0;
        for (const auto& m : run.fabric.bus().delivered_log()) {
            if (m.publisher_id == publisher_) ++in_log;
        }
        r.evidence = {{"psi", psi_}, {"delivered", delivered_}, {"rejected", rejected_}, {"forged_in_broker_log", in_log}};
        r.success = delivered_ > 0 && in_log > 0;
        if (!r.success) r.denied_reason = rejected_ > 0 ? "publish_rejected" : "nothing_published";
    }

private:
    double psi_ = 120.0;
    double period_ = 1.0;
    double next_ = 0.0;
    std::string publisher_;
    int delivered_ = 0;
    int rejected_ = 0;
    int unknown_ = 0;
};

// TB4 probe: unsigned image through the update endpoint.
class OtaUnsigned : public OneShot {
public:
    OtaUnsigned(ScheduledAttack s, double end) : OneShot(std::move(s), end) {
        allow_params({"version"});
        version_ = param_text("version", "attacker-0001");
    }

protected:
    void fire(AttackEnv& env) override {
        outcome_ = classify(env.client.post("/update", {}, {{"x-firmware-version", version_}}, "unsigned image"));
    }

    void evaluate(const RunRecord& run, const DefenseProfile&, AttackResult& r) const override {
        const std::string running = run.device.firmware_version();
        r.evidence = {{"version", version_}, {"status", outcome_.status}, {"running_firmware", running}};
        r.success = outcome_.accepted && running == version_;
        if (!r.success) r.denied_reason = outcome_.reason.value_or("not_installed");
    }

private:
    std::string version_;
    CallOutcome outcome_;
};

// TB4 probe: replace the verification key, then ship a self-signed image.
class OtaKeySwap : public OneShot {
public:
    OtaKeySwap(ScheduledAttack s, double end) : OneShot(std::move(s), end) {
        allow_params({"version"});
        version_ = param_text("version", "attacker-0002");
    }

protected:
    void fire(AttackEnv& env) override {
        const KeyPair attacker = keypair_from_seed("sl1-attacker-key");
        swap_ = classify(env.client.post("/setupdatekey", {{"key", to_hex(attacker.public_key)}}));
        const std::string payload = "attacker image";
        const Bytes sig = sign_detached(as_bytes(payload), attacker.secret_key);
        update_ = classify(env.client.post("/update", {}, {{"x-firmware-version", version_}, {"x-signature", to_hex(sig)}},
                                           payload));
        attacker_key_ = to_hex(attacker.public_key);
    }

    void evaluate(const RunRecord& run, const DefenseProfile&, AttackResult& r) const override {
        const std::string device_key = to_hex(run.device.verification_key());
        const std::string running = run.device.firmware_version();
        r.evidence = {{"key_swap_status", swap_.status},
                      {"update_status", update_.status},
                      {"device_key_is_attacker_key", device_key == attacker_key_},
                      {"running_firmware", running}};
        r.success = swap_.accepted && update_.accepted && device_key == attacker_key_ && running == version_;
        if (r.success) return;
        if (!swap_.accepted) {
            r.denied_reason = swap_.reason.value_or("refused");
        } else {
            r.denied_reason = update_.reason.value_or("not_installed");
        }
    }

private:
    std::string version_;
    std::string attacker_key_;
    CallOutcome swap_;
    CallOutcome update_;
};

}  // namespace

std::unique_ptr<AttackActor> make_attack(const ScheduledAttack& spec, double run_end) {
    const std::string& k = spec.kind;
    if (k == "ap_join") return std::make_unique<ApJoin>(spec, run_end);
    if (k == "lan_discovery") return std::make_unique<LanDiscovery>(spec, run_end);
    if (k == "sniff") return std::make_unique<Sniff>(spec, run_end);
    if (k == "brute_force") return std::make_unique<BruteForce>(spec, run_end);
    if (k == "shared_credentials") return std::make_unique<SharedCredentials>(spec, run_end);
    if (k == "unauth_api") return std::make_unique<UnauthApi>(spec, run_end);
    if (k == "link_disruption") return std::make_unique<LinkDisruption>(spec, run_end);
    if (k == "off_loop") return std::make_unique<OffLoop>(spec, run_end);
    if (k == "reboot_loop") return std::make_unique<RebootLoop>(spec, run_end);
    if (k == "infeasible_setpoints") return std::make_unique<InfeasibleSetpoints>(spec, run_end);
    if (k == "voltage_trip") return std::make_unique<VoltageTrip>(spec, run_end);
    if (k == "scale") return std::make_unique<Calibration>(spec, run_end, false);
    if (k == "zero_offset") return std::make_unique<Calibration>(spec, run_end, true);
    if (k == "injection") return std::make_unique<TelemetryInjection>(spec, run_end);
    if (k == "ota_unsigned") return std::make_unique<OtaUnsigned>(spec, run_end);
    if (k == "ota_key_swap") return std::make_unique<OtaKeySwap>(spec, run_end);
    throw SchemaError(fmt::format("{}: no actor for kind '{}'", spec.id, k));
}

}  // namespace airrange
