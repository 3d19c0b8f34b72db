#include "airrange/range.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

namespace airrange {

using nlohmann::json;

namespace {

constexpr std::uint64_t kOwnerSeedSalt = 0x6f776e6572ULL;

std::string csv_number(double v) {
    std::string s = fmt::format("{:.4f}", v);
    if (s == "-0.0000") s = "0.0000";
    return s;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

Range::Range(Scenario scenario) : Range(std::move(scenario), Options{}) {}

Range::Range(Scenario scenario, Options options) : scenario_(std::move(scenario)), options_(options) {
    const Scenario& s = scenario_;
    DeviceOptions dev;
    dev.plant = s.plant;
    dev.initial.true_psi = s.initial_psi;
    dev.initial.supply_voltage = s.plant.nominal_voltage;
    dev.config = s.device;
    dev.profile = s.profile;
    dev.seed = s.seed;
    dev.maintenance_mode = s.maintenance_mode;
    device_ = std::make_unique<Device>(dev);

    FabricOptions fab;
    fab.mode = s.wifi_mode;
    fab.protected_mgmt = s.profile.enabled(Defense::mgmt_frame_protection);
    fab.join_secret_required = s.profile.enabled(Defense::wpa3_join_secret);
    fab.transport_secure = s.profile.enabled(Defense::transport_security);
    fab.seed = s.seed;
    fabric_ = std::make_unique<Fabric>(fab);
    fabric_->attach_device(*device_);
    fabric_->bus().set_authentication(s.profile.enabled(Defense::api_authentication));
    twin_subscription_ = fabric_->bus().subscribe(pressure_topic(device_->serial()));

    fabric_->attach_client(kOperatorNode);
    fabric_->attach_client(kMonitorNode);
    fabric_->attach_client(kTwinNode);
    // In AP mode the attacker first has to get onto the controller's network.
    fabric_->attach_client(kAttackerNode, s.wifi_mode == LinkMode::station);
    operator_ = std::make_unique<ApiClient>(*fabric_, kOperatorNode);
    monitor_ = std::make_unique<ApiClient>(*fabric_, kMonitorNode);
    twin_client_ = std::make_unique<ApiClient>(*fabric_, kTwinNode);
    attacker_ = std::make_unique<ApiClient>(*fabric_, kAttackerNode);

    if (s.commissioned) {
        secrets_ = device_->commission(s.seed ^ kOwnerSeedSalt);
    } else {
        for (const auto& a : device_->credentials().accounts()) secrets_[a.name] = a.secret;
    }

    const double end = s.duration_s;
    for (const auto& a : s.attacks) actors_.push_back(make_attack(a, end));

    workcell_.required_psi = s.workcell.required_psi;
    twin_ = make_twin(s.twin_mode, s.workcell.required_psi);
    if (options_.record_trace) trace_.reserve(static_cast<std::size_t>(s.total_ticks()));
}

Range::~Range() = default;

double Range::now() const { return static_cast<double>(tick_) / static_cast<double>(scenario_.ticks_per_second()); }

void Range::apply_event(const ScenarioEvent& e) {
    const json& p = e.params;
    const bool management = p.value("channel", "network") == "management";
    auto post = [&](const std::string& path, const FormFields& form) -> Delivery {
        if (!management) return operator_->post(path, form);
        HttpRequest r = HttpRequest::post(path, form);
        return fabric_->deliver_management(std::move(r));
    };
    auto num = [&](const char* key, double fallback) {
        const auto& v = p.contains(key) ? p.at(key) : json(fallback);
        if (!v.is_number()) throw SchemaError(fmt::format("event {} at t={}: {} must be a number", e.action, e.t, key));
        return fmt::format("{}", v.get<double>());
    };

    json log = {{"t", now()}, {"action", e.action}};
    std::optional<Delivery> d;
    if (e.action == "login") {
        const std::string user = p.value("user", "operator");
        auto it = secrets_.find(user);
        const std::string secret = it == secrets_.end() ? p.value("pass", "") : it->second;
        d = operator_->post("/setpass", {{"user", user}, {"pass", secret}});
        log["user"] = user;
        if (d->delivered() && d->response->status == 200) {
            auto body = d->response->json();
            if (body.value("ACTION", "") == "must_change_credential") {
                const std::string fresh =
                    generate_secret(scenario_.seed ^ kOwnerSeedSalt, "rotate-" + user, true);
                auto changed = operator_->post("/setcredential", {{"user", user}, {"pass", secret}, {"newpass", fresh}});
                if (classify(changed).accepted) secrets_[user] = fresh;
                log["rotated"] = classify(changed).accepted;
            }
        }
    } else if (e.action == "logout") {
        operator_->forget_session();
    } else if (e.action == "on") {
        d = post("/on", {});
    } else if (e.action == "off") {
        d = post("/off", {});
    } else if (e.action == "set_range") {
        d = post("/setpressurerange", {{"low", num("low", 90)}, {"high", num("high", 120)}});
    } else if (e.action == "set_target") {
        d = post("/setparam", {{"key", "TARGET"}, {"value", num("value", 120)}});
    } else if (e.action == "set_unit") {
        d = post("/setparam", {{"key", "UNIT"}, {"value", p.value("unit", "PSI")}});
    } else if (e.action == "drain") {
        device_->drain_tank();
    } else if (e.action == "set_voltage") {
        device_->set_supply_voltage(std::stod(num("volts", scenario_.plant.nominal_voltage)));
    }
    if (d) {
        CallOutcome o = classify(*d);
        log["accepted"] = o.accepted;
        if (o.reason) log["reason"] = *o.reason;
    }
    operator_log_.push_back(std::move(log));
}

void Range::second_boundary(const std::vector<PlcCommand>& commands) {
    const double t = now();
    const std::int64_t now_ms = tick_ * 1000 / scenario_.ticks_per_second();

    // The controller publishes its reading; forged messages follow.
    if (device_->online() && fabric_->link(Fabric::kDeviceNode).up) {
        TelemetryMessage msg;
        msg.topic = pressure_topic(device_->serial());
        msg.sim_time = t;
        msg.psi = device_->reported_psi();
        msg.publisher_id = device_->serial();
        fabric_->bus().publish(msg);
    }
    AttackEnv env{*fabric_, *attacker_, tick_, scenario_.ticks_per_second(), t, device_->serial()};
    for (auto& actor : actors_) actor->after_telemetry(env);

    PollOutcome poll = PollOutcome::none();
    auto messages = fabric_->bus().drain(twin_subscription_);
    if (scenario_.twin_mode == TwinMode::telemetry_correlated) {
        if (scenario_.twin_source == TwinSource::poll) {
            auto params = twin_client_->parameters();
            poll = params ? PollOutcome::from_parameters(*params) : PollOutcome::unavailable();
        } else {
            poll = messages.empty() ? PollOutcome::unavailable() : PollOutcome::reading(messages.back().psi);
        }
    }
    twin_ = update_twin(std::move(twin_), workcell_.actuator_counters, commands, poll, now_ms);

    last_available_ = monitor_->parameters() ? 1 : 0;
    availability_.samples.push_back({t, last_available_});
}

void Range::step() {
    const std::int64_t tps = scenario_.ticks_per_second();
    const std::int64_t now_ms = tick_ * 1000 / tps;
    const double t = now();
    fabric_->set_time_ms(now_ms);

    for (const auto& e : scenario_.events) {
        if (std::llround(e.t * static_cast<double>(tps)) == tick_) apply_event(e);
    }
    AttackEnv env{*fabric_, *attacker_, tick_, tps, t, device_->serial()};
    for (auto& actor : actors_) {
        if (actor->due(t)) actor->act(env);
    }

    int actuations = 0;
    if (scenario_.workcell.enabled) {
        WorkcellStep ws = step_workcell(workcell_, scenario_.workcell, now_ms, device_->plant().true_psi);
        workcell_ = std::move(ws.state);
        actuations = ws.actuations;
        for (const auto& ev : ws.events) unpolled_commands_.push_back({ev.package_id, ev.actuator, ev.time_ms});
    }

    if (tick_ % tps == 0) {
        second_boundary(unpolled_commands_);
        unpolled_commands_.clear();
    }

    if (options_.record_trace) {
        const PlantState plant = device_->plant();
        const WorkcellTotals totals = airrange::totals(workcell_);
        TraceRow row;
        row.t = t;
        row.true_psi = plant.true_psi;
        row.reported_psi = device_->reported_psi();
        row.motor = plant.motor_on;
        row.available = last_available_;
        row.counters = workcell_.actuator_counters;
        row.sorted_ok = totals.sorted_ok;
        row.twin_believed_ok = static_cast<int>(
            std::count_if(twin_.believed.begin(), twin_.believed.end(),
                          [](const auto& kv) { return kv.second == Belief::sorted_ok; }));
        row.fault_flag = twin_.fault_flag;
        row.online = device_->online();
        row.tripped = device_->tripped();
        row.cut_in = device_->config().cut_in_psi;
        row.missorted = totals.missorted;
        trace_.push_back(row);
    }

    device_->step(actuations);
    ++tick_;
}

RunResult Range::finish() {
    RunResult r;
    r.scenario = scenario_;
    r.trace = std::move(trace_);
    r.availability = std::move(availability_);
    r.workcell = workcell_;
    r.twin = twin_;
    r.divergence = divergence_report(workcell_, twin_);
    r.audit = device_->audit_log();
    r.captures = fabric_->captures();
    r.link_events = fabric_->link_events();
    r.operator_log = std::move(operator_log_);
    r.telemetry_messages = fabric_->bus().delivered_log().size();
    r.reboots = device_->reboot_count();

    const PlantState plant = device_->plant();
    const DeviceConfig cfg = device_->config();
    const SensorCalibration cal = device_->calibration();
    r.final_state = {{"true_psi", plant.true_psi},
                     {"reported_psi", device_->reported_psi()},
                     {"motor_on", plant.motor_on},
                     {"run_time_total", plant.run_time_total},
                     {"online", device_->online()},
                     {"cut_in_psi", cfg.cut_in_psi},
                     {"cut_out_psi", cfg.cut_out_psi},
                     {"under_volt", cfg.under_volt},
                     {"over_volt", cfg.over_volt},
                     {"unit", to_string(cfg.unit)},
                     {"scale", cal.scale},
                     {"zero_offset_psi", cal.zero_offset_psi},
                     {"firmware", device_->firmware_version()},
                     {"device_address", fabric_->device_address()}};

    RunRecord record{r.trace,   r.availability,
                     r.audit,   *device_,
                     *fabric_,  fabric_->address_of(kAttackerNode),
                     scenario_.duration_s};
    for (const auto& actor : actors_) r.attacks.push_back(actor->finish(record, scenario_.profile));

    const ThreatModel& model = ThreatModel::shipped();
    std::map<std::string, bool> outcomes;
    for (const auto& a : r.attacks) outcomes[a.id] = outcomes[a.id] || a.success;
    for (const auto& tree : model.trees()) r.objectives[tree.objective] = evaluate_tree(tree, outcomes, model);
    r.matrix_eval = evaluate_matrix(model, scenario_.profile, r.attacks);
    return r;
}

RunResult execute(const Scenario& scenario) {
    Range range(scenario);
    while (!range.finished()) range.step();
    return range.finish();
}

json evaluate_matrix(const ThreatModel& model, const DefenseProfile& profile, const std::vector<AttackResult>& results) {
    auto find = [&](const std::string& id) -> const AttackResult* {
        for (const auto& r : results) {
            if (r.id == id) return &r;
        }
        return nullptr;
    };
    json rows = json::array();
    for (const auto& row : model.matrix()) {
        json attacks = json::array();
        auto ids = row.attacks;
        ids.insert(ids.end(), row.probes.begin(), row.probes.end());
        for (const auto& id : ids) {
            const AttackResult* r = find(id);
            json a = {{"id", id}, {"ran", r != nullptr}};
            if (r) {
                a["success"] = r->success;
                a["blocked_by"] = r->blocked_by ? json(*r->blocked_by) : json(nullptr);
                a["detected"] = r->detected;
            }
            attacks.push_back(a);
        }
        json defenses = json::array();
        for (const auto& d : row.defenses) {
            auto parsed = parse_defense_id(d);
            defenses.push_back({{"id", d}, {"enabled", parsed && profile.enabled(*parsed)}});
        }
        json pairings = json::array();
        for (const auto& p : row.pairings) {
            const AttackResult* r = find(p.attack);
            auto parsed = parse_defense_id(p.defense);
            const bool enabled = parsed && profile.enabled(*parsed);
            json entry = {{"attack", p.attack},
                          {"defense", p.defense},
                          {"effect", p.effect == PairEffect::blocks ? "blocks" : "detects"},
                          {"defense_enabled", enabled},
                          {"attack_ran", r != nullptr}};
            // A single run can only refute a pairing whose defense is on.
            if (r != nullptr && enabled) {
                entry["holds"] = p.effect == PairEffect::blocks ? !r->success : r->detected;
            } else {
                entry["holds"] = nullptr;
            }
            pairings.push_back(entry);
        }
        rows.push_back({{"tb", to_string(row.tb)},
                        {"title", row.title},
                        {"note", row.note},
                        {"attacks", attacks},
                        {"defenses", defenses},
                        {"pairings", pairings}});
    }
    return {{"schema_version", kReportSchemaVersion}, {"profile", profile.to_json()}, {"rows", rows}};
}

const AttackResult* RunResult::attack(std::string_view id) const {
    for (const auto& a : attacks) {
        if (a.id == id) return &a;
    }
    return nullptr;
}

double RunResult::motor_duty(double t0, double t1) const {
    int n = 0;
    int on = 0;
    for (const auto& row : trace) {
        if (row.t + 1e-9 >= t0 && row.t < t1 - 1e-9) {
            ++n;
            on += row.motor ? 1 : 0;
        }
    }
    return n == 0 ? 0.0 : static_cast<double>(on) / n;
}

json RunResult::report() const {
    const WorkcellTotals t = totals(workcell);
    std::uint64_t actuations = 0;
    for (auto c : workcell.actuator_counters) actuations += c;
    json twin_j = divergence.to_json();
    twin_j["mode"] = to_string(twin.mode);
    twin_j["fault_flag"] = twin.fault_flag;
    twin_j["stale"] = twin.stale;

    json attacks_j = json::array();
    for (const auto& a : attacks) attacks_j.push_back(a.to_json());
    json objectives_j = json::object();
    for (const auto& [o, eval] : objectives) {
        objectives_j[to_string(o)] = {{"satisfied", eval.satisfied}, {"leaves", eval.leaves}};
    }
    return {
        {"schema_version", kReportSchemaVersion},
        {"scenario", scenario.to_json()},
        {"summary",
         {{"duration_s", scenario.duration_s},
          {"ticks", trace.size()},
          {"availability_ratio", availability.ratio()},
          {"motor_duty_cycle", motor_duty(0.0, scenario.duration_s)},
          {"reboots", reboots},
          {"workcell",
           {{"packages", workcell.packages.size()},
            {"sorted_ok", t.sorted_ok},
            {"missorted", t.missorted},
            {"in_flight", t.in_flight},
            {"actuations", actuations}}},
          {"twin", twin_j},
          {"audit_events", audit.size()},
          {"captures", captures.size()},
          {"telemetry_messages", telemetry_messages}}},
        {"final_state", final_state},
        {"attacks", attacks_j},
        {"objectives", objectives_j},
        {"operator_log", operator_log},
        {"link_events", link_events},
    };
}

std::string RunResult::traces_csv() const {
    std::string out = "t,true_psi,reported_psi,motor,available,counters,sorted_ok,twin_believed_ok,fault_flag\n";
    out.reserve(trace.size() * 64);
    for (const auto& r : trace) {
        out += fmt::format("{:.1f},{},{},{},{},{}|{}|{},{},{},{}\n", r.t, csv_number(r.true_psi),
                           csv_number(r.reported_psi), r.motor ? 1 : 0, r.available, r.counters[0], r.counters[1],
                           r.counters[2], r.sorted_ok, r.twin_believed_ok, r.fault_flag ? 1 : 0);
    }
    return out;
}

std::string RunResult::audit_jsonl() const {
    std::string out;
    for (const auto& e : audit) out += e.to_json().dump() + "\n";
    return out;
}

std::string RunResult::captures_jsonl() const {
    std::string out;
    for (const auto& c : captures) out += c.to_json().dump() + "\n";
    return out;
}

void RunResult::write(const std::filesystem::path& out_dir) const {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    write_file(out_dir / "report.json", report().dump(2) + "\n");
    write_file(out_dir / "traces.csv", traces_csv());
    write_file(out_dir / "audit.jsonl", audit_jsonl());
    write_file(out_dir / "captures.jsonl", captures_jsonl());
    write_file(out_dir / "matrix-eval.json", matrix_eval.dump(2) + "\n");
}

}  // namespace airrange
