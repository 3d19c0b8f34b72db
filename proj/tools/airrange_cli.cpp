#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "airrange/live.hpp"
#include "airrange/range.hpp"
#include "airrange/threat_model.hpp"
#include "airrange/traceability.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

std::string join(const std::vector<std::string>& v, const char* sep = ", ") {
    std::string out;
    for (const auto& s : v) {
        if (!out.empty()) out += sep;
        out += s;
    }
    return out;
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir, bool quiet) {
    using namespace airrange;
    try {
        const Scenario scenario = load_scenario(scenario_path);
        const RunResult result = execute(scenario);
        result.write(out_dir);
        if (!quiet) {
            fmt::print("scenario {}: {} s, availability {:.3f}, false beliefs {}\n", scenario.name,
                       scenario.duration_s, result.availability.ratio(), result.divergence.false_beliefs);
            for (const auto& a : result.attacks) {
                fmt::print("  {:<7} {:<22} {}{}\n", a.id, a.kind, a.success ? "success" : "failed",
                           a.success ? "" : fmt::format(" ({}{})", a.denied_reason.value_or("-"),
                                                        a.blocked_by ? ", blocked by " + *a.blocked_by : ""));
            }
            fmt::print("wrote {}\n", out_dir);
        }
        return 0;
    } catch (const SchemaError& e) {
        fmt::print(stderr, "schema_error: {}\n", e.what());
        return 2;
    } catch (const IoError& e) {
        fmt::print(stderr, "io_error: {}\n", e.what());
        return 3;
    }
}

int cmd_serve(airrange::LiveOptions options, const std::string& profile) {
    using namespace airrange;
    try {
        options.profile = DefenseProfile::parse(profile);
    } catch (const std::invalid_argument& e) {
        fmt::print(stderr, "bad --profile: {}\n", e.what());
        return 2;
    }
    LiveRange live(options);
    try {
        live.start();
    } catch (const BindError& e) {
        fmt::print(stderr, "bind_error: {}\n", e.what());
        return 4;
    }
    std::signal(SIGTERM, on_signal);
    std::signal(SIGINT, on_signal);
    fmt::print("serving {} on http://{}:{} (accel {}x)\n", live.device().serial(), options.host, live.port(),
               options.accel);
    if (live.mgmt_port()) fmt::print("maintenance listener on http://127.0.0.1:{}\n", *live.mgmt_port());
    for (const auto& a : live.device().credentials().accounts()) {
        fmt::print("  account {:<13} {}{}\n", a.name, a.secret, a.enabled ? "" : " (disabled)");
    }
    std::fflush(stdout);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    live.stop();
    fmt::print("stopped at t={:.1f} s\n", live.sim_time());
    return 0;
}

int cmd_list(const std::string& what, const std::string& format) {
    using namespace airrange;
    const ThreatModel& model = ThreatModel::shipped();
    const bool as_json = format == "json";
    nlohmann::json out = nlohmann::json::array();
    if (what == "attacks") {
        for (const auto& a : model.attacks()) {
            if (a.probe) continue;
            std::vector<std::string> objectives;
            for (auto o : a.objectives) objectives.push_back(to_string(o));
            if (as_json) {
                out.push_back({{"id", a.id}, {"name", a.name}, {"kind", a.kind}, {"objectives", objectives},
                               {"vectors", a.vectors}});
            } else {
                fmt::print("{:<5} {:<38} {:<21} {:<7} {}\n", a.id, a.name, a.kind, join(objectives, ","),
                           join(a.vectors));
            }
        }
    } else if (what == "defenses") {
        for (const auto& d : model.defenses()) {
            if (as_json) {
                out.push_back({{"id", d.id}, {"name", d.name}});
            } else {
                fmt::print("{:<4} {}\n", d.id, d.name);
            }
        }
    } else if (what == "vectors") {
        for (const auto& v : model.vectors()) {
            if (as_json) {
                out.push_back(vector_to_json(v));
            } else {
                fmt::print("{:<15} {}\n", v.key(), v.description);
            }
        }
    } else if (what == "matrix") {
        std::cout << render_matrix(model.matrix(), as_json ? MatrixFormat::json : MatrixFormat::markdown);
        if (as_json) std::cout << "\n";
        return 0;
    } else if (what == "probes") {
        for (const auto& a : model.attacks()) {
            if (!a.probe) continue;
            if (as_json) {
                out.push_back({{"id", a.id}, {"name", a.name}, {"kind", a.kind}, {"vectors", a.vectors}});
            } else {
                fmt::print("{:<7} {:<34} {}\n", a.id, a.name, join(a.vectors));
            }
        }
    }
    if (as_json) std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_validate() {
    const auto violations = airrange::ThreatModel::shipped().validate_coverage();
    for (const auto& v : violations) fmt::print("({}) {}\n", v.rule, v.message);
    fmt::print("{} violation(s)\n", violations.size());
    return violations.empty() ? 0 : 1;
}

int cmd_sweep(const std::string& out_path) {
    using namespace airrange;
    const SweepReport report = sweep(ThreatModel::shipped());
    for (const auto& v : report.verdicts) {
        fmt::print("{:<7} {:<4} {:<8} {}  {}\n", v.pairing.attack, v.pairing.defense,
                   v.pairing.effect == PairEffect::blocks ? "blocks" : "detects", v.holds ? "ok  " : "FAIL",
                   v.explanation);
    }
    fmt::print("{} pairings, {} violation(s)\n", report.verdicts.size(), report.violations());
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) {
            fmt::print(stderr, "io_error: cannot write {}\n", out_path);
            return 3;
        }
        out << report.to_json().dump(2) << "\n";
    }
    return report.violations() == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Air-compressor cyber range"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = "out";
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run a scenario file and write report, traces and logs");
    run->add_option("--scenario", scenario_path, "Scenario JSON")->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_flag("--quiet", quiet, "Only report errors");

    airrange::LiveOptions live;
    std::string profile = "vulnerable";
    int mgmt_port = -1;
    auto* serve = app.add_subcommand("serve", "Serve the live controller on a loopback listener");
    serve->add_option("--port", live.port, "HTTP port (0 picks one)");
    serve->add_option("--host", live.host, "Listen address");
    serve->add_option("--mgmt-port", mgmt_port, "Maintenance listener port");
    serve->add_option("--accel", live.accel, "Simulated seconds per wall second")->check(CLI::PositiveNumber);
    serve->add_option("--profile", profile, "vulnerable, hardened, or a list like d8,d10");
    serve->add_flag("--maintenance", live.maintenance_mode, "Enable the maintenance listener's handlers");
    serve->add_option("--seed", live.seed, "Seed");
    serve->add_option("--initial-psi", live.initial_psi, "Starting tank pressure");

    std::string what;
    std::string format = "text";
    auto* list = app.add_subcommand("list", "Print a registry");
    list->add_option("what", what, "attacks, defenses, vectors, probes or matrix")
        ->required()
        ->check(CLI::IsMember({"attacks", "defenses", "vectors", "probes", "matrix"}));
    list->add_option("--format", format, "text (markdown for matrix) or json")
        ->check(CLI::IsMember({"text", "markdown", "json"}));

    auto* validate = app.add_subcommand("validate", "Check threat-model coverage");

    std::string sweep_out;
    auto* sweep = app.add_subcommand("sweep", "Check every attack/defense pairing of the matrix");
    sweep->add_option("--out", sweep_out, "Write the verdicts as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(scenario_path, out_dir, quiet);
        if (*serve) {
            if (mgmt_port >= 0) live.mgmt_port = mgmt_port;
            return cmd_serve(live, profile);
        }
        if (*list) return cmd_list(what, format);
        if (*validate) return cmd_validate();
        if (*sweep) return cmd_sweep(sweep_out);
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
