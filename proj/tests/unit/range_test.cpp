#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "airrange/range.hpp"
#include "support.hpp"

using namespace airrange;
using namespace airrange::testing;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Scenario busy_scenario(std::uint64_t seed) {
    return scenario({{"seed", seed},
                     {"duration_s", 40},
                     {"initial_psi", 92},
                     {"attacks",
                      {{{"id", "AT3"}, {"t_start", 0}},
                       {{"id", "AT8"}, {"t_start", 5}, {"params", {{"duration_s", 10}}}},
                       {{"id", "AT13"}, {"t_start", 20}, {"params", {{"offset", 30}}}}}},
                     {"events", {{{"t", 1}, {"action", "login"}, {"params", {{"user", "operator"}}}},
                                 {{"t", 16}, {"action", "on"}}}}});
}

}  // namespace

TEST(Range, NominalRunHasNoFalseBeliefs) {
    auto r = execute(load_scenario(std::string(AIRRANGE_SOURCE_DIR) + "/scenarios/nominal.json"));
    EXPECT_EQ(r.divergence.false_beliefs, 0);
    EXPECT_DOUBLE_EQ(r.availability.ratio(), 1.0);
    EXPECT_GT(r.workcell.packages.size(), 0u);
}

TEST(Range, TraceRowPerTickAndSamplePerSecond) {
    auto r = execute(scenario({{"duration_s", 12}}));
    EXPECT_EQ(r.trace.size(), 120u);
    EXPECT_EQ(r.availability.samples.size(), 12u);
    EXPECT_DOUBLE_EQ(r.trace[5].t, 0.5);
}

TEST(Range, TracesCsvColumns) {
    auto r = execute(scenario({{"duration_s", 2}}));
    auto csv = r.traces_csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "t,true_psi,reported_psi,motor,available,counters,sorted_ok,twin_believed_ok,fault_flag");
    std::istringstream lines(csv);
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) ++n;
    EXPECT_EQ(n, 21);
}

TEST(Range, ReportIsVersioned) {
    auto r = execute(scenario({{"duration_s", 2}}));
    auto rep = r.report();
    EXPECT_EQ(rep.at("schema_version"), "airrange.report/1");
    for (const char* k : {"scenario", "summary", "final_state", "attacks", "objectives"}) EXPECT_TRUE(rep.contains(k)) << k;
}

TEST(Range, SameSeedIsByteIdentical) {
    auto a = execute(busy_scenario(5));
    auto b = execute(busy_scenario(5));
    EXPECT_EQ(a.report().dump(2), b.report().dump(2));
    EXPECT_EQ(a.traces_csv(), b.traces_csv());
    EXPECT_EQ(a.audit_jsonl(), b.audit_jsonl());
    EXPECT_EQ(a.captures_jsonl(), b.captures_jsonl());
}

TEST(Range, WritesAllArtifacts) {
    auto dir = std::filesystem::temp_directory_path() / "airrange_range_write";
    std::filesystem::remove_all(dir);
    auto r = execute(busy_scenario(1));
    r.write(dir);
    for (const char* f : {"report.json", "traces.csv", "audit.jsonl", "captures.jsonl", "matrix-eval.json"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    EXPECT_EQ(slurp(dir / "traces.csv"), r.traces_csv());
    auto rep = json::parse(slurp(dir / "report.json"));
    EXPECT_EQ(rep.at("attacks").size(), 3u);
    auto matrix = json::parse(slurp(dir / "matrix-eval.json"));
    EXPECT_EQ(matrix.at("rows").size(), 4u);
    std::filesystem::remove_all(dir);
}

TEST(Range, WriteToUnwritablePathIsIoError) {
    auto r = execute(scenario({{"duration_s", 1}}));
    EXPECT_THROW(r.write("/proc/airrange/out"), IoError);
}

TEST(Range, StepwiseMatchesExecute) {
    Scenario s = busy_scenario(3);
    Range range(s);
    while (!range.finished()) range.step();
    EXPECT_EQ(range.finish().traces_csv(), execute(s).traces_csv());
}

TEST(Range, OperatorEventsReachTheDevice) {
    auto r = execute(scenario({{"duration_s", 5},
                               {"events",
                                {{{"t", 1}, {"action", "set_range"}, {"params", {{"low", 80}, {"high", 110}}}},
                                 {{"t", 2}, {"action", "set_unit"}, {"params", {{"unit", "BAR"}}}},
                                 {{"t", 3}, {"action", "set_voltage"}, {"params", {{"volts", 100}}}}}}}));
    EXPECT_DOUBLE_EQ(r.final_state.at("cut_in_psi").get<double>(), 80);
    EXPECT_EQ(r.final_state.at("unit"), "BAR");
    EXPECT_FALSE(r.final_state.at("motor_on").get<bool>());
    EXPECT_FALSE(r.operator_log.empty());
}

TEST(Range, MatrixEvaluationReportsPairings) {
    auto r = execute(scenario({{"duration_s", 20},
                               {"defense_profile", DefenseProfile::only(Defense::api_authentication).to_json()},
                               {"attacks", {{{"id", "AT9"}, {"t_start", 1}}}}}));
    bool found = false;
    for (const auto& row : r.matrix_eval.at("rows")) {
        for (const auto& p : row.at("pairings")) {
            if (p.at("attack") == "AT9" && p.at("defense") == "D10") {
                found = true;
                EXPECT_EQ(p.at("holds"), true);
            }
            if (p.at("defense") == "D11") EXPECT_TRUE(p.at("holds").is_null());
        }
    }
    EXPECT_TRUE(found);
}

TEST(Range, PersistenceChainSatisfiesO3) {
    auto r = execute(load_scenario(std::string(AIRRANGE_SOURCE_DIR) + "/scenarios/persistence_chain.json"));
    EXPECT_TRUE(r.objectives.at(Objective::O3).satisfied);
    EXPECT_EQ(r.objectives.at(Objective::O3).leaves, (std::set<std::string>{"AT1", "AT4"}));
}

TEST(Range, TwinPollsOnlyAtWholeSeconds) {
    auto r = execute(scenario({{"duration_s", 10}, {"twin_mode", "counters_only"}}));
    EXPECT_EQ(r.report().at("summary").at("twin").at("mode"), "counters_only");
    // The monitor and twin each poll once per second; the operator is idle.
    EXPECT_EQ(r.availability.samples.size(), 10u);
}
