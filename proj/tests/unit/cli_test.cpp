#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
};

Outcome run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + AIRRANGE_CLI + "\" " + args + " 2>/dev/null";
    Outcome o;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return o;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) o.out.append(buf, n);
    const int status = pclose(pipe);
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return o;
}

std::string scenario_path(const char* name) { return std::string(AIRRANGE_SOURCE_DIR) + "/scenarios/" + name; }

json read_json(const fs::path& p) {
    std::ifstream in(p);
    return json::parse(in);
}

class Cli : public ::testing::Test {
protected:
    fs::path dir = fs::temp_directory_path() / ("airrange_cli_" + std::string(
                                                                   ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    void SetUp() override { fs::remove_all(dir); }
    void TearDown() override { fs::remove_all(dir); }
};

}  // namespace

TEST_F(Cli, RunWritesReport) {
    auto o = run_cli("run --quiet --scenario " + scenario_path("nominal.json") + " --out " + dir.string());
    ASSERT_EQ(o.code, 0);
    auto report = read_json(dir / "report.json");
    EXPECT_EQ(report.at("schema_version"), "airrange.report/1");
    EXPECT_EQ(report.at("summary").at("twin").at("false_beliefs"), 0);
    EXPECT_TRUE(fs::exists(dir / "traces.csv"));
}

TEST_F(Cli, RebootLoopAvailability) {
    auto o = run_cli("run --quiet --scenario " + scenario_path("reboot_loop.json") + " --out " + dir.string());
    ASSERT_EQ(o.code, 0);
    auto report = read_json(dir / "report.json");
    EXPECT_NEAR(report.at("summary").at("availability_ratio").get<double>(), 0.2, 0.02);
}

TEST_F(Cli, MalformedScenarioExitsTwo) {
    fs::create_directories(dir);
    {
        std::ofstream(dir / "bad.json") << R"({"duration_s": -4})";
    }
    EXPECT_EQ(run_cli("run --scenario " + (dir / "bad.json").string() + " --out " + (dir / "o").string()).code, 2);
}

TEST_F(Cli, MissingScenarioExitsThree) {
    EXPECT_EQ(run_cli("run --scenario " + (dir / "absent.json").string() + " --out " + dir.string()).code, 3);
}

TEST_F(Cli, ListsRegistries) {
    auto attacks = run_cli("list attacks --format json");
    ASSERT_EQ(attacks.code, 0);
    EXPECT_EQ(json::parse(attacks.out).size(), 14u);
    EXPECT_EQ(json::parse(run_cli("list defenses --format json").out).size(), 14u);
    EXPECT_EQ(json::parse(run_cli("list vectors --format json").out).size(), 8u);
    EXPECT_EQ(json::parse(run_cli("list probes --format json").out).size(), 2u);
    auto matrix = json::parse(run_cli("list matrix --format json").out);
    EXPECT_EQ(matrix.at("rows").size(), 4u);
}

TEST_F(Cli, ValidateAndSweep) {
    EXPECT_EQ(run_cli("validate").code, 0);
    fs::create_directories(dir);
    ASSERT_EQ(run_cli("sweep --out " + (dir / "sweep.json").string()).code, 0);
    EXPECT_EQ(read_json(dir / "sweep.json").at("violations"), 0);
}

TEST_F(Cli, UnknownSubcommandFails) { EXPECT_NE(run_cli("explode").code, 0); }
