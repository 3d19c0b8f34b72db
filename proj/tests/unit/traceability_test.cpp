#include <gtest/gtest.h>

#include "airrange/traceability.hpp"

using namespace airrange;

TEST(Traceability, TemplateExistsForEveryAttackAndProbe) {
    for (const auto& a : ThreatModel::shipped().attacks()) {
        auto s = scenario_for_attack(a.id, DefenseProfile::vulnerable());
        ASSERT_EQ(s.attacks.size(), 1u) << a.id;
        EXPECT_EQ(s.attacks[0].id, a.id);
    }
    EXPECT_THROW(scenario_for_attack("AT99", {}), SchemaError);
}

TEST(Traceability, EveryAttackSucceedsWithDefensesOff) {
    for (const auto& a : ThreatModel::shipped().attacks()) {
        auto r = execute(scenario_for_attack(a.id, DefenseProfile::vulnerable()));
        ASSERT_NE(r.attack(a.id), nullptr);
        EXPECT_TRUE(r.attack(a.id)->success) << a.id << " " << r.attack(a.id)->denied_reason.value_or("");
    }
}

TEST(Traceability, SweepHasNoViolations) {
    auto report = sweep(ThreatModel::shipped());
    EXPECT_EQ(report.verdicts.size(), ThreatModel::shipped().all_pairings().size());
    for (const auto& v : report.verdicts) {
        EXPECT_TRUE(v.holds) << v.pairing.attack << "/" << v.pairing.defense << ": " << v.explanation;
    }
    EXPECT_EQ(report.violations(), 0);
    auto j = report.to_json();
    EXPECT_EQ(j.at("violations"), 0);
    EXPECT_EQ(j.at("verdicts").size(), report.verdicts.size());
}

// A pairing that cannot hold must be reported as a violation rather than
// silently passing: D9 only audits, it never blocks a brute force.
TEST(Traceability, SweepFlagsAWrongPairing) {
    ThreatModel m = ThreatModel::shipped();
    for (auto& row : m.mutable_matrix()) {
        if (row.tb == TrustBoundary::TB2) {
            row.pairings = {{"AT4", "D9", PairEffect::blocks}, {"AT9", "D5", PairEffect::blocks}};
        } else {
            row.pairings.clear();
        }
    }
    auto report = sweep(m);
    ASSERT_EQ(report.verdicts.size(), 2u);
    EXPECT_EQ(report.violations(), 2);
    EXPECT_NE(report.verdicts[0].explanation.find("still succeeded"), std::string::npos);
}
