#include <algorithm>
#include <fstream>
#include <functional>

#include <gtest/gtest.h>

#include "airrange/threat_model.hpp"

using namespace airrange;
using nlohmann::json;

namespace {

json data_file(const std::string& name) {
    std::ifstream in(std::string(AIRRANGE_SOURCE_DIR) + "/data/" + name + ".json");
    return json::parse(in);
}

bool has_rule(const std::vector<CoverageViolation>& v, char rule, const std::string& subject) {
    return std::any_of(v.begin(), v.end(),
                       [&](const CoverageViolation& c) { return c.rule == rule && c.subject == subject; });
}

std::map<std::string, bool> succeeded(std::initializer_list<const char*> ids) {
    std::map<std::string, bool> m;
    for (const char* id : ids) m[id] = true;
    return m;
}

}  // namespace

TEST(ThreatModel, RegistryIsTheEightTuples) {
    const auto& m = ThreatModel::shipped();
    std::vector<std::string> keys;
    for (const auto& v : m.vectors()) keys.push_back(v.key());
    const std::vector<std::string> expected = {"TB1/SP1/AS1/O1", "TB2/SP1/AS1/O1", "TB2/SP2/AS2/O2",
                                               "TB2/SP3/AS4/O1", "TB2/SP3/AS4/O3", "TB3/SP1/AS1/O1",
                                               "TB4/SP3/AS4/O1", "TB4/SP3/AS4/O3"};
    EXPECT_EQ(keys, expected);
}

TEST(ThreatModel, CountsOfShippedRegistries) {
    const auto& m = ThreatModel::shipped();
    auto attacks = std::count_if(m.attacks().begin(), m.attacks().end(), [](const AttackInfo& a) { return !a.probe; });
    EXPECT_EQ(attacks, 14);
    EXPECT_EQ(m.defenses().size(), 14u);
    EXPECT_EQ(m.matrix().size(), 4u);
    EXPECT_EQ(m.trees().size(), 3u);
    EXPECT_EQ(m.find_attack("AT4")->kind, "brute_force");
    EXPECT_EQ(m.find_defense("D8")->name, "Brute-Force Protection");
    EXPECT_EQ(m.find_attack("AT99"), nullptr);
}

TEST(ThreatModel, VectorFilters) {
    const auto& m = ThreatModel::shipped();
    EXPECT_EQ(m.vectors_matching({.o = Objective::O1}).size(), 5u);
    EXPECT_EQ(m.vectors_matching({.tb = TrustBoundary::TB4}).size(), 2u);
    EXPECT_EQ(m.vectors_matching({.tb = TrustBoundary::TB1, .o = Objective::O2}).size(), 0u);
    EXPECT_EQ(m.vectors_matching({}).size(), 8u);
}

TEST(ThreatModel, ShippedCoverageIsClean) {
    auto v = ThreatModel::shipped().validate_coverage();
    for (const auto& c : v) ADD_FAILURE() << c.rule << " " << c.message;
    EXPECT_TRUE(v.empty());
}

TEST(ThreatModel, MissingDefenseIsReported) {
    ThreatModel m = ThreatModel::shipped();
    auto& d = m.mutable_defenses();
    d.erase(std::remove_if(d.begin(), d.end(), [](const DefenseInfo& x) { return x.id == "D10"; }), d.end());
    EXPECT_TRUE(has_rule(m.validate_coverage(), 'c', "D10"));
}

TEST(ThreatModel, UnmappedAttackIsReported) {
    ThreatModel m = ThreatModel::shipped();
    m.mutable_attacks().push_back({"AT15", "Invented", "unauth_api", {Objective::O1}, {}, false});
    auto v = m.validate_coverage();
    EXPECT_TRUE(has_rule(v, 'a', "AT15"));
    EXPECT_TRUE(has_rule(v, 'e', "AT15"));

    ThreatModel bad_key = ThreatModel::shipped();
    bad_key.mutable_attacks().front().vectors = {"TB9/SP1/AS1/O1"};
    EXPECT_TRUE(has_rule(bad_key.validate_coverage(), 'a', bad_key.attacks().front().id));
}

TEST(ThreatModel, BoundaryWithoutDefenseIsReported) {
    ThreatModel m = ThreatModel::shipped();
    for (auto& row : m.mutable_matrix()) {
        if (row.tb == TrustBoundary::TB1) row.defenses.clear();
    }
    auto v = m.validate_coverage();
    EXPECT_TRUE(std::any_of(v.begin(), v.end(), [](const CoverageViolation& c) { return c.rule == 'b'; }));
}

TEST(ThreatModel, MatrixCitingUnknownAttackIsReported) {
    ThreatModel m = ThreatModel::shipped();
    m.mutable_matrix().front().attacks.push_back("AT77");
    EXPECT_TRUE(has_rule(m.validate_coverage(), 'd', "AT77"));
}

TEST(ThreatModel, MatrixRowsAndNotes) {
    const auto& rows = ThreatModel::shipped().matrix();
    EXPECT_EQ(rows[0].tb, TrustBoundary::TB1);
    EXPECT_EQ(rows[3].tb, TrustBoundary::TB4);
    EXPECT_NE(rows[2].note.find("Indirectly Violated"), std::string::npos);
    EXPECT_NE(rows[3].note.find("Inferred Vulnerability"), std::string::npos);
    EXPECT_TRUE(rows[3].attacks.empty());
    EXPECT_EQ(rows[3].probes.size(), 2u);
}

TEST(ThreatModel, MatrixJsonRoundTrip) {
    const auto& rows = ThreatModel::shipped().matrix();
    EXPECT_EQ(matrix_from_json(matrix_to_json(rows)), rows);
    auto again = json::parse(render_matrix(rows, MatrixFormat::json));
    EXPECT_EQ(matrix_from_json(again), rows);
}

TEST(ThreatModel, EmptyRegistryRendersEmptyDocument) {
    EXPECT_EQ(render_matrix({}, MatrixFormat::markdown), "");
    EXPECT_EQ(json::parse(render_matrix({}, MatrixFormat::json)), json({{"rows", json::array()}}));
}

TEST(ThreatModel, MarkdownHasOneLinePerRow) {
    auto md = render_matrix(ThreatModel::shipped().matrix(), MatrixFormat::markdown);
    for (const char* tb : {"TB1", "TB2", "TB3", "TB4"}) EXPECT_NE(md.find(tb), std::string::npos);
}

TEST(ThreatModel, LoadsFromDirectoryLikeShipped) {
    auto m = ThreatModel::load_directory(std::string(AIRRANGE_SOURCE_DIR) + "/data");
    EXPECT_EQ(m.vectors(), ThreatModel::shipped().vectors());
    EXPECT_EQ(m.matrix(), ThreatModel::shipped().matrix());
}

TEST(ThreatModel, TreeWithUnknownLeafRejectedAtLoad) {
    json trees = data_file("trees");
    trees["trees"][0]["root"]["children"][0] = {{"leaf", "AT42"}};
    try {
        (void)ThreatModel::from_json(data_file("vectors"), data_file("attacks"), data_file("defenses"),
                                     data_file("matrix"), trees);
        FAIL() << "expected UnknownLeafError";
    } catch (const UnknownLeafError& e) {
        EXPECT_EQ(e.leaf(), "AT42");
    }
}

TEST(ThreatModel, MalformedDocumentsThrow) {
    json vectors = data_file("vectors");
    vectors["vectors"][0]["tb"] = "TB9";
    EXPECT_ANY_THROW((void)ThreatModel::from_json(vectors, data_file("attacks"), data_file("defenses"),
                                                  data_file("matrix"), data_file("trees")));
}

TEST(AttackTree, O3SatisfiedByJoinAndBruteForce) {
    const auto& m = ThreatModel::shipped();
    auto e = evaluate_tree(m.tree(Objective::O3), succeeded({"AT1", "AT4"}), m);
    EXPECT_TRUE(e.satisfied);
    EXPECT_EQ(e.leaves, (std::set<std::string>{"AT1", "AT4"}));
    EXPECT_FALSE(evaluate_tree(m.tree(Objective::O3), succeeded({"AT1"}), m).satisfied);
    EXPECT_FALSE(evaluate_tree(m.tree(Objective::O3), succeeded({"AT4", "AT5"}), m).satisfied);
}

TEST(AttackTree, MinimalLeafSet) {
    const auto& m = ThreatModel::shipped();
    auto e = evaluate_tree(m.tree(Objective::O1), succeeded({"AT6", "AT8", "AT9", "AT7"}), m);
    EXPECT_TRUE(e.satisfied);
    EXPECT_EQ(e.leaves, std::set<std::string>{"AT7"});
    auto o2 = evaluate_tree(m.tree(Objective::O2), succeeded({"AT6", "AT13"}), m);
    EXPECT_EQ(o2.leaves, (std::set<std::string>{"AT6", "AT13"}));
    EXPECT_FALSE(evaluate_tree(m.tree(Objective::O2), succeeded({"AT13"}), m).satisfied);
    EXPECT_TRUE(evaluate_tree(m.tree(Objective::O2), succeeded({"AT14"}), m).satisfied);
}

TEST(AttackTree, FailedEntriesCountAsFailed) {
    const auto& m = ThreatModel::shipped();
    std::map<std::string, bool> r = {{"AT7", false}};
    auto e = evaluate_tree(m.tree(Objective::O1), r, m);
    EXPECT_FALSE(e.satisfied);
    EXPECT_TRUE(e.leaves.empty());
}

TEST(AttackTree, UnknownLeafThrows) {
    const auto& m = ThreatModel::shipped();
    AttackTree t{Objective::O1, "x", TreeNode{TreeNode::Op::leaf, "AT42", "", false, {}}};
    EXPECT_THROW((void)evaluate_tree(t, {}, m), UnknownLeafError);
}

TEST(AttackTree, TreesMarkReconstructedStructure) {
    for (const auto& t : ThreatModel::shipped().trees()) {
        EXPECT_TRUE(t.root.reconstructed);
        EXPECT_TRUE(tree_to_json(t).dump().find("reconstructed") != std::string::npos);
    }
}

// Brute-force oracle for tree evaluation: enumerate every subset of leaves.
TEST(AttackTreeProperty, AgreesWithExhaustiveEvaluation) {
    const auto& m = ThreatModel::shipped();
    for (const auto& tree : m.trees()) {
        std::vector<std::string> leaves;
        std::function<void(const TreeNode&)> collect = [&](const TreeNode& n) {
            if (n.op == TreeNode::Op::leaf) {
                leaves.push_back(n.leaf);
                return;
            }
            for (const auto& c : n.children) collect(c);
        };
        collect(tree.root);
        std::function<bool(const TreeNode&, const std::set<std::string>&)> holds =
            [&](const TreeNode& n, const std::set<std::string>& s) {
                if (n.op == TreeNode::Op::leaf) return s.count(n.leaf) > 0;
                if (n.op == TreeNode::Op::all_of) {
                    return std::all_of(n.children.begin(), n.children.end(),
                                       [&](const TreeNode& c) { return holds(c, s); });
                }
                return std::any_of(n.children.begin(), n.children.end(),
                                   [&](const TreeNode& c) { return holds(c, s); });
            };
        const std::size_t n = leaves.size();
        for (std::size_t mask = 0; mask < (1u << n); ++mask) {
            std::map<std::string, bool> results;
            std::set<std::string> on;
            for (std::size_t i = 0; i < n; ++i) {
                if (mask & (1u << i)) {
                    results[leaves[i]] = true;
                    on.insert(leaves[i]);
                }
            }
            auto e = evaluate_tree(tree, results, m);
            ASSERT_EQ(e.satisfied, holds(tree.root, on));
            if (!e.satisfied) continue;
            // The reported set satisfies the tree, uses only successes, and
            // no smaller satisfying subset of successes exists.
            ASSERT_TRUE(holds(tree.root, e.leaves));
            for (const auto& l : e.leaves) ASSERT_TRUE(on.count(l));
            std::size_t best = n + 1;
            for (std::size_t sub = mask;; sub = (sub - 1) & mask) {
                std::set<std::string> s;
                for (std::size_t i = 0; i < n; ++i) {
                    if (sub & (1u << i)) s.insert(leaves[i]);
                }
                if (holds(tree.root, s)) best = std::min(best, s.size());
                if (sub == 0) break;
            }
            ASSERT_EQ(e.leaves.size(), best) << to_string(tree.objective) << " mask " << mask;
        }
    }
}

TEST(ThreatModel, EnumParsers) {
    EXPECT_EQ(parse_trust_boundary("TB3"), TrustBoundary::TB3);
    EXPECT_EQ(parse_objective("O2"), Objective::O2);
    EXPECT_EQ(to_string(Asset::AS4), "AS4");
    EXPECT_THROW(parse_security_property("SP7"), std::invalid_argument);
}

TEST(ThreatModel, PairingsAreUnique) {
    auto p = ThreatModel::shipped().all_pairings();
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = i + 1; j < p.size(); ++j) EXPECT_FALSE(p[i] == p[j]);
    }
    EXPECT_EQ(p.size(), 33u);
}
