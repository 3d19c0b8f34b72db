#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace airrange {

enum class TrustBoundary { TB1 = 1, TB2, TB3, TB4 };
enum class SecurityProperty { SP1 = 1, SP2, SP3 };
enum class Asset { AS1 = 1, AS2, AS3, AS4 };
enum class Objective { O1 = 1, O2, O3 };

std::string to_string(TrustBoundary v);
std::string to_string(SecurityProperty v);
std::string to_string(Asset v);
std::string to_string(Objective v);
// All parsers throw std::invalid_argument.
TrustBoundary parse_trust_boundary(std::string_view s);
SecurityProperty parse_security_property(std::string_view s);
Asset parse_asset(std::string_view s);
Objective parse_objective(std::string_view s);

class ThreatModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ThreatVector {
    TrustBoundary tb = TrustBoundary::TB1;
    SecurityProperty sp = SecurityProperty::SP1;
    Asset as = Asset::AS1;
    Objective o = Objective::O1;
    std::string description;

    /// "TB2/SP3/AS4/O1"
    [[nodiscard]] std::string key() const;
    friend bool operator==(const ThreatVector&, const ThreatVector&) = default;
};

struct VectorFilter {
    std::optional<TrustBoundary> tb;
    std::optional<SecurityProperty> sp;
    std::optional<Asset> as;
    std::optional<Objective> o;
};

struct AttackInfo {
    std::string id;
    std::string name;
    std::string kind;
    std::vector<Objective> objectives;
    std::vector<std::string> vectors;  // vector keys
    bool probe = false;
};

struct DefenseInfo {
    std::string id;
    std::string name;
};

enum class PairEffect { blocks, detects };

struct Pairing {
    std::string attack;
    std::string defense;
    PairEffect effect = PairEffect::blocks;
    friend bool operator==(const Pairing&, const Pairing&) = default;
};

struct MatrixRow {
    TrustBoundary tb = TrustBoundary::TB1;
    std::string title;
    std::vector<std::string> attacks;
    std::vector<std::string> probes;
    std::vector<std::string> defenses;
    std::string note;
    std::vector<Pairing> pairings;
    friend bool operator==(const MatrixRow&, const MatrixRow&) = default;
};

struct TreeNode {
    enum class Op { leaf, all_of, any_of };
    Op op = Op::leaf;
    std::string leaf;  // attack id when op == leaf
    std::string label;
    bool reconstructed = false;
    std::vector<TreeNode> children;
};

struct AttackTree {
    Objective objective = Objective::O1;
    std::string title;
    TreeNode root;
};

struct CoverageViolation {
    /// a: attack without a known vector; b: vector whose boundary has no
    /// mitigating defense; c: matrix cites an unknown defense;
    /// d: matrix cites an unknown attack; e: attack missing from the matrix.
    char rule = 'a';
    std::string subject;
    std::string message;
};

struct TreeEvaluation {
    bool satisfied = false;
    std::set<std::string> leaves;  // a minimal satisfying set when satisfied
};

class UnknownLeafError : public ThreatModelError {
public:
    explicit UnknownLeafError(const std::string& leaf)
        : ThreatModelError("attack tree references unknown attack " + leaf), leaf_(leaf) {}
    [[nodiscard]] const std::string& leaf() const { return leaf_; }

private:
    std::string leaf_;
};

class ThreatModel {
public:
    ThreatModel() = default;

    /// The registries compiled into the library.
    static const ThreatModel& shipped();
    /// Reads vectors/attacks/defenses/matrix/trees.json from a directory.
    static ThreatModel load_directory(const std::filesystem::path& dir);
    static ThreatModel from_json(const nlohmann::json& vectors, const nlohmann::json& attacks,
                                 const nlohmann::json& defenses, const nlohmann::json& matrix,
                                 const nlohmann::json& trees);

    [[nodiscard]] const std::vector<ThreatVector>& vectors() const { return vectors_; }
    [[nodiscard]] const std::vector<AttackInfo>& attacks() const { return attacks_; }
    [[nodiscard]] const std::vector<DefenseInfo>& defenses() const { return defenses_; }
    [[nodiscard]] const std::vector<MatrixRow>& matrix() const { return matrix_; }
    [[nodiscard]] const std::vector<AttackTree>& trees() const { return trees_; }

    std::vector<ThreatVector>& mutable_vectors() { return vectors_; }
    std::vector<AttackInfo>& mutable_attacks() { return attacks_; }
    std::vector<DefenseInfo>& mutable_defenses() { return defenses_; }
    std::vector<MatrixRow>& mutable_matrix() { return matrix_; }

    [[nodiscard]] const AttackInfo* find_attack(std::string_view id) const;
    [[nodiscard]] const DefenseInfo* find_defense(std::string_view id) const;
    [[nodiscard]] const AttackTree& tree(Objective o) const;  // throws ThreatModelError

    [[nodiscard]] std::vector<ThreatVector> vectors_matching(const VectorFilter& filter) const;
    /// Empty when the registries are consistent.
    [[nodiscard]] std::vector<CoverageViolation> validate_coverage() const;
    /// Every attack/probe with the defenses paired against it.
    [[nodiscard]] std::vector<Pairing> all_pairings() const;

private:
    std::vector<ThreatVector> vectors_;
    std::vector<AttackInfo> attacks_;
    std::vector<DefenseInfo> defenses_;
    std::vector<MatrixRow> matrix_;
    std::vector<AttackTree> trees_;
};

/// Evaluates the tree against per-attack success. Attacks absent from the map
/// count as failed; leaves not known to the model throw UnknownLeafError.
[[nodiscard]] TreeEvaluation evaluate_tree(const AttackTree& tree, const std::map<std::string, bool>& results,
                                           const ThreatModel& model);

enum class MatrixFormat { markdown, json };
[[nodiscard]] std::string render_matrix(const std::vector<MatrixRow>& rows, MatrixFormat format);
[[nodiscard]] nlohmann::json matrix_to_json(const std::vector<MatrixRow>& rows);
[[nodiscard]] std::vector<MatrixRow> matrix_from_json(const nlohmann::json& j);

[[nodiscard]] nlohmann::json vector_to_json(const ThreatVector& v);
[[nodiscard]] nlohmann::json tree_to_json(const AttackTree& t);

}  // namespace airrange
