#include "airrange/threat_model.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "airrange/embedded_data.hpp"

namespace airrange {

using nlohmann::json;

namespace {

template <typename E>
E parse_prefixed(std::string_view s, std::string_view prefix, int max) {
    if (s.size() > prefix.size() && s.substr(0, prefix.size()) == prefix) {
        auto rest = s.substr(prefix.size());
        if (rest.size() == 1 && rest[0] >= '1' && rest[0] <= '0' + max) {
            return static_cast<E>(rest[0] - '0');
        }
    }
    throw std::invalid_argument(fmt::format("expected {}1..{}{}, got '{}'", prefix, prefix, max, s));
}

json parse_text(std::string_view text, std::string_view what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ThreatModelError(fmt::format("{}: {}", what, e.what()));
    }
}

json read_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ThreatModelError("cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), p.string());
}

std::vector<std::string> string_list(const json& j, const char* key) {
    std::vector<std::string> out;
    if (j.contains(key)) {
        for (const auto& v : j.at(key)) out.push_back(v.get<std::string>());
    }
    return out;
}

TreeNode node_from_json(const json& j) {
    TreeNode n;
    if (j.contains("leaf")) {
        n.op = TreeNode::Op::leaf;
        n.leaf = j.at("leaf").get<std::string>();
        return n;
    }
    auto op = j.at("op").get<std::string>();
    if (op == "and") {
        n.op = TreeNode::Op::all_of;
    } else if (op == "or") {
        n.op = TreeNode::Op::any_of;
    } else {
        throw ThreatModelError("unknown tree operator " + op);
    }
    n.label = j.value("label", "");
    n.reconstructed = j.value("reconstructed", false);
    for (const auto& c : j.at("children")) n.children.push_back(node_from_json(c));
    if (n.children.empty()) throw ThreatModelError("tree node without children: " + n.label);
    return n;
}

json node_to_json(const TreeNode& n) {
    if (n.op == TreeNode::Op::leaf) return json{{"leaf", n.leaf}};
    json children = json::array();
    for (const auto& c : n.children) children.push_back(node_to_json(c));
    return json{{"op", n.op == TreeNode::Op::all_of ? "and" : "or"},
                {"label", n.label},
                {"reconstructed", n.reconstructed},
                {"children", children}};
}

void check_leaves(const TreeNode& n, const ThreatModel& model) {
    if (n.op == TreeNode::Op::leaf) {
        if (model.find_attack(n.leaf) == nullptr) throw UnknownLeafError(n.leaf);
        return;
    }
    for (const auto& c : n.children) check_leaves(c, model);
}

TreeEvaluation eval(const TreeNode& n, const std::map<std::string, bool>& results) {
    TreeEvaluation out;
    switch (n.op) {
    case TreeNode::Op::leaf: {
        auto it = results.find(n.leaf);
        if (it != results.end() && it->second) {
            out.satisfied = true;
            out.leaves.insert(n.leaf);
        }
        return out;
    }
    case TreeNode::Op::all_of:
        for (const auto& c : n.children) {
            auto sub = eval(c, results);
            if (!sub.satisfied) return {};
            out.leaves.insert(sub.leaves.begin(), sub.leaves.end());
        }
        out.satisfied = true;
        return out;
    case TreeNode::Op::any_of:
        for (const auto& c : n.children) {
            auto sub = eval(c, results);
            if (sub.satisfied && (!out.satisfied || sub.leaves.size() < out.leaves.size())) out = sub;
        }
        return out;
    }
    return out;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ", ";
        out += s;
    }
    return out;
}

}  // namespace

std::string to_string(TrustBoundary v) { return fmt::format("TB{}", static_cast<int>(v)); }
std::string to_string(SecurityProperty v) { return fmt::format("SP{}", static_cast<int>(v)); }
std::string to_string(Asset v) { return fmt::format("AS{}", static_cast<int>(v)); }
std::string to_string(Objective v) { return fmt::format("O{}", static_cast<int>(v)); }

TrustBoundary parse_trust_boundary(std::string_view s) { return parse_prefixed<TrustBoundary>(s, "TB", 4); }
SecurityProperty parse_security_property(std::string_view s) {
    return parse_prefixed<SecurityProperty>(s, "SP", 3);
}
Asset parse_asset(std::string_view s) { return parse_prefixed<Asset>(s, "AS", 4); }
Objective parse_objective(std::string_view s) { return parse_prefixed<Objective>(s, "O", 3); }

std::string ThreatVector::key() const {
    return fmt::format("{}/{}/{}/{}", to_string(tb), to_string(sp), to_string(as), to_string(o));
}

json vector_to_json(const ThreatVector& v) {
    return json{{"tb", to_string(v.tb)},
                {"sp", to_string(v.sp)},
                {"as", to_string(v.as)},
                {"o", to_string(v.o)},
                {"description", v.description}};
}

json tree_to_json(const AttackTree& t) {
    return json{{"objective", to_string(t.objective)}, {"title", t.title}, {"root", node_to_json(t.root)}};
}

json matrix_to_json(const std::vector<MatrixRow>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        json pairings = json::array();
        for (const auto& p : r.pairings) {
            pairings.push_back({{"attack", p.attack},
                                {"defense", p.defense},
                                {"effect", p.effect == PairEffect::blocks ? "blocks" : "detects"}});
        }
        out.push_back({{"tb", to_string(r.tb)},
                       {"title", r.title},
                       {"attacks", r.attacks},
                       {"probes", r.probes},
                       {"defenses", r.defenses},
                       {"note", r.note},
                       {"pairings", pairings}});
    }
    return json{{"rows", out}};
}

std::vector<MatrixRow> matrix_from_json(const json& j) {
    std::vector<MatrixRow> rows;
    try {
        for (const auto& r : j.at("rows")) {
            MatrixRow row;
            row.tb = parse_trust_boundary(r.at("tb").get<std::string>());
            row.title = r.value("title", "");
            row.attacks = string_list(r, "attacks");
            row.probes = string_list(r, "probes");
            row.defenses = string_list(r, "defenses");
            row.note = r.value("note", "");
            if (r.contains("pairings")) {
                for (const auto& p : r.at("pairings")) {
                    auto effect = p.value("effect", "blocks");
                    if (effect != "blocks" && effect != "detects") {
                        throw ThreatModelError("unknown pairing effect " + effect);
                    }
                    row.pairings.push_back({p.at("attack").get<std::string>(), p.at("defense").get<std::string>(),
                                            effect == "blocks" ? PairEffect::blocks : PairEffect::detects});
                }
            }
            rows.push_back(std::move(row));
        }
    } catch (const json::exception& e) {
        throw ThreatModelError(std::string("matrix: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ThreatModelError(std::string("matrix: ") + e.what());
    }
    return rows;
}

std::string render_matrix(const std::vector<MatrixRow>& rows, MatrixFormat format) {
    if (format == MatrixFormat::json) return matrix_to_json(rows).dump(2);
    if (rows.empty()) return "";
    std::string out = "| Trust boundary | Attacks | Defenses | Note |\n|---|---|---|---|\n";
    for (const auto& r : rows) {
        auto attacks = r.attacks;
        attacks.insert(attacks.end(), r.probes.begin(), r.probes.end());
        out += fmt::format("| {} {} | {} | {} | {} |\n", to_string(r.tb), r.title,
                           attacks.empty() ? "-" : join(attacks), join(r.defenses), r.note);
    }
    return out;
}

const ThreatModel& ThreatModel::shipped() {
    static const ThreatModel model = from_json(
        parse_text(embedded::vectors_json, "vectors"), parse_text(embedded::attacks_json, "attacks"),
        parse_text(embedded::defenses_json, "defenses"), parse_text(embedded::matrix_json, "matrix"),
        parse_text(embedded::trees_json, "trees"));
    return model;
}

ThreatModel ThreatModel::load_directory(const std::filesystem::path& dir) {
    return from_json(read_file(dir / "vectors.json"), read_file(dir / "attacks.json"),
                     read_file(dir / "defenses.json"), read_file(dir / "matrix.json"), read_file(dir / "trees.json"));
}

ThreatModel ThreatModel::from_json(const json& vectors, const json& attacks, const json& defenses,
                                   const json& matrix, const json& trees) {
    ThreatModel m;
    try {
        for (const auto& v : vectors.at("vectors")) {
            m.vectors_.push_back({parse_trust_boundary(v.at("tb").get<std::string>()),
                                  parse_security_property(v.at("sp").get<std::string>()),
                                  parse_asset(v.at("as").get<std::string>()),
                                  parse_objective(v.at("o").get<std::string>()), v.value("description", "")});
        }
        auto load_attacks = [&](const json& list, bool probe) {
            for (const auto& a : list) {
                AttackInfo info;
                info.id = a.at("id").get<std::string>();
                info.name = a.value("name", "");
                info.kind = a.value("kind", "");
                for (const auto& o : a.value("objectives", json::array())) {
                    info.objectives.push_back(parse_objective(o.get<std::string>()));
                }
                info.vectors = string_list(a, "vectors");
                info.probe = probe;
                m.attacks_.push_back(std::move(info));
            }
        };
        load_attacks(attacks.at("attacks"), false);
        if (attacks.contains("probes")) load_attacks(attacks.at("probes"), true);
        for (const auto& d : defenses.at("defenses")) {
            m.defenses_.push_back({d.at("id").get<std::string>(), d.value("name", "")});
        }
        for (const auto& t : trees.at("trees")) {
            m.trees_.push_back({parse_objective(t.at("objective").get<std::string>()), t.value("title", ""),
                                node_from_json(t.at("root"))});
        }
    } catch (const json::exception& e) {
        throw ThreatModelError(std::string("registry: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ThreatModelError(std::string("registry: ") + e.what());
    }
    m.matrix_ = matrix_from_json(matrix);
    for (const auto& t : m.trees_) check_leaves(t.root, m);
    return m;
}

const AttackInfo* ThreatModel::find_attack(std::string_view id) const {
    auto it = std::find_if(attacks_.begin(), attacks_.end(), [&](const AttackInfo& a) { return a.id == id; });
    return it == attacks_.end() ? nullptr : &*it;
}

const DefenseInfo* ThreatModel::find_defense(std::string_view id) const {
    auto it = std::find_if(defenses_.begin(), defenses_.end(), [&](const DefenseInfo& d) { return d.id == id; });
    return it == defenses_.end() ? nullptr : &*it;
}

const AttackTree& ThreatModel::tree(Objective o) const {
    for (const auto& t : trees_) {
        if (t.objective == o) return t;
    }
    throw ThreatModelError("no attack tree for " + to_string(o));
}

std::vector<ThreatVector> ThreatModel::vectors_matching(const VectorFilter& f) const {
    std::vector<ThreatVector> out;
    for (const auto& v : vectors_) {
        if (f.tb && *f.tb != v.tb) continue;
        if (f.sp && *f.sp != v.sp) continue;
        if (f.as && *f.as != v.as) continue;
        if (f.o && *f.o != v.o) continue;
        out.push_back(v);
    }
    return out;
}

std::vector<CoverageViolation> ThreatModel::validate_coverage() const {
    std::vector<CoverageViolation> out;
    std::set<std::string> keys;
    for (const auto& v : vectors_) keys.insert(v.key());

    for (const auto& a : attacks_) {
        bool mapped = false;
        for (const auto& k : a.vectors) {
            if (keys.count(k)) {
                mapped = true;
            } else {
                out.push_back({'a', a.id, fmt::format("{} references unknown vector {}", a.id, k)});
            }
        }
        if (!mapped) out.push_back({'a', a.id, fmt::format("{} maps to no threat vector", a.id)});
    }

    for (const auto& v : vectors_) {
        bool mitigated = std::any_of(matrix_.begin(), matrix_.end(),
                                     [&](const MatrixRow& r) { return r.tb == v.tb && !r.defenses.empty(); });
        if (!mitigated) {
            out.push_back({'b', v.key(), fmt::format("no defense mitigates {} ({})", v.key(), v.description)});
        }
    }

    for (const auto& r : matrix_) {
        auto row = to_string(r.tb);
        std::set<std::string> cited(r.defenses.begin(), r.defenses.end());
        for (const auto& p : r.pairings) cited.insert(p.defense);
        for (const auto& d : cited) {
            if (find_defense(d) == nullptr) {
                out.push_back({'c', d, fmt::format("{} row cites unknown defense {}", row, d)});
            }
        }
        std::set<std::string> refs(r.attacks.begin(), r.attacks.end());
        refs.insert(r.probes.begin(), r.probes.end());
        for (const auto& p : r.pairings) refs.insert(p.attack);
        for (const auto& a : refs) {
            if (find_attack(a) == nullptr) {
                out.push_back({'d', a, fmt::format("{} row cites unknown attack {}", row, a)});
            }
        }
    }

    for (const auto& a : attacks_) {
        bool listed = std::any_of(matrix_.begin(), matrix_.end(), [&](const MatrixRow& r) {
            const auto& list = a.probe ? r.probes : r.attacks;
            return std::find(list.begin(), list.end(), a.id) != list.end();
        });
        if (!listed) out.push_back({'e', a.id, fmt::format("{} is not listed in the traceability matrix", a.id)});
    }
    return out;
}

std::vector<Pairing> ThreatModel::all_pairings() const {
    std::vector<Pairing> out;
    for (const auto& r : matrix_) {
        for (const auto& p : r.pairings) {
            if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
        }
    }
    return out;
}

TreeEvaluation evaluate_tree(const AttackTree& tree, const std::map<std::string, bool>& results,
                             const ThreatModel& model) {
    check_leaves(tree.root, model);
    return eval(tree.root, results);
}

}  // namespace airrange
