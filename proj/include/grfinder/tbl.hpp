#pragma once

// Transformation-based error-driven rule learning over candidate feature
// vectors: greedy induction of an ordered rule list, and deterministic
// application of such lists. The same rule shapes back the hand-written
// baseline packs.

#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "grfinder/candidates.hpp"
#include "grfinder/corpus.hpp"
#include "grfinder/mbl.hpp"

namespace grf {

enum class CondOp { Equals, Member };

/// One conjunct of a rule. `values` is a value set: an Equals condition holds
/// when the (atom) feature value is one of them, a Member condition when the
/// (set) feature value contains one of them. `negated` inverts the test.
struct Condition {
    std::string slot;
    std::string family;
    CondOp op = CondOp::Equals;
    std::vector<std::string> values;
    bool negated = false;

    std::string position() const { return slot + "." + family; }
    bool operator==(const Condition&) const = default;
};

struct Rule {
    std::vector<Condition> conditions;
    GrLabel action = GrLabel::None;  // None clears the label
    int template_id = -1;

    bool operator==(const Rule&) const = default;
};

/// A rule shape: which positions a learned rule tests, values left free.
struct RuleTemplate {
    int id = 0;
    struct Slot {
        std::string slot;
        std::string family;
        bool operator==(const Slot&) const = default;
    };
    std::vector<Slot> slots;  // at most 4
};

enum class RuleInit { AllNone, MajorityClass };

struct RuleList {
    std::vector<Rule> rules;
    RuleInit init = RuleInit::AllNone;
    GrLabel initial_label = GrLabel::None;  // resolved training majority when init == MajorityClass
};

// ---------------------------------------------------------------------------
// Matching

using PositionIndex = std::map<std::string, size_t>;

inline PositionIndex make_position_index(std::span<const std::string> positions) {
    PositionIndex idx;
    for (size_t i = 0; i < positions.size(); ++i) idx[positions[i]] = i;
    return idx;
}

inline bool condition_matches(const Condition& cond, const FeatureVector& row,
                              const PositionIndex& index) {
    auto it = index.find(cond.position());
    if (it == index.end())
        throw std::invalid_argument("rule condition references unknown position '" +
                                    cond.position() + "'");
    const FeatureValue& v = row.values[it->second];
    bool hit = false;
    if (cond.op == CondOp::Equals) {
        if (!v.is_set)
            for (const std::string& want : cond.values)
                if (v.atom == want) {
                    hit = true;
                    break;
                }
    } else {
        if (v.is_set)
            for (const std::string& want : cond.values)
                if (v.contains(want)) {
                    hit = true;
                    break;
                }
    }
    return cond.negated ? !hit : hit;
}

inline bool rule_matches(const Rule& rule, const FeatureVector& row, const PositionIndex& index) {
    for (const Condition& c : rule.conditions)
        if (!condition_matches(c, row, index)) return false;
    return true;
}

/// Net gain if the rule were applied to the current labels:
/// (#labels that become correct) - (#labels that become incorrect).
inline int score_rule(const Rule& rule, std::span<const FeatureVector> rows,
                      std::span<const GrLabel> labels, const PositionIndex& index) {
    int net = 0;
    for (size_t i = 0; i < rows.size(); ++i) {
        if (!rule_matches(rule, rows[i], index)) continue;
        bool was = labels[i] == rows[i].cls;
        bool now = rule.action == rows[i].cls;
        net += static_cast<int>(now) - static_cast<int>(was);
    }
    return net;
}

inline GrLabel initial_label_for(RuleInit init, std::span<const FeatureVector> rows) {
    if (init == RuleInit::AllNone) return GrLabel::None;
    std::map<GrLabel, int> counts;
    for (const FeatureVector& r : rows) counts[r.cls] += 1;
    return detail::majority_label(counts, counts);
}

/// Applies rules in learning order; each rule acts simultaneously on every
/// matching candidate. Returns the final label per row.
inline std::vector<GrLabel> apply_rules(const RuleList& list, std::span<const FeatureVector> rows,
                                        const PositionIndex& index) {
    std::vector<GrLabel> labels(rows.size(), list.init == RuleInit::AllNone ? GrLabel::None
                                                                            : list.initial_label);
    for (const Rule& rule : list.rules)
        for (size_t i = 0; i < rows.size(); ++i)
            if (rule_matches(rule, rows[i], index)) labels[i] = rule.action;
    return labels;
}

// ---------------------------------------------------------------------------
// Learning

namespace detail {

struct RuleKey {
    int template_id;
    std::vector<std::string> values;
    GrLabel action;
    bool operator<(const RuleKey& o) const {
        if (template_id != o.template_id) return template_id < o.template_id;
        if (values != o.values) return values < o.values;
        return std::string_view(to_string(action)) < std::string_view(to_string(o.action));
    }
};

/// Instantiates every (template, value...) combination consistent with an
/// erroneous row, emitting the row's gold label as the action. Set-valued
/// slots contribute one membership value per element.
inline void instantiate_from_error(const FeatureVector& row, const RuleTemplate& tmpl,
                                   const PositionIndex& index, std::map<RuleKey, int>& good) {
    std::vector<std::vector<std::string>> choices;
    for (const auto& slot : tmpl.slots) {
        auto it = index.find(slot.slot + "." + slot.family);
        if (it == index.end()) return;  // template not applicable under this config
        const FeatureValue& v = row.values[it->second];
        if (v.is_set) {
            if (v.items.empty()) return;  // nothing to test membership of
            choices.push_back(v.items);
        } else {
            choices.push_back({v.atom});
        }
    }
    std::vector<size_t> pick(choices.size(), 0);
    while (true) {
        RuleKey key;
        key.template_id = tmpl.id;
        key.action = row.cls;
        for (size_t i = 0; i < choices.size(); ++i) key.values.push_back(choices[i][pick[i]]);
        good[key] += 1;
        size_t i = 0;
        for (; i < pick.size(); ++i) {
            if (++pick[i] < choices[i].size()) break;
            pick[i] = 0;
        }
        if (i == pick.size()) break;
    }
}

inline Rule rule_from_key(const RuleKey& key, const RuleTemplate& tmpl) {
    Rule r;
    r.template_id = key.template_id;
    r.action = key.action;
    for (size_t i = 0; i < tmpl.slots.size(); ++i) {
        Condition c;
        c.slot = tmpl.slots[i].slot;
        c.family = tmpl.slots[i].family;
        c.op = is_set_valued_family(c.family) ? CondOp::Member : CondOp::Equals;
        c.values = {key.values[i]};
        r.conditions.push_back(std::move(c));
    }
    return r;
}

/// Selection order among scored rules: higher net, fewer conditions, earlier
/// template, lexicographically smaller condition values, label name.
inline bool rule_better(int net_a, const RuleKey& a, size_t conds_a, int net_b, const RuleKey& b,
                        size_t conds_b) {
    if (net_a != net_b) return net_a > net_b;
    if (conds_a != conds_b) return conds_a < conds_b;
    return a < b;
}

}  // namespace detail

/// Greedy error-driven induction. Each round instantiates rules from the
/// current errors, scores them, appends the best one and applies it; learning
/// stops when no rule gains at least `threshold` net corrections.
inline RuleList learn(std::span<const std::string> positions, std::span<const FeatureVector> rows,
                      std::span<const RuleTemplate> templates, int threshold = 2,
                      RuleInit init = RuleInit::AllNone) {
    if (threshold < 1) throw std::invalid_argument("learn: threshold must be >= 1");
    for (const RuleTemplate& t : templates)
        if (t.slots.empty() || t.slots.size() > 4)
            throw std::invalid_argument("learn: template must have 1-4 slots");
    PositionIndex index = make_position_index(positions);

    RuleList list;
    list.init = init;
    list.initial_label = initial_label_for(init, rows);
    std::vector<GrLabel> labels(rows.size(), list.initial_label);
    std::map<int, const RuleTemplate*> by_id;
    for (const RuleTemplate& t : templates) by_id[t.id] = &t;
    if (by_id.size() != templates.size())
        throw std::invalid_argument("learn: duplicate template ids");

    while (true) {
        // candidate rules from current errors, with their fix counts
        std::map<detail::RuleKey, int> good;
        for (size_t i = 0; i < rows.size(); ++i) {
            if (labels[i] == rows[i].cls) continue;
            for (const RuleTemplate& t : templates)
                detail::instantiate_from_error(rows[i], t, index, good);
        }
        if (good.empty()) break;

        std::vector<std::pair<const detail::RuleKey*, int>> order;
        order.reserve(good.size());
        for (const auto& [key, g] : good) order.emplace_back(&key, g);
        std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return *a.first < *b.first;
        });

        std::vector<size_t> correct;
        for (size_t i = 0; i < rows.size(); ++i)
            if (labels[i] == rows[i].cls) correct.push_back(i);

        bool have_best = false;
        int best_net = 0;
        const detail::RuleKey* best_key = nullptr;
        Rule best_rule;
        for (const auto& [key, g] : order) {
            if (have_best && g < best_net) break;  // net <= fix count: nothing better remains
            if (!have_best && g < threshold) break;
            Rule rule = detail::rule_from_key(*key, *by_id.at(key->template_id));
            int bad = 0;
            for (size_t i : correct)
                if (rule.action != rows[i].cls && rule_matches(rule, rows[i], index)) ++bad;
            int net = g - bad;
            if (!have_best || detail::rule_better(net, *key, rule.conditions.size(), best_net,
                                                  *best_key, best_rule.conditions.size())) {
                have_best = true;
                best_net = net;
                best_key = key;
                best_rule = std::move(rule);
            }
        }
        if (!have_best || best_net < threshold) break;

        for (size_t i = 0; i < rows.size(); ++i)
            if (rule_matches(best_rule, rows[i], index)) labels[i] = best_rule.action;
        list.rules.push_back(std::move(best_rule));
    }
    return list;
}

// ---------------------------------------------------------------------------
// Default template pack

/// Built-in rule shapes: single tests on every examined chunk, source-kind
/// pairs with target properties and geometry, and path/geometry tests. The
/// same inventory ships as templates/default.json.
inline std::vector<RuleTemplate> default_templates() {
    std::vector<RuleTemplate> out;
    int id = 0;
    auto add = [&](std::vector<RuleTemplate::Slot> slots) {
        out.push_back(RuleTemplate{id++, std::move(slots)});
    };
    const std::vector<std::string> chunk_slots = {"src-2", "src-1", "src",   "src+1", "btw1",
                                                  "btw2",  "tgt-1", "tgt",   "tgt+1"};
    for (const std::string& slot : chunk_slots)
        for (const char* fam : {"chunk-kind", "head-form", "head-pos"})
            add({{slot, fam}});
    add({{"geom", "direction"}});
    add({{"geom", "abs-category"}});
    add({{"geom", "rel-category"}});
    add({{"path", "verbs-crossed"}});
    add({{"path", "commas-crossed"}});
    add({{"tgt", "verb-properties"}});
    add({{"src", "stray-forms"}});
    add({{"src", "chunk-kind"}, {"geom", "abs-category"}});
    add({{"src", "chunk-kind"}, {"geom", "rel-category"}});
    add({{"src", "chunk-kind"}, {"geom", "direction"}});
    add({{"src", "chunk-kind"}, {"tgt", "verb-properties"}});
    add({{"src", "chunk-kind"}, {"tgt", "head-form"}});
    add({{"src", "chunk-kind"}, {"tgt", "head-pos"}});
    add({{"src", "head-form"}, {"geom", "rel-category"}});
    add({{"src", "head-form"}, {"geom", "abs-category"}});
    add({{"src", "chunk-kind"}, {"src-1", "chunk-kind"}, {"geom", "rel-category"}});
    add({{"src", "chunk-kind"}, {"src+1", "chunk-kind"}, {"geom", "abs-category"}});
    add({{"src", "chunk-kind"}, {"tgt", "head-pos"}, {"geom", "abs-category"}});
    add({{"src", "chunk-kind"}, {"tgt", "head-form"}, {"geom", "abs-category"}});
    add({{"src", "chunk-kind"}, {"tgt", "verb-properties"}, {"geom", "abs-category"}});
    add({{"src", "head-form"}, {"geom", "abs-category"}, {"tgt", "head-form"}});
    return out;
}

// ---------------------------------------------------------------------------
// Serialization: text DSL and JSON

inline std::string condition_to_text(const Condition& c) {
    std::string s;
    if (c.negated) s += '!';
    s += c.slot + "." + c.family;
    s += c.op == CondOp::Equals ? '=' : '~';
    if (c.values.size() == 1 && c.values[0].front() != '{') {
        s += c.values[0];
    } else {
        s += '{';
        for (size_t i = 0; i < c.values.size(); ++i) {
            if (i) s += ',';
            s += c.values[i];
        }
        s += '}';
    }
    return s;
}

inline std::string rule_to_text(const Rule& r) {
    std::string s = "IF ";
    for (size_t i = 0; i < r.conditions.size(); ++i) {
        if (i) s += " & ";
        s += condition_to_text(r.conditions[i]);
    }
    s += " THEN ";
    s += to_string(r.action);
    return s;
}

inline std::string rules_to_text(const RuleList& list) {
    std::string out;
    for (const Rule& r : list.rules) out += rule_to_text(r) + "\n";
    return out;
}

namespace detail {

inline const std::set<std::string>& known_slots() {
    static const std::set<std::string> slots = {"src-2", "src-1", "src",  "src+1", "btw1", "btw2",
                                                "tgt-1", "tgt",   "tgt+1"};
    return slots;
}

inline void validate_condition(const Condition& c) {
    if (c.slot == "geom") {
        static const std::set<std::string> fams = {"direction", "abs-length", "abs-category",
                                                   "rel-category"};
        if (!fams.count(c.family)) throw std::invalid_argument("unknown geometry field '" + c.family + "'");
        if (c.family == "direction")
            for (const auto& v : c.values)
                if (v != "left" && v != "right" && v != "none")
                    throw std::invalid_argument("unknown direction value '" + v + "'");
        if (c.family == "rel-category")
            for (const auto& v : c.values)
                if (v != "L1" && v != "R1" && v != "R2" && v != "other" && v != "none")
                    throw std::invalid_argument("unknown relative category '" + v + "'");
        if (c.op != CondOp::Equals)
            throw std::invalid_argument("membership test on scalar field '" + c.position() + "'");
        return;
    }
    if (c.slot == "path") {
        if (c.family != "verbs-crossed" && c.family != "commas-crossed")
            throw std::invalid_argument("unknown path field '" + c.family + "'");
        if (c.op != CondOp::Equals)
            throw std::invalid_argument("membership test on scalar field '" + c.position() + "'");
        return;
    }
    if (!known_slots().count(c.slot)) throw std::invalid_argument("unknown slot '" + c.slot + "'");
    if (!is_known_family(c.family))
        throw std::invalid_argument("unknown attribute family '" + c.family + "'");
    if (is_set_valued_family(c.family) != (c.op == CondOp::Member))
        throw std::invalid_argument(std::string("operator does not fit family '") + c.family +
                                    "': use " + (is_set_valued_family(c.family) ? "'~'" : "'='"));
    if (c.family == "chunk-kind")
        for (const auto& v : c.values) {
            // "none" is the distinguished missing-context value
            static const std::set<std::string> kinds = {"noun", "verb",  "prep",  "adv",
                                                        "adj",  "stray", "other", "none"};
            if (!kinds.count(v)) throw std::invalid_argument("unknown chunk kind '" + v + "'");
        }
}

}  // namespace detail

/// Parses one `slot.family=value` / `slot.family~value` conjunct; `!` negates,
/// `{a,b}` gives a value set. Throws std::invalid_argument on unknown
/// slots/families/closed-vocabulary values.
inline Condition condition_from_text(std::string_view text) {
    Condition c;
    std::string_view rest = text;
    if (!rest.empty() && rest[0] == '!') {
        c.negated = true;
        rest.remove_prefix(1);
    }
    size_t dot = rest.find('.');
    size_t op = rest.find_first_of("=~", dot == std::string_view::npos ? 0 : dot);
    if (dot == std::string_view::npos || op == std::string_view::npos || dot == 0 || op <= dot + 1)
        throw std::invalid_argument("malformed condition '" + std::string(text) + "'");
    c.slot = std::string(rest.substr(0, dot));
    c.family = std::string(rest.substr(dot + 1, op - dot - 1));
    c.op = rest[op] == '=' ? CondOp::Equals : CondOp::Member;
    std::string_view value = rest.substr(op + 1);
    if (value.empty()) throw std::invalid_argument("empty value in condition '" + std::string(text) + "'");
    if (value.front() == '{') {
        if (value.back() != '}')
            throw std::invalid_argument("unterminated value set in '" + std::string(text) + "'");
        value = value.substr(1, value.size() - 2);
        size_t p = 0;
        while (p <= value.size()) {
            size_t q = value.find(',', p);
            std::string_view item =
                value.substr(p, q == std::string_view::npos ? std::string_view::npos : q - p);
            if (item.empty()) throw std::invalid_argument("empty item in value set");
            c.values.emplace_back(item);
            if (q == std::string_view::npos) break;
            p = q + 1;
        }
    } else {
        c.values.emplace_back(value);
    }
    detail::validate_condition(c);
    return c;
}

/// Parses one `IF cond & cond ... THEN label` line.
inline Rule rule_from_text(std::string_view line) {
    Rule r;
    if (line.rfind("IF ", 0) != 0) throw std::invalid_argument("rule must start with 'IF '");
    size_t then_pos = line.rfind(" THEN ");
    if (then_pos == std::string_view::npos) throw std::invalid_argument("rule is missing ' THEN '");
    std::string_view conds = line.substr(3, then_pos - 3);
    std::string_view label = line.substr(then_pos + 6);
    auto parsed = gr_label_from_string(label);
    if (!parsed) throw std::invalid_argument("unknown label '" + std::string(label) + "'");
    r.action = *parsed;
    size_t p = 0;
    while (p < conds.size()) {
        size_t q = conds.find(" & ", p);
        std::string_view one =
            conds.substr(p, q == std::string_view::npos ? std::string_view::npos : q - p);
        r.conditions.push_back(condition_from_text(one));
        if (q == std::string_view::npos) break;
        p = q + 3;
    }
    if (r.conditions.empty()) throw std::invalid_argument("rule has no conditions");
    return r;
}

inline nlohmann::json condition_to_json(const Condition& c) {
    return nlohmann::json{{"slot", c.slot},
                          {"family", c.family},
                          {"op", c.op == CondOp::Equals ? "=" : "~"},
                          {"values", c.values},
                          {"negated", c.negated}};
}

inline Condition condition_from_json(const nlohmann::json& j) {
    Condition c;
    c.slot = j.at("slot").get<std::string>();
    c.family = j.at("family").get<std::string>();
    c.op = j.at("op").get<std::string>() == "=" ? CondOp::Equals : CondOp::Member;
    c.values = j.at("values").get<std::vector<std::string>>();
    c.negated = j.value("negated", false);
    detail::validate_condition(c);
    return c;
}

inline nlohmann::json rules_to_json(const RuleList& list) {
    nlohmann::json rules = nlohmann::json::array();
    for (const Rule& r : list.rules) {
        nlohmann::json conds = nlohmann::json::array();
        for (const Condition& c : r.conditions) conds.push_back(condition_to_json(c));
        rules.push_back(nlohmann::json{
            {"conditions", conds}, {"action", to_string(r.action)}, {"template", r.template_id}});
    }
    nlohmann::json j;
    j["initialState"] = list.init == RuleInit::AllNone ? "all-none" : "majority";
    if (list.init == RuleInit::MajorityClass) j["initialLabel"] = to_string(list.initial_label);
    j["rules"] = rules;
    return j;
}

inline RuleList rules_from_json(const nlohmann::json& j) {
    RuleList list;
    list.init = j.value("initialState", "all-none") == "majority" ? RuleInit::MajorityClass
                                                                  : RuleInit::AllNone;
    if (list.init == RuleInit::MajorityClass)
        list.initial_label = *gr_label_from_string(j.at("initialLabel").get<std::string>());
    for (const auto& rj : j.at("rules")) {
        Rule r;
        for (const auto& cj : rj.at("conditions")) r.conditions.push_back(condition_from_json(cj));
        r.action = *gr_label_from_string(rj.at("action").get<std::string>());
        r.template_id = rj.value("template", -1);
        list.rules.push_back(std::move(r));
    }
    return list;
}

inline nlohmann::json templates_to_json(std::span<const RuleTemplate> templates) {
    nlohmann::json out = nlohmann::json::array();
    for (const RuleTemplate& t : templates) {
        nlohmann::json slots = nlohmann::json::array();
        for (const auto& s : t.slots)
            slots.push_back(nlohmann::json{{"slot", s.slot}, {"family", s.family}});
        out.push_back(nlohmann::json{{"id", t.id}, {"slots", slots}});
    }
    return out;
}

inline std::vector<RuleTemplate> templates_from_json(const nlohmann::json& j) {
    std::vector<RuleTemplate> out;
    for (const auto& tj : j) {
        RuleTemplate t;
        t.id = tj.at("id").get<int>();
        for (const auto& sj : tj.at("slots"))
            t.slots.push_back(RuleTemplate::Slot{sj.at("slot").get<std::string>(),
                                                 sj.at("family").get<std::string>()});
        if (t.slots.empty() || t.slots.size() > 4)
            throw std::invalid_argument("template must have 1-4 slots");
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace grf
