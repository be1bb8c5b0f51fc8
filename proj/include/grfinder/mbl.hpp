#pragma once

// Memory-based learning over symbolic feature vectors: IB1 nearest-neighbor
// classification with information-gain feature weighting, and the IGTREE
// tree-structured approximation.

#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "grfinder/candidates.hpp"
#include "grfinder/corpus.hpp"

namespace grf {

enum class WeightScheme { InfoGain, GainRatio };

inline const char* to_string(WeightScheme w) {
    return w == WeightScheme::InfoGain ? "info-gain" : "gain-ratio";
}

inline std::optional<WeightScheme> weight_scheme_from_string(std::string_view s) {
    if (s == "info-gain") return WeightScheme::InfoGain;
    if (s == "gain-ratio") return WeightScheme::GainRatio;
    return std::nullopt;
}

/// Flat store of training vectors. Vectors must be atom-valued; set-valued
/// attributes are rejected, which is why the stray-form and verb-property sets
/// stay on the rule-learning side of the toolbox.
struct InstanceBase {
    struct Row {
        std::vector<std::string> values;
        GrLabel cls = GrLabel::None;
    };
    std::vector<std::string> positions;
    std::vector<Row> rows;
    std::map<GrLabel, int> class_counts;
};

inline InstanceBase make_instance_base(std::vector<std::string> positions,
                                       std::span<const FeatureVector> vectors) {
    InstanceBase base;
    base.positions = std::move(positions);
    for (const FeatureVector& v : vectors) {
        if (v.values.size() != base.positions.size())
            throw std::invalid_argument("feature vector arity mismatch: got " +
                                        std::to_string(v.values.size()) + ", expected " +
                                        std::to_string(base.positions.size()));
        InstanceBase::Row row;
        row.values.reserve(v.values.size());
        for (size_t i = 0; i < v.values.size(); ++i) {
            if (v.values[i].is_set)
                throw std::invalid_argument("set-valued attribute at position '" +
                                            base.positions[i] +
                                            "' not supported by the memory-based engine");
            row.values.push_back(v.values[i].atom);
        }
        row.cls = v.cls;
        base.rows.push_back(std::move(row));
        base.class_counts[v.cls] += 1;
    }
    return base;
}

namespace detail {

inline double entropy_bits(const std::map<GrLabel, int>& counts, int total) {
    double h = 0.0;
    for (const auto& [cls, n] : counts) {
        (void)cls;
        if (n == 0) continue;
        double p = static_cast<double>(n) / total;
        h -= p * std::log2(p);
    }
    return h;
}

inline bool label_name_less(GrLabel a, GrLabel b) {
    return std::string_view(to_string(a)) < std::string_view(to_string(b));
}

/// Majority label: vote count, then global class frequency, then label name.
inline GrLabel majority_label(const std::map<GrLabel, int>& votes,
                              const std::map<GrLabel, int>& global_counts) {
    GrLabel best = GrLabel::None;
    bool have = false;
    for (const auto& [cls, n] : votes) {
        if (!have) {
            best = cls;
            have = true;
            continue;
        }
        int bn = votes.at(best);
        if (n > bn) {
            best = cls;
        } else if (n == bn) {
            auto gl = [&](GrLabel l) {
                auto it = global_counts.find(l);
                return it == global_counts.end() ? 0 : it->second;
            };
            if (gl(cls) > gl(best) || (gl(cls) == gl(best) && label_name_less(cls, best)))
                best = cls;
        }
    }
    return best;
}

}  // namespace detail

/// Information gain of one position in bits: H(class) - sum_v P(v) H(class|v).
inline double information_gain(const InstanceBase& base, size_t position) {
    if (base.rows.empty()) throw std::invalid_argument("information_gain on empty instance base");
    if (position >= base.positions.size())
        throw std::invalid_argument("information_gain: position out of range");
    int total = static_cast<int>(base.rows.size());
    double h_class = detail::entropy_bits(base.class_counts, total);
    std::map<std::string, std::map<GrLabel, int>> per_value;
    std::map<std::string, int> value_totals;
    for (const auto& row : base.rows) {
        per_value[row.values[position]][row.cls] += 1;
        value_totals[row.values[position]] += 1;
    }
    double cond = 0.0;
    for (const auto& [value, counts] : per_value) {
        int vt = value_totals[value];
        cond += (static_cast<double>(vt) / total) * detail::entropy_bits(counts, vt);
    }
    return h_class - cond;
}

/// Split info of a position (entropy of its value distribution), used by the
/// gain-ratio weighting option.
inline double split_info(const InstanceBase& base, size_t position) {
    std::map<std::string, int> value_totals;
    for (const auto& row : base.rows) value_totals[row.values[position]] += 1;
    double h = 0.0;
    int total = static_cast<int>(base.rows.size());
    for (const auto& [value, n] : value_totals) {
        (void)value;
        double p = static_cast<double>(n) / total;
        h -= p * std::log2(p);
    }
    return h;
}

inline std::vector<double> feature_weights(const InstanceBase& base, WeightScheme scheme) {
    std::vector<double> w(base.positions.size(), 0.0);
    for (size_t i = 0; i < base.positions.size(); ++i) {
        double gain = information_gain(base, i);
        if (scheme == WeightScheme::GainRatio) {
            double si = split_info(base, i);
            gain = si > 0.0 ? gain / si : 0.0;
        }
        w[i] = gain;
    }
    return w;
}

// ---------------------------------------------------------------------------
// IB1

struct Ib1Model {
    std::vector<std::string> positions;
    std::vector<double> weights;
    std::map<GrLabel, int> class_totals;
    /// Unique value patterns with per-class multiplicities, sorted by values.
    struct Pattern {
        std::vector<std::string> values;
        std::map<GrLabel, int> class_counts;
    };
    std::vector<Pattern> patterns;
    WeightScheme scheme = WeightScheme::InfoGain;
};

struct Classification {
    GrLabel label = GrLabel::None;
    double distance = 0.0;
};

/// Stores every training instance (duplicates folded into multiplicities) and
/// computes feature weights. No generalization is performed.
inline Ib1Model train_ib1(const InstanceBase& base, WeightScheme scheme = WeightScheme::InfoGain) {
    if (base.rows.empty()) throw std::invalid_argument("train_ib1: empty training set");
    Ib1Model m;
    m.positions = base.positions;
    m.class_totals = base.class_counts;
    m.scheme = scheme;
    m.weights = feature_weights(base, scheme);
    std::map<std::vector<std::string>, std::map<GrLabel, int>> folded;
    for (const auto& row : base.rows) folded[row.values][row.cls] += 1;
    for (auto& [values, counts] : folded)
        m.patterns.push_back(Ib1Model::Pattern{values, counts});
    return m;
}

/// Weighted-overlap nearest neighbor with k = 1 and all-minimal-distance
/// voting. Ties between classes break by global frequency, then label name.
inline Classification classify_ib1(const Ib1Model& model, std::span<const std::string> values) {
    if (values.size() != model.positions.size())
        throw std::invalid_argument("classify_ib1: arity mismatch");
    double best = -1.0;
    std::map<GrLabel, int> votes;
    for (const auto& pat : model.patterns) {
        double d = 0.0;
        for (size_t i = 0; i < values.size(); ++i)
            if (values[i] != pat.values[i]) d += model.weights[i];
        if (best < 0.0 || d < best) {
            best = d;
            votes.clear();
        }
        if (d == best)
            for (const auto& [cls, n] : pat.class_counts) votes[cls] += n;
    }
    return Classification{detail::majority_label(votes, model.class_totals), best};
}

inline Classification classify_ib1(const Ib1Model& model, const FeatureVector& vec) {
    std::vector<std::string> vals;
    vals.reserve(vec.values.size());
    for (const auto& v : vec.values) {
        if (v.is_set) throw std::invalid_argument("classify_ib1: set-valued attribute");
        vals.push_back(v.atom);
    }
    return classify_ib1(model, vals);
}

// ---------------------------------------------------------------------------
// IGTREE

struct IgtreeNode {
    GrLabel default_label = GrLabel::None;
    bool leaf = true;
    std::map<std::string, IgtreeNode> arcs;
};

struct IgtreeModel {
    std::vector<std::string> positions;
    std::vector<size_t> position_order;  // positions by descending gain
    std::vector<double> weights;
    std::map<GrLabel, int> class_totals;
    IgtreeNode root;
    WeightScheme scheme = WeightScheme::InfoGain;
};

namespace detail {

inline IgtreeNode build_igtree_node(const InstanceBase& base, const std::vector<size_t>& order,
                                    const std::vector<int>& row_ids, size_t depth,
                                    const std::map<GrLabel, int>& global_counts) {
    IgtreeNode node;
    std::map<GrLabel, int> counts;
    for (int r : row_ids) counts[base.rows[static_cast<size_t>(r)].cls] += 1;
    node.default_label = majority_label(counts, global_counts);
    bool homogeneous = counts.size() <= 1;
    if (homogeneous || depth >= order.size()) return node;
    node.leaf = false;
    size_t pos = order[depth];
    std::map<std::string, std::vector<int>> groups;
    for (int r : row_ids) groups[base.rows[static_cast<size_t>(r)].values[pos]].push_back(r);
    for (const auto& [value, ids] : groups)
        node.arcs.emplace(value, build_igtree_node(base, order, ids, depth + 1, global_counts));
    return node;
}

}  // namespace detail

/// Builds the decision tree on positions in descending-gain order; expansion
/// stops when a node is class-homogeneous or positions run out. Every node
/// keeps the majority label of the instances reaching it as its default.
inline IgtreeModel train_igtree(const InstanceBase& base,
                                WeightScheme scheme = WeightScheme::InfoGain) {
    if (base.rows.empty()) throw std::invalid_argument("train_igtree: empty training set");
    IgtreeModel m;
    m.positions = base.positions;
    m.class_totals = base.class_counts;
    m.scheme = scheme;
    m.weights = feature_weights(base, scheme);
    m.position_order.resize(base.positions.size());
    for (size_t i = 0; i < m.position_order.size(); ++i) m.position_order[i] = i;
    std::stable_sort(m.position_order.begin(), m.position_order.end(),
                     [&](size_t a, size_t b) { return m.weights[a] > m.weights[b]; });
    std::vector<int> all(base.rows.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    m.root = detail::build_igtree_node(base, m.position_order, all, 0, base.class_counts);
    return m;
}

/// Walks arcs by the vector's values in position order; a missing arc yields
/// the current node's default label.
inline GrLabel classify_igtree(const IgtreeModel& model, std::span<const std::string> values) {
    if (values.size() != model.positions.size())
        throw std::invalid_argument("classify_igtree: arity mismatch");
    const IgtreeNode* node = &model.root;
    for (size_t depth = 0; !node->leaf && depth < model.position_order.size(); ++depth) {
        auto it = node->arcs.find(values[model.position_order[depth]]);
        if (it == node->arcs.end()) break;
        node = &it->second;
    }
    return node->default_label;
}

inline GrLabel classify_igtree(const IgtreeModel& model, const FeatureVector& vec) {
    std::vector<std::string> vals;
    vals.reserve(vec.values.size());
    for (const auto& v : vec.values) {
        if (v.is_set) throw std::invalid_argument("classify_igtree: set-valued attribute");
        vals.push_back(v.atom);
    }
    return classify_igtree(model, vals);
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json ib1_to_json(const Ib1Model& m) {
    nlohmann::json j;
    j["positions"] = m.positions;
    j["weights"] = m.weights;
    j["weighting"] = to_string(m.scheme);
    nlohmann::json totals = nlohmann::json::object();
    for (const auto& [cls, n] : m.class_totals) totals[to_string(cls)] = n;
    j["classTotals"] = totals;
    nlohmann::json pats = nlohmann::json::array();
    for (const auto& p : m.patterns) {
        nlohmann::json counts = nlohmann::json::object();
        for (const auto& [cls, n] : p.class_counts) counts[to_string(cls)] = n;
        pats.push_back(nlohmann::json{{"values", p.values}, {"classes", counts}});
    }
    j["instances"] = pats;
    return j;
}

inline Ib1Model ib1_from_json(const nlohmann::json& j) {
    Ib1Model m;
    m.positions = j.at("positions").get<std::vector<std::string>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.scheme = *weight_scheme_from_string(j.value("weighting", "info-gain"));
    for (const auto& [name, n] : j.at("classTotals").items())
        m.class_totals[*gr_label_from_string(name)] = n.get<int>();
    for (const auto& p : j.at("instances")) {
        Ib1Model::Pattern pat;
        pat.values = p.at("values").get<std::vector<std::string>>();
        for (const auto& [name, n] : p.at("classes").items())
            pat.class_counts[*gr_label_from_string(name)] = n.get<int>();
        m.patterns.push_back(std::move(pat));
    }
    return m;
}

inline nlohmann::json igtree_node_to_json(const IgtreeNode& n) {
    nlohmann::json j;
    j["default"] = to_string(n.default_label);
    if (!n.leaf) {
        nlohmann::json arcs = nlohmann::json::object();
        for (const auto& [value, child] : n.arcs) arcs[value] = igtree_node_to_json(child);
        j["arcs"] = arcs;
    }
    return j;
}

inline IgtreeNode igtree_node_from_json(const nlohmann::json& j) {
    IgtreeNode n;
    n.default_label = *gr_label_from_string(j.at("default").get<std::string>());
    if (j.contains("arcs")) {
        n.leaf = false;
        for (const auto& [value, child] : j.at("arcs").items())
            n.arcs.emplace(value, igtree_node_from_json(child));
    }
    return n;
}

inline nlohmann::json igtree_to_json(const IgtreeModel& m) {
    nlohmann::json j;
    j["positions"] = m.positions;
    j["positionOrder"] = m.position_order;
    j["weights"] = m.weights;
    j["weighting"] = to_string(m.scheme);
    nlohmann::json totals = nlohmann::json::object();
    for (const auto& [cls, n] : m.class_totals) totals[to_string(cls)] = n;
    j["classTotals"] = totals;
    j["tree"] = igtree_node_to_json(m.root);
    return j;
}

inline IgtreeModel igtree_from_json(const nlohmann::json& j) {
    IgtreeModel m;
    m.positions = j.at("positions").get<std::vector<std::string>>();
    m.position_order = j.at("positionOrder").get<std::vector<size_t>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.scheme = *weight_scheme_from_string(j.value("weighting", "info-gain"));
    for (const auto& [name, n] : j.at("classTotals").items())
        m.class_totals[*gr_label_from_string(name)] = n.get<int>();
    m.root = igtree_node_from_json(j.at("tree"));
    return m;
}

}  // namespace grf
