#pragma once

// Partitioned training and prediction: candidate data is split into
// independent slices by descriptor-derived keys, one model is trained per
// slice, and per-label binary runs are merged under a conflict policy.

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "grfinder/candidates.hpp"
#include "grfinder/corpus.hpp"
#include "grfinder/mbl.hpp"
#include "grfinder/tbl.hpp"

namespace grf {

enum class PartitionComponent {
    SourceChunkKind,
    RelationType,
    Direction,
    AbsLengthCategory,
    RelativeVerbCategory,
};

inline const char* to_string(PartitionComponent c) {
    switch (c) {
        case PartitionComponent::SourceChunkKind: return "source-chunk-kind";
        case PartitionComponent::RelationType: return "relation-type";
        case PartitionComponent::Direction: return "direction";
        case PartitionComponent::AbsLengthCategory: return "abs-length-category";
        case PartitionComponent::RelativeVerbCategory: return "relative-verb-category";
    }
    return "source-chunk-kind";
}

inline std::optional<PartitionComponent> partition_component_from_string(std::string_view s) {
    for (auto c : {PartitionComponent::SourceChunkKind, PartitionComponent::RelationType,
                   PartitionComponent::Direction, PartitionComponent::AbsLengthCategory,
                   PartitionComponent::RelativeVerbCategory})
        if (s == to_string(c)) return c;
    return std::nullopt;
}

struct PartitionScheme {
    std::vector<PartitionComponent> components;

    bool empty() const { return components.empty(); }
    bool has_relation_type() const {
        for (auto c : components)
            if (c == PartitionComponent::RelationType) return true;
        return false;
    }
};

/// Routing key for a candidate: the ordered tuple of component values, joined
/// with '|'. The relation-type component does not contribute here; it selects
/// the per-label binary run instead.
inline std::string partition_key(const Candidate& cand, const Sentence& sentence,
                                 const PartitionScheme& scheme) {
    std::string key;
    for (PartitionComponent c : scheme.components) {
        std::string part;
        switch (c) {
            case PartitionComponent::SourceChunkKind:
                part = to_string(sentence.chunks[static_cast<size_t>(cand.source_chunk)].kind);
                break;
            case PartitionComponent::RelationType:
                continue;
            case PartitionComponent::Direction:
                part = to_string(cand.direction);
                break;
            case PartitionComponent::AbsLengthCategory:
                part = std::to_string(cand.abs_length);
                break;
            case PartitionComponent::RelativeVerbCategory:
                part = to_string(cand.rel_category);
                break;
        }
        if (!key.empty()) key += '|';
        key += part;
    }
    return key;
}

enum class ConflictMode { PriorityByFrequency, FirstWins, NoneOnConflict };

inline const char* to_string(ConflictMode m) {
    switch (m) {
        case ConflictMode::PriorityByFrequency: return "label-priority-by-training-frequency";
        case ConflictMode::FirstWins: return "first-wins";
        case ConflictMode::NoneOnConflict: return "none-on-conflict";
    }
    return "label-priority-by-training-frequency";
}

inline std::optional<ConflictMode> conflict_mode_from_string(std::string_view s) {
    for (auto m : {ConflictMode::PriorityByFrequency, ConflictMode::FirstWins,
                   ConflictMode::NoneOnConflict})
        if (s == to_string(m)) return m;
    return std::nullopt;
}

enum class LearnerKind { Ib1, Igtree, Tbl };

inline const char* to_string(LearnerKind k) {
    switch (k) {
        case LearnerKind::Ib1: return "ib1";
        case LearnerKind::Igtree: return "igtree";
        case LearnerKind::Tbl: return "tbl";
    }
    return "ib1";
}

inline std::optional<LearnerKind> learner_kind_from_string(std::string_view s) {
    if (s == "ib1") return LearnerKind::Ib1;
    if (s == "igtree") return LearnerKind::Igtree;
    if (s == "tbl") return LearnerKind::Tbl;
    return std::nullopt;
}

struct LearnerConfig {
    LearnerKind kind = LearnerKind::Ib1;
    WeightScheme weighting = WeightScheme::InfoGain;
    int tbl_threshold = 2;
    RuleInit tbl_init = RuleInit::AllNone;
    std::vector<RuleTemplate> templates = default_templates();
};

using LearnerModel = std::variant<Ib1Model, IgtreeModel, RuleList>;

/// One training row: a candidate with its extracted features.
struct TrainingItem {
    Candidate cand;
    FeatureVector vec;
    std::string key;  // partition routing key
};

struct PartitionedModel {
    PartitionScheme scheme;
    LearnerKind learner = LearnerKind::Ib1;
    std::vector<std::string> positions;
    /// Outer map: target label of a binary run under relation-type schemes,
    /// or the single empty string otherwise. Inner map: routing key -> model.
    std::map<std::string, std::map<std::string, LearnerModel>> models;
    /// Non-none training labels by descending frequency (ties by name).
    std::vector<GrLabel> label_priority;
};

namespace detail {

inline LearnerModel train_one(const LearnerConfig& cfg, std::span<const std::string> positions,
                              std::span<const FeatureVector> rows) {
    switch (cfg.kind) {
        case LearnerKind::Ib1:
            return train_ib1(make_instance_base({positions.begin(), positions.end()}, rows),
                             cfg.weighting);
        case LearnerKind::Igtree:
            return train_igtree(make_instance_base({positions.begin(), positions.end()}, rows),
                                cfg.weighting);
        case LearnerKind::Tbl:
            return learn(positions, rows, cfg.templates, cfg.tbl_threshold, cfg.tbl_init);
    }
    throw std::logic_error("unreachable");
}

inline GrLabel predict_one(const LearnerModel& model, const FeatureVector& vec,
                           const PositionIndex& index) {
    if (std::holds_alternative<Ib1Model>(model))
        return classify_ib1(std::get<Ib1Model>(model), vec).label;
    if (std::holds_alternative<IgtreeModel>(model))
        return classify_igtree(std::get<IgtreeModel>(model), vec);
    const RuleList& rules = std::get<RuleList>(model);
    std::span<const FeatureVector> one(&vec, 1);
    return apply_rules(rules, one, index)[0];
}

}  // namespace detail

/// Computes routing keys for items under a scheme.
inline void assign_keys(std::vector<TrainingItem>& items, std::span<const Sentence> sentences,
                        const PartitionScheme& scheme) {
    for (TrainingItem& it : items)
        it.key = partition_key(it.cand, sentences[static_cast<size_t>(it.cand.sentence)], scheme);
}

/// Trains one model per observed routing key; under relation-type schemes,
/// one binary (label vs none) run per observed label over the full data.
/// Partitions with zero instances are simply absent.
inline PartitionedModel train_partitioned(std::span<const TrainingItem> items,
                                          const PartitionScheme& scheme,
                                          const LearnerConfig& learner,
                                          std::span<const std::string> positions) {
    PartitionedModel model;
    model.scheme = scheme;
    model.learner = learner.kind;
    model.positions.assign(positions.begin(), positions.end());

    std::map<GrLabel, int> freq;
    for (const TrainingItem& it : items)
        if (it.vec.cls != GrLabel::None) freq[it.vec.cls] += 1;
    for (const auto& [label, n] : freq) model.label_priority.push_back(label);
    std::stable_sort(model.label_priority.begin(), model.label_priority.end(),
                     [&](GrLabel a, GrLabel b) {
                         if (freq[a] != freq[b]) return freq[a] > freq[b];
                         return detail::label_name_less(a, b);
                     });

    std::vector<GrLabel> runs;  // binary-run target labels; None marks the single multiclass run
    if (scheme.has_relation_type())
        runs = model.label_priority;
    else
        runs.push_back(GrLabel::None);

    for (GrLabel run_label : runs) {
        std::map<std::string, std::vector<FeatureVector>> per_key;
        for (const TrainingItem& it : items) {
            FeatureVector vec = it.vec;
            if (run_label != GrLabel::None)
                vec.cls = vec.cls == run_label ? run_label : GrLabel::None;
            per_key[it.key].push_back(std::move(vec));
        }
        std::string run_name = run_label == GrLabel::None ? "" : to_string(run_label);
        for (const auto& [key, rows] : per_key)
            model.models[run_name].emplace(key, detail::train_one(learner, positions, rows));
    }
    return model;
}

/// Routes each item to its key's model; an unseen key yields none. Binary-run
/// claims merge under the conflict policy.
inline std::vector<GrLabel> predict_partitioned(const PartitionedModel& model,
                                                std::span<const TrainingItem> items,
                                                ConflictMode conflict) {
    PositionIndex index = make_position_index(model.positions);
    std::vector<GrLabel> out(items.size(), GrLabel::None);
    for (size_t i = 0; i < items.size(); ++i) {
        const TrainingItem& it = items[i];
        if (!model.scheme.has_relation_type()) {
            auto run = model.models.find("");
            if (run == model.models.end()) continue;
            auto m = run->second.find(it.key);
            if (m == run->second.end()) continue;  // unseen partition
            out[i] = detail::predict_one(m->second, it.vec, index);
            continue;
        }
        std::vector<GrLabel> claims;
        for (GrLabel label : model.label_priority) {
            auto run = model.models.find(to_string(label));
            if (run == model.models.end()) continue;
            auto m = run->second.find(it.key);
            if (m == run->second.end()) continue;
            if (detail::predict_one(m->second, it.vec, index) == label) claims.push_back(label);
        }
        if (claims.empty()) continue;
        if (claims.size() == 1) {
            out[i] = claims[0];
        } else {
            switch (conflict) {
                case ConflictMode::PriorityByFrequency:
                    out[i] = claims[0];  // claims were gathered in priority order
                    break;
                case ConflictMode::FirstWins:
                    // first binary run in stored (label-name) order
                    out[i] = *std::min_element(claims.begin(), claims.end(),
                                               detail::label_name_less);
                    break;
                case ConflictMode::NoneOnConflict:
                    out[i] = GrLabel::None;
                    break;
            }
        }
    }
    return out;
}

/// One-rule-per-line text rendering of every rule list in a partitioned
/// model; empty for non-rule learners.
inline std::string rule_lists_text(const PartitionedModel& model) {
    std::string out;
    for (const auto& [run, per_key] : model.models)
        for (const auto& [key, m] : per_key) {
            if (!std::holds_alternative<RuleList>(m)) continue;
            out += "# run " + (run.empty() ? std::string("(all)") : run) + " partition " +
                   (key.empty() ? std::string("(all)") : key) + "\n";
            out += rules_to_text(std::get<RuleList>(m));
        }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json learner_model_to_json(const LearnerModel& m) {
    if (std::holds_alternative<Ib1Model>(m))
        return nlohmann::json{{"kind", "ib1"}, {"model", ib1_to_json(std::get<Ib1Model>(m))}};
    if (std::holds_alternative<IgtreeModel>(m))
        return nlohmann::json{{"kind", "igtree"}, {"model", igtree_to_json(std::get<IgtreeModel>(m))}};
    return nlohmann::json{{"kind", "tbl"}, {"model", rules_to_json(std::get<RuleList>(m))}};
}

inline LearnerModel learner_model_from_json(const nlohmann::json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "ib1") return ib1_from_json(j.at("model"));
    if (kind == "igtree") return igtree_from_json(j.at("model"));
    if (kind == "tbl") return rules_from_json(j.at("model"));
    throw std::invalid_argument("unknown learner kind '" + kind + "'");
}

inline nlohmann::json partitioned_model_to_json(const PartitionedModel& m) {
    nlohmann::json scheme = nlohmann::json::array();
    for (auto c : m.scheme.components) scheme.push_back(to_string(c));
    nlohmann::json runs = nlohmann::json::object();
    for (const auto& [run, per_key] : m.models) {
        nlohmann::json keys = nlohmann::json::object();
        for (const auto& [key, model] : per_key) keys[key] = learner_model_to_json(model);
        runs[run] = keys;
    }
    nlohmann::json priority = nlohmann::json::array();
    for (GrLabel l : m.label_priority) priority.push_back(to_string(l));
    return nlohmann::json{{"scheme", scheme},
                          {"learner", to_string(m.learner)},
                          {"positions", m.positions},
                          {"labelPriority", priority},
                          {"runs", runs}};
}

inline PartitionedModel partitioned_model_from_json(const nlohmann::json& j) {
    PartitionedModel m;
    for (const auto& c : j.at("scheme")) {
        auto comp = partition_component_from_string(c.get<std::string>());
        if (!comp) throw std::invalid_argument("unknown partition component");
        m.scheme.components.push_back(*comp);
    }
    m.learner = *learner_kind_from_string(j.at("learner").get<std::string>());
    m.positions = j.at("positions").get<std::vector<std::string>>();
    for (const auto& l : j.at("labelPriority"))
        m.label_priority.push_back(*gr_label_from_string(l.get<std::string>()));
    for (const auto& [run, keys] : j.at("runs").items())
        for (const auto& [key, model] : keys.items())
            m.models[run].emplace(key, learner_model_from_json(model));
    return m;
}

}  // namespace grf
