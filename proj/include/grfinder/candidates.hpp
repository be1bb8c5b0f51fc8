#pragma once

// Candidate GR enumeration under the competing search-space policies, and
// symbolic feature extraction under the competing context windows.

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "grfinder/corpus.hpp"

namespace grf {

enum class SpacePolicy { Tr3, TrUnbounded, MbVerbcross, MbZerocross };

inline const char* to_string(SpacePolicy p) {
    switch (p) {
        case SpacePolicy::Tr3: return "tr3";
        case SpacePolicy::TrUnbounded: return "tr-unbounded";
        case SpacePolicy::MbVerbcross: return "mb-verbcross";
        case SpacePolicy::MbZerocross: return "mb-zerocross";
    }
    return "tr3";
}

inline std::optional<SpacePolicy> space_policy_from_string(std::string_view s) {
    if (s == "tr3") return SpacePolicy::Tr3;
    if (s == "tr-unbounded") return SpacePolicy::TrUnbounded;
    if (s == "mb-verbcross") return SpacePolicy::MbVerbcross;
    if (s == "mb-zerocross") return SpacePolicy::MbZerocross;
    return std::nullopt;
}

/// The stray policy each search space expects its sentences normalized under.
inline StrayPolicy required_stray_policy(SpacePolicy p) {
    return (p == SpacePolicy::Tr3 || p == SpacePolicy::TrUnbounded)
               ? StrayPolicy::TrNeighborAttributes
               : StrayPolicy::MbOneWordChunks;
}

enum class Direction { Left, Right };  // where the target sits relative to the source

inline const char* to_string(Direction d) { return d == Direction::Left ? "left" : "right"; }

enum class RelCategory { L1, R1, R2, Other };

inline const char* to_string(RelCategory c) {
    switch (c) {
        case RelCategory::L1: return "L1";
        case RelCategory::R1: return "R1";
        case RelCategory::R2: return "R2";
        case RelCategory::Other: return "other";
    }
    return "other";
}

/// Relative verb category as a function of direction and verb-crossing count:
/// the target is the first verb chunk to the left (L1), or the first (R1) or
/// second (R2) verb chunk to the right.
inline RelCategory relative_category(Direction direction, int verbs_crossed) {
    if (direction == Direction::Left && verbs_crossed == 0) return RelCategory::L1;
    if (direction == Direction::Right && verbs_crossed == 0) return RelCategory::R1;
    if (direction == Direction::Right && verbs_crossed == 1) return RelCategory::R2;
    return RelCategory::Other;
}

struct Candidate {
    int sentence = -1;  // index into the corpus, when known
    int source_chunk = 0;
    int target_chunk = 0;
    Direction direction = Direction::Left;
    int abs_length = 1;      // chunk positions between source and target; adjacent = 1
    int verbs_crossed = 0;   // verb chunks strictly between
    int commas_crossed = 0;  // stray comma chunks strictly between
    RelCategory rel_category = RelCategory::Other;
    GrLabel gold = GrLabel::None;
};

/// Counts of verb chunks and stray comma chunks strictly between two chunks.
/// Symmetric in its chunk arguments.
inline std::pair<int, int> crossing_counts(const Sentence& sentence, int chunk_a, int chunk_b) {
    int lo = std::min(chunk_a, chunk_b);
    int hi = std::max(chunk_a, chunk_b);
    int verbs = 0;
    int commas = 0;
    for (int i = lo + 1; i < hi; ++i) {
        const Chunk& c = sentence.chunks[static_cast<size_t>(i)];
        if (c.kind == ChunkKind::Verb) ++verbs;
        if (c.kind == ChunkKind::Stray && headword(c, sentence).form == ",") ++commas;
    }
    return {verbs, commas};
}

inline bool admits(SpacePolicy policy, const Candidate& c) {
    switch (policy) {
        case SpacePolicy::Tr3: return c.abs_length <= 3;
        case SpacePolicy::TrUnbounded: return true;
        case SpacePolicy::MbVerbcross:
            return (c.direction == Direction::Left && c.verbs_crossed == 0) ||
                   (c.direction == Direction::Right && c.verbs_crossed <= 1);
        case SpacePolicy::MbZerocross: return c.verbs_crossed == 0;
    }
    return false;
}

/// All (source, verb-target) pairs the policy admits, each with descriptors
/// computed, ordered by source id then target id. The sentence must already be
/// normalized under the stray policy matching the space policy.
inline std::vector<Candidate> generate_candidates(const Sentence& sentence, SpacePolicy policy,
                                                  int sentence_index = -1) {
    std::vector<Candidate> out;
    for (const Chunk& src : sentence.chunks) {
        for (const Chunk& tgt : sentence.chunks) {
            if (tgt.kind != ChunkKind::Verb || src.id == tgt.id) continue;
            Candidate c;
            c.sentence = sentence_index;
            c.source_chunk = src.id;
            c.target_chunk = tgt.id;
            c.direction = tgt.id < src.id ? Direction::Left : Direction::Right;
            c.abs_length = std::abs(tgt.id - src.id);
            auto [verbs, commas] = crossing_counts(sentence, src.id, tgt.id);
            c.verbs_crossed = verbs;
            c.commas_crossed = commas;
            c.rel_category = relative_category(c.direction, c.verbs_crossed);
            if (admits(policy, c)) out.push_back(c);
        }
    }
    return out;
}

/// Attaches gold labels to candidates from the sentence's verb-targeted gold
/// GRs; candidates matching no gold instance keep GrLabel::None.
inline void attach_gold(std::vector<Candidate>& candidates, const Sentence& sentence) {
    for (Candidate& c : candidates) {
        c.gold = GrLabel::None;
        for (const GrInstance& g : sentence.gold)
            if (g.source_chunk == c.source_chunk && g.target_chunk == c.target_chunk) {
                c.gold = g.label;
                break;
            }
    }
}

// ---------------------------------------------------------------------------
// Verb chunk properties

namespace detail {

inline bool is_be_or_get(std::string_view form) {
    static const std::set<std::string, std::less<>> forms = {
        "be", "am", "is", "are", "was", "were", "been", "being",
        "get", "gets", "got", "gotten", "getting",
        "Be", "Am", "Is", "Are", "Was", "Were", "Been", "Being",
        "Get", "Gets", "Got", "Gotten", "Getting"};
    return forms.count(form) > 0;
}

inline bool is_verbal_pos(std::string_view pos) {
    return (!pos.empty() && pos[0] == 'V') || pos == "MD" || pos == "TO";
}

}  // namespace detail

/// POS heuristic for verb chunk properties.
inline std::set<std::string> estimate_verb_properties(const Chunk& chunk, const Sentence& sentence) {
    std::set<std::string> props;
    if (chunk.kind != ChunkKind::Verb) return props;
    for (int i = chunk.span_begin; i <= chunk.span_end; ++i) {
        const Token& t = sentence.tokens[static_cast<size_t>(i)];
        if (t.pos == "TO" && i + 1 <= chunk.span_end &&
            sentence.tokens[static_cast<size_t>(i + 1)].pos == "VB")
            props.insert("infinitive");
        if (detail::is_be_or_get(t.form))
            for (int j = i + 1; j <= chunk.span_end; ++j)
                if (sentence.tokens[static_cast<size_t>(j)].pos == "VBN") props.insert("passive");
    }
    const Token& head = headword(chunk, sentence);
    if (head.pos == "VBG") {
        bool aux_before = false;
        for (int i = chunk.span_begin; i < chunk.head; ++i)
            if (detail::is_verbal_pos(sentence.tokens[static_cast<size_t>(i)].pos)) aux_before = true;
        if (!aux_before) props.insert("unconjugated-present-participle");
    }
    return props;
}

// ---------------------------------------------------------------------------
// Feature extraction

enum class WindowKind { MbWindow, TrWindow };

inline const char* to_string(WindowKind w) {
    return w == WindowKind::MbWindow ? "mb-window" : "tr-window";
}

inline std::optional<WindowKind> window_from_string(std::string_view s) {
    if (s == "mb-window") return WindowKind::MbWindow;
    if (s == "tr-window") return WindowKind::TrWindow;
    return std::nullopt;
}

enum class GeometryMode { Absolute, Relative, Both };

inline const char* to_string(GeometryMode g) {
    switch (g) {
        case GeometryMode::Absolute: return "absolute";
        case GeometryMode::Relative: return "relative";
        case GeometryMode::Both: return "both";
    }
    return "both";
}

inline std::optional<GeometryMode> geometry_from_string(std::string_view s) {
    if (s == "absolute") return GeometryMode::Absolute;
    if (s == "relative") return GeometryMode::Relative;
    if (s == "both") return GeometryMode::Both;
    return std::nullopt;
}

/// Per-chunk attribute families. "aux:<key>" reads the named aux annotation of
/// the chunk headword. The scalar verb-prop-* families expose each verb
/// property as its own yes/no attribute; "verb-properties" is the set-valued
/// form.
inline bool is_known_family(std::string_view family) {
    return family == "chunk-kind" || family == "head-form" || family == "head-pos" ||
           family == "stray-forms" || family == "verb-properties" ||
           family == "verb-prop-passive" || family == "verb-prop-infinitive" ||
           family == "verb-prop-participle" || family == "attachment-estimate" ||
           family.rfind("aux:", 0) == 0;
}

inline bool is_set_valued_family(std::string_view family) {
    return family == "stray-forms" || family == "verb-properties";
}

struct FeatureConfig {
    WindowKind window = WindowKind::MbWindow;
    std::vector<std::string> families = {"chunk-kind", "head-form", "head-pos"};
    bool emit_verbs_crossed = false;
    bool emit_commas_crossed = false;
    GeometryMode geometry = GeometryMode::Both;
};

inline const std::vector<std::string>& window_slots(WindowKind w) {
    static const std::vector<std::string> mb = {"src-2", "src-1", "src", "src+1", "tgt"};
    static const std::vector<std::string> tr = {"src-1", "src",   "src+1", "btw1",
                                                "btw2",  "tgt-1", "tgt",   "tgt+1"};
    return w == WindowKind::MbWindow ? mb : tr;
}

/// Position names, fixed and identical for every vector under one config.
inline std::vector<std::string> position_names(const FeatureConfig& cfg) {
    std::vector<std::string> names;
    for (const std::string& slot : window_slots(cfg.window))
        for (const std::string& fam : cfg.families) names.push_back(slot + "." + fam);
    if (cfg.emit_verbs_crossed) names.push_back("path.verbs-crossed");
    if (cfg.emit_commas_crossed) names.push_back("path.commas-crossed");
    if (cfg.geometry == GeometryMode::Absolute || cfg.geometry == GeometryMode::Both) {
        names.push_back("geom.direction");
        names.push_back("geom.abs-length");
        names.push_back("geom.abs-category");
    }
    if (cfg.geometry == GeometryMode::Relative || cfg.geometry == GeometryMode::Both)
        names.push_back("geom.rel-category");
    return names;
}

/// A symbolic feature value: an atom, or a set for the set-valued families.
struct FeatureValue {
    bool is_set = false;
    std::string atom = "none";
    std::vector<std::string> items;  // sorted

    static FeatureValue make_atom(std::string v) {
        FeatureValue f;
        f.atom = std::move(v);
        return f;
    }
    static FeatureValue make_set(std::vector<std::string> v) {
        FeatureValue f;
        f.is_set = true;
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        f.items = std::move(v);
        f.atom.clear();
        return f;
    }
    bool contains(const std::string& v) const {
        return std::binary_search(items.begin(), items.end(), v);
    }
    bool operator==(const FeatureValue&) const = default;
    bool operator<(const FeatureValue& o) const {
        if (is_set != o.is_set) return is_set < o.is_set;
        if (atom != o.atom) return atom < o.atom;
        return items < o.items;
    }
};

struct FeatureVector {
    std::vector<FeatureValue> values;  // aligned with position_names(config)
    GrLabel cls = GrLabel::None;       // gold class for training rows
};

namespace detail {

/// Chunk id at a named window slot, or nullopt when off the sentence edge or
/// beyond the between-chunk list.
inline std::optional<int> slot_chunk(const std::string& slot, const Candidate& cand,
                                     const Sentence& sentence) {
    int n = static_cast<int>(sentence.chunks.size());
    auto valid = [&](int id) -> std::optional<int> {
        if (id < 0 || id >= n) return std::nullopt;
        return id;
    };
    if (slot == "src") return valid(cand.source_chunk);
    if (slot == "src-1") return valid(cand.source_chunk - 1);
    if (slot == "src-2") return valid(cand.source_chunk - 2);
    if (slot == "src+1") return valid(cand.source_chunk + 1);
    if (slot == "tgt") return valid(cand.target_chunk);
    if (slot == "tgt-1") return valid(cand.target_chunk - 1);
    if (slot == "tgt+1") return valid(cand.target_chunk + 1);
    if (slot == "btw1" || slot == "btw2") {
        int offset = slot == "btw1" ? 1 : 2;
        int step = cand.target_chunk > cand.source_chunk ? 1 : -1;  // nearest-to-source first
        int id = cand.source_chunk + step * offset;
        bool inside = step > 0 ? id < cand.target_chunk : id > cand.target_chunk;
        if (!inside) return std::nullopt;
        return valid(id);
    }
    return std::nullopt;
}

inline FeatureValue family_value(const std::string& family, std::optional<int> chunk_id,
                                 const Sentence& sentence) {
    if (is_set_valued_family(family)) {
        if (!chunk_id) return FeatureValue::make_set({});
        const Chunk& c = sentence.chunks[static_cast<size_t>(*chunk_id)];
        if (family == "stray-forms") {
            std::vector<std::string> forms = c.left_stray;
            forms.insert(forms.end(), c.right_stray.begin(), c.right_stray.end());
            return FeatureValue::make_set(std::move(forms));
        }
        auto props = estimate_verb_properties(c, sentence);
        return FeatureValue::make_set({props.begin(), props.end()});
    }
    if (!chunk_id) return FeatureValue::make_atom("none");
    const Chunk& c = sentence.chunks[static_cast<size_t>(*chunk_id)];
    if (family == "chunk-kind") return FeatureValue::make_atom(to_string(c.kind));
    if (family == "head-form") return FeatureValue::make_atom(headword(c, sentence).form);
    if (family == "head-pos") return FeatureValue::make_atom(headword(c, sentence).pos);
    if (family == "verb-prop-passive" || family == "verb-prop-infinitive" ||
        family == "verb-prop-participle") {
        const char* prop = family == "verb-prop-passive" ? "passive"
                           : family == "verb-prop-infinitive"
                               ? "infinitive"
                               : "unconjugated-present-participle";
        return FeatureValue::make_atom(estimate_verb_properties(c, sentence).count(prop) ? "yes"
                                                                                         : "no");
    }
    const std::string key = family == "attachment-estimate" ? "attach" : family.substr(4);
    const auto& aux = headword(c, sentence).aux;
    auto it = aux.find(key);
    return FeatureValue::make_atom(it == aux.end() ? "none" : it->second);
}

}  // namespace detail

/// Fixed-arity symbolic vector for a candidate under a window configuration.
/// Missing context is the distinguished atom "none" (empty set for set-valued
/// families).
inline FeatureVector extract_features(const Candidate& cand, const Sentence& sentence,
                                      const FeatureConfig& cfg) {
    FeatureVector vec;
    vec.cls = cand.gold;
    for (const std::string& slot : window_slots(cfg.window)) {
        auto chunk_id = detail::slot_chunk(slot, cand, sentence);
        for (const std::string& fam : cfg.families)
            vec.values.push_back(detail::family_value(fam, chunk_id, sentence));
    }
    if (cfg.emit_verbs_crossed)
        vec.values.push_back(FeatureValue::make_atom(std::to_string(cand.verbs_crossed)));
    if (cfg.emit_commas_crossed)
        vec.values.push_back(FeatureValue::make_atom(std::to_string(cand.commas_crossed)));
    if (cfg.geometry == GeometryMode::Absolute || cfg.geometry == GeometryMode::Both) {
        vec.values.push_back(FeatureValue::make_atom(to_string(cand.direction)));
        vec.values.push_back(FeatureValue::make_atom(std::to_string(cand.abs_length)));
        vec.values.push_back(FeatureValue::make_atom(std::string(to_string(cand.direction)) + "-" +
                                                     std::to_string(cand.abs_length)));
    }
    if (cfg.geometry == GeometryMode::Relative || cfg.geometry == GeometryMode::Both)
        vec.values.push_back(FeatureValue::make_atom(to_string(cand.rel_category)));
    return vec;
}

}  // namespace grf
