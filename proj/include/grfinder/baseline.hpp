#pragma once

// Hand-written rule packs: a line-oriented DSL over the rule shapes of the
// transformation learner, plus an interpreter that runs a pack over one
// sentence's candidate space.

#include <span>
#include <string>
#include <vector>

#include "grfinder/candidates.hpp"
#include "grfinder/corpus.hpp"
#include "grfinder/tbl.hpp"

namespace grf {

/// Window configuration used when applying hand-written packs: every tr-window
/// slot, all per-chunk families, path counts and both geometries, so packs can
/// reference any declared position.
inline FeatureConfig baseline_feature_config() {
    FeatureConfig cfg;
    cfg.window = WindowKind::TrWindow;
    cfg.families = {"chunk-kind", "head-form", "head-pos", "stray-forms", "verb-properties"};
    cfg.emit_verbs_crossed = true;
    cfg.emit_commas_crossed = true;
    cfg.geometry = GeometryMode::Both;
    return cfg;
}

/// Parses a rule pack: one `IF ... THEN label` rule per line, `#` comments and
/// blank lines ignored. Unknown slots, families, or closed-vocabulary values
/// are reported with their line number.
inline RuleList parse_ruleset(std::string_view text) {
    RuleList list;
    int line_no = 0;
    size_t start = 0;
    while (start <= text.size()) {
        size_t end = text.find('\n', start);
        std::string line(text.substr(start, end == std::string_view::npos ? std::string_view::npos
                                                                          : end - start));
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        if (line[first] == '#') continue;
        try {
            list.rules.push_back(rule_from_text(std::string_view(line).substr(first)));
        } catch (const std::invalid_argument& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return list;
}

inline std::string serialize_ruleset(const RuleList& list) { return rules_to_text(list); }

/// Runs a pack over the sentence's candidates under the given search space,
/// via the transformation-application semantics. Returns the resulting
/// non-none GRs. The sentence is normalized under the policy's stray pairing
/// if it is not already.
inline std::vector<GrInstance> apply_ruleset(const RuleList& rules, const Sentence& sentence,
                                             SpacePolicy policy,
                                             const FeatureConfig& cfg = baseline_feature_config()) {
    Sentence norm = normalize_strays(sentence, required_stray_policy(policy));
    std::vector<Candidate> cands = generate_candidates(norm, policy);
    std::vector<FeatureVector> rows;
    rows.reserve(cands.size());
    for (const Candidate& c : cands) rows.push_back(extract_features(c, norm, cfg));
    PositionIndex index = make_position_index(position_names(cfg));
    std::vector<GrLabel> labels = apply_rules(rules, rows, index);
    std::vector<GrInstance> out;
    for (size_t i = 0; i < cands.size(); ++i)
        if (labels[i] != GrLabel::None)
            out.push_back(GrInstance{cands[i].source_chunk, cands[i].target_chunk, labels[i]});
    return out;
}

}  // namespace grf
