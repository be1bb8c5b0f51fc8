#pragma once

// Scoring of system output against gold GRs (recall / precision / F per
// subtype group and combined, kept as exact rationals) and a paired
// approximate-randomization significance test over sentences.

#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "grfinder/corpus.hpp"

namespace grf {

enum class ScoreGroup { SimpleArg, Modifier, MessyArg, Combined };

inline constexpr std::array<ScoreGroup, 4> kScoreGroups = {
    ScoreGroup::SimpleArg, ScoreGroup::Modifier, ScoreGroup::MessyArg, ScoreGroup::Combined};

inline const char* to_string(ScoreGroup g) {
    switch (g) {
        case ScoreGroup::SimpleArg: return "simple-arg";
        case ScoreGroup::Modifier: return "modifier";
        case ScoreGroup::MessyArg: return "messy-arg";
        case ScoreGroup::Combined: return "combined";
    }
    return "combined";
}

inline std::optional<ScoreGroup> score_group_from_string(std::string_view s) {
    for (ScoreGroup g : kScoreGroups)
        if (s == to_string(g)) return g;
    return std::nullopt;
}

inline bool in_group(GrLabel label, ScoreGroup g) {
    if (g == ScoreGroup::Combined) return label != GrLabel::None;
    GrSubtype st = subtype_of(label);
    switch (g) {
        case ScoreGroup::SimpleArg: return st == GrSubtype::SimpleArg;
        case ScoreGroup::Modifier: return st == GrSubtype::Modifier;
        case ScoreGroup::MessyArg: return st == GrSubtype::MessyArg;
        default: return false;
    }
}

enum class Metric { Recall, Precision, Fscore };

inline const char* to_string(Metric m) {
    switch (m) {
        case Metric::Recall: return "recall";
        case Metric::Precision: return "precision";
        case Metric::Fscore: return "fscore";
    }
    return "fscore";
}

inline std::optional<Metric> metric_from_string(std::string_view s) {
    if (s == "recall") return Metric::Recall;
    if (s == "precision") return Metric::Precision;
    if (s == "fscore") return Metric::Fscore;
    return std::nullopt;
}

/// Exact non-negative rational with positive denominator.
struct Fraction {
    long long num = 0;
    long long den = 1;
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Rounds 100 * num / den to an integer percentage, half up.
inline int percent_round_half_up(long long num, long long den) {
    if (den == 0) return 0;
    return static_cast<int>((200 * num + den) / (2 * den));
}

/// Counts and metrics for one subtype group. Precision and recall are
/// percentages of exact counts; the F-score is their harmonic mean, computed
/// from the counts (2pr/(p+r) == 200*correct/(keys+responses)).
struct GroupScore {
    long long keys = 0;
    long long responses = 0;
    long long correct = 0;

    Fraction recall() const { return keys ? Fraction{correct, keys} : Fraction{0, 1}; }
    Fraction precision() const { return responses ? Fraction{correct, responses} : Fraction{0, 1}; }
    Fraction fscore() const {
        return keys + responses ? Fraction{2 * correct, keys + responses} : Fraction{0, 1};
    }
    Fraction metric(Metric m) const {
        switch (m) {
            case Metric::Recall: return recall();
            case Metric::Precision: return precision();
            case Metric::Fscore: return fscore();
        }
        return fscore();
    }
    int recall_pct() const { return percent_round_half_up(correct, keys); }
    int precision_pct() const { return percent_round_half_up(correct, responses); }
    int fscore_pct() const { return percent_round_half_up(2 * correct, keys + responses); }
};

struct ScoreReport {
    GroupScore simple_arg;
    GroupScore modifier;
    GroupScore messy_arg;
    GroupScore combined;

    const GroupScore& group(ScoreGroup g) const {
        switch (g) {
            case ScoreGroup::SimpleArg: return simple_arg;
            case ScoreGroup::Modifier: return modifier;
            case ScoreGroup::MessyArg: return messy_arg;
            case ScoreGroup::Combined: return combined;
        }
        return combined;
    }
    GroupScore& group(ScoreGroup g) { return const_cast<GroupScore&>(std::as_const(*this).group(g)); }
};

/// GR lists aligned with a corpus: one list per sentence.
using SentenceGrs = std::vector<GrInstance>;

/// Scores response GRs against gold. A match is an identical
/// (sentence, source chunk, target chunk, label) quadruple; duplicates within
/// a sentence count once. Responses must not carry the none label.
inline ScoreReport score(std::span<const SentenceGrs> gold, std::span<const SentenceGrs> response) {
    if (gold.size() != response.size())
        throw std::invalid_argument("score: gold and response cover different sentence counts");
    ScoreReport report;
    for (size_t i = 0; i < gold.size(); ++i) {
        std::set<GrInstance> key(gold[i].begin(), gold[i].end());
        std::set<GrInstance> resp;
        for (const GrInstance& g : response[i]) {
            if (g.label == GrLabel::None)
                throw std::invalid_argument("score: response contains the none label");
            resp.insert(g);
        }
        for (ScoreGroup g : kScoreGroups) {
            GroupScore& gs = report.group(g);
            for (const GrInstance& k : key)
                if (in_group(k.label, g)) {
                    gs.keys += 1;
                    if (resp.count(k)) gs.correct += 1;
                }
            for (const GrInstance& r : resp)
                if (in_group(r.label, g)) gs.responses += 1;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Significance

struct SignificanceResult {
    Metric metric = Metric::Fscore;
    ScoreGroup group = ScoreGroup::Combined;
    double p_value = 1.0;
    int shuffles = 0;
    std::uint64_t seed = 0;
    double observed_diff = 0.0;  // metric(A) - metric(B), exact value rounded to double
};

namespace detail {

struct SentenceCounts {
    long long keys = 0;
    long long resp_a = 0, corr_a = 0;
    long long resp_b = 0, corr_b = 0;
};

inline Fraction metric_fraction(Metric m, long long keys, long long resp, long long corr) {
    switch (m) {
        case Metric::Recall: return keys ? Fraction{corr, keys} : Fraction{0, 1};
        case Metric::Precision: return resp ? Fraction{corr, resp} : Fraction{0, 1};
        case Metric::Fscore:
            return keys + resp ? Fraction{2 * corr, keys + resp} : Fraction{0, 1};
    }
    return Fraction{0, 1};
}

/// Exact test of (a1 - a2) >= (b1 - b2) over rationals.
inline bool diff_ge(const Fraction& a1, const Fraction& a2, const Fraction& b1,
                    const Fraction& b2) {
    using I = __int128;
    I lhs_num = I(a1.num) * a2.den - I(a2.num) * a1.den;
    I lhs_den = I(a1.den) * a2.den;
    I rhs_num = I(b1.num) * b2.den - I(b2.num) * b1.den;
    I rhs_den = I(b1.den) * b2.den;
    return lhs_num * rhs_den >= rhs_num * lhs_den;
}

}  // namespace detail

/// Paired approximate randomization over sentences, one-sided for
/// metric(A) > metric(B): per shuffle, each sentence's A/B outputs swap with
/// probability 1/2 and the metric difference is recomputed;
/// p = (1 + #{shuffled diff >= observed diff}) / (1 + shuffles).
/// Reproducible bit-exactly for a fixed seed.
inline SignificanceResult significance(std::span<const SentenceGrs> gold,
                                       std::span<const SentenceGrs> response_a,
                                       std::span<const SentenceGrs> response_b, Metric metric,
                                       ScoreGroup group, int shuffles, std::uint64_t seed) {
    if (gold.size() != response_a.size() || gold.size() != response_b.size())
        throw std::invalid_argument("significance: responses scored on mismatched corpora");
    if (shuffles < 1000) throw std::invalid_argument("significance: at least 1000 shuffles required");

    std::vector<detail::SentenceCounts> counts(gold.size());
    for (size_t i = 0; i < gold.size(); ++i) {
        std::set<GrInstance> key;
        for (const GrInstance& g : gold[i])
            if (in_group(g.label, group)) key.insert(g);
        auto tally = [&](const SentenceGrs& resp, long long& rn, long long& cn) {
            std::set<GrInstance> rs;
            for (const GrInstance& r : resp) {
                if (r.label == GrLabel::None)
                    throw std::invalid_argument("significance: response contains the none label");
                if (in_group(r.label, group)) rs.insert(r);
            }
            rn = static_cast<long long>(rs.size());
            for (const GrInstance& r : rs)
                if (key.count(r)) ++cn;
        };
        counts[i].keys = static_cast<long long>(key.size());
        tally(response_a[i], counts[i].resp_a, counts[i].corr_a);
        tally(response_b[i], counts[i].resp_b, counts[i].corr_b);
    }

    long long keys_total = 0;
    for (const auto& c : counts) keys_total += c.keys;
    auto totals = [&](const std::vector<bool>& swap) {
        long long ra = 0, ca = 0, rb = 0, cb = 0;
        for (size_t i = 0; i < counts.size(); ++i) {
            const auto& c = counts[i];
            bool sw = !swap.empty() && swap[i];
            ra += sw ? c.resp_b : c.resp_a;
            ca += sw ? c.corr_b : c.corr_a;
            rb += sw ? c.resp_a : c.resp_b;
            cb += sw ? c.corr_a : c.corr_b;
        }
        return std::array<long long, 4>{ra, ca, rb, cb};
    };

    auto [ra0, ca0, rb0, cb0] = totals({});
    Fraction obs_a = detail::metric_fraction(metric, keys_total, ra0, ca0);
    Fraction obs_b = detail::metric_fraction(metric, keys_total, rb0, cb0);

    std::mt19937_64 rng(seed);
    std::vector<bool> swap(counts.size());
    int at_least = 0;
    for (int s = 0; s < shuffles; ++s) {
        for (size_t i = 0; i < swap.size(); ++i) swap[i] = (rng() & 1) != 0;
        auto [ra, ca, rb, cb] = totals(swap);
        Fraction fa = detail::metric_fraction(metric, keys_total, ra, ca);
        Fraction fb = detail::metric_fraction(metric, keys_total, rb, cb);
        if (detail::diff_ge(fa, fb, obs_a, obs_b)) ++at_least;
    }

    SignificanceResult result;
    result.metric = metric;
    result.group = group;
    result.shuffles = shuffles;
    result.seed = seed;
    result.p_value = static_cast<double>(1 + at_least) / static_cast<double>(1 + shuffles);
    result.observed_diff = obs_a.value() - obs_b.value();
    return result;
}

// ---------------------------------------------------------------------------
// Report output

inline nlohmann::json group_score_to_json(const GroupScore& g) {
    return nlohmann::json{{"keys", g.keys},
                          {"responses", g.responses},
                          {"correct", g.correct},
                          {"recallPct", g.recall_pct()},
                          {"precisionPct", g.precision_pct()},
                          {"fscorePct", g.fscore_pct()}};
}

inline nlohmann::json score_report_to_json(const ScoreReport& r) {
    nlohmann::json j;
    for (ScoreGroup g : kScoreGroups) j[to_string(g)] = group_score_to_json(r.group(g));
    return j;
}

/// Aligned plain-text table for one group, one row per named system:
/// System | Recall | Precision | F-score, recall shown as count (percent).
inline std::string score_table(std::span<const std::pair<std::string, ScoreReport>> systems,
                               ScoreGroup group) {
    size_t name_w = 6;
    for (const auto& [name, rep] : systems) name_w = std::max(name_w, name.size());
    std::string head = std::string(to_string(group)) + " GRs";
    std::string out = head + "\n";
    auto pad = [](std::string s, size_t w) {
        if (s.size() < w) s += std::string(w - s.size(), ' ');
        return s;
    };
    out += pad("System", name_w + 2) + pad("Recall", 14) + pad("Precision", 11) + "F-score\n";
    for (const auto& [name, rep] : systems) {
        const GroupScore& g = rep.group(group);
        std::string recall = std::to_string(g.correct) + " (" + std::to_string(g.recall_pct()) + "%)";
        out += pad(name, name_w + 2) + pad(recall, 14) +
               pad(std::to_string(g.precision_pct()) + "%", 11) +
               std::to_string(g.fscore_pct()) + "%\n";
    }
    return out;
}

}  // namespace grf
