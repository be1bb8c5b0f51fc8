#pragma once

// Experiment manifests and the end-to-end pipeline: normalize, enumerate
// candidates, extract features, train (optionally partitioned), predict,
// score, and compare runs under the randomization test. Reports are written
// as deterministic JSON plus an aligned text table.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "grfinder/baseline.hpp"
#include "grfinder/candidates.hpp"
#include "grfinder/corpus.hpp"
#include "grfinder/eval.hpp"
#include "grfinder/mbl.hpp"
#include "grfinder/partition.hpp"
#include "grfinder/synth.hpp"
#include "grfinder/tbl.hpp"

namespace grf {

inline constexpr const char* kToolVersion = "grfinder 0.1.0";

/// Built-in default seed, overridable through GRFINDER_SEED.
inline std::uint64_t default_seed() {
    if (const char* env = std::getenv("GRFINDER_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw std::invalid_argument("GRFINDER_SEED is not an integer");
        }
    }
    return 42;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

inline std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Feature config serialization

inline nlohmann::json feature_config_to_json(const FeatureConfig& cfg) {
    return nlohmann::json{
        {"window", to_string(cfg.window)},
        {"families", cfg.families},
        {"pathCounts",
         {{"verbsCrossed", cfg.emit_verbs_crossed}, {"commasCrossed", cfg.emit_commas_crossed}}},
        {"geometry", to_string(cfg.geometry)}};
}

inline FeatureConfig feature_config_from_json(const nlohmann::json& j) {
    FeatureConfig cfg;
    if (j.contains("window")) {
        auto w = window_from_string(j.at("window").get<std::string>());
        if (!w) throw std::invalid_argument("unknown window '" + j.at("window").get<std::string>() + "'");
        cfg.window = *w;
    }
    if (j.contains("families")) {
        cfg.families = j.at("families").get<std::vector<std::string>>();
        for (const std::string& f : cfg.families)
            if (!is_known_family(f))
                throw std::invalid_argument("unknown attribute family '" + f + "'");
        if (cfg.families.empty()) throw std::invalid_argument("feature families must be non-empty");
    }
    if (j.contains("pathCounts")) {
        cfg.emit_verbs_crossed = j.at("pathCounts").value("verbsCrossed", false);
        cfg.emit_commas_crossed = j.at("pathCounts").value("commasCrossed", false);
    }
    if (j.contains("geometry")) {
        auto g = geometry_from_string(j.at("geometry").get<std::string>());
        if (!g)
            throw std::invalid_argument("unknown geometry '" + j.at("geometry").get<std::string>() + "'");
        cfg.geometry = *g;
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Manifest

struct RunSpec {
    std::string name;
    bool baseline = false;
    LearnerConfig learner;  // ignored for baseline runs
    SpacePolicy space = SpacePolicy::MbVerbcross;
    StrayPolicy stray = StrayPolicy::MbOneWordChunks;
    FeatureConfig features;
    PartitionScheme scheme;
    ConflictMode conflict = ConflictMode::PriorityByFrequency;
    std::string rule_pack;  // baseline pack path
};

struct ComparisonSpec {
    std::string run_a;
    std::string run_b;
    Metric metric = Metric::Fscore;
    ScoreGroup group = ScoreGroup::Combined;
    int shuffles = 10000;
    std::uint64_t seed = 42;
};

struct CorpusSource {
    // either explicit corpus files...
    std::string train_path;
    std::string test_path;
    // ...or a synthesized corpus
    bool use_synth = false;
    std::string spec_path;
    SynthConfig synth;
};

struct Manifest {
    CorpusSource corpus;
    std::vector<RunSpec> runs;
    std::vector<ComparisonSpec> comparisons;
    std::string out_dir = "out";
};

namespace detail {

inline std::string resolve_path(const std::string& base_dir, const std::string& path) {
    if (path.empty() || std::filesystem::path(path).is_absolute() || base_dir.empty()) return path;
    return (std::filesystem::path(base_dir) / path).string();
}

}  // namespace detail

/// Default features for a run: window matched to the policy family, path
/// counts for the verb-crossing spaces, both geometries.
inline FeatureConfig default_feature_config(SpacePolicy space) {
    FeatureConfig cfg;
    bool mb = space == SpacePolicy::MbVerbcross || space == SpacePolicy::MbZerocross;
    cfg.window = mb ? WindowKind::MbWindow : WindowKind::TrWindow;
    cfg.emit_verbs_crossed = mb;
    cfg.emit_commas_crossed = mb;
    return cfg;
}

inline Manifest parse_manifest(const nlohmann::json& j, const std::string& base_dir = "") {
    Manifest m;
    const auto& cj = j.at("corpus");
    if (cj.contains("synth")) {
        m.corpus.use_synth = true;
        const auto& sj = cj.at("synth");
        m.corpus.spec_path = detail::resolve_path(base_dir, sj.at("spec").get<std::string>());
        m.corpus.synth.seed = sj.value("seed", default_seed());
        m.corpus.synth.sentences = sj.at("sentences").get<int>();
        m.corpus.synth.train_fraction = sj.value("trainFraction", 0.75);
    } else {
        m.corpus.train_path = detail::resolve_path(base_dir, cj.at("train").get<std::string>());
        m.corpus.test_path = detail::resolve_path(base_dir, cj.at("test").get<std::string>());
    }
    m.out_dir = detail::resolve_path(base_dir, j.value("outputDir", "out"));

    std::set<std::string> names;
    for (const auto& rj : j.at("runs")) {
        RunSpec run;
        run.name = rj.at("name").get<std::string>();
        if (!names.insert(run.name).second)
            throw std::invalid_argument("duplicate run name '" + run.name + "'");
        std::string learner = rj.at("learner").get<std::string>();
        auto space = space_policy_from_string(rj.value("spacePolicy", "mb-verbcross"));
        if (!space) throw std::invalid_argument("unknown space policy in run '" + run.name + "'");
        run.space = *space;
        auto stray = stray_policy_from_string(
            rj.value("strayPolicy", std::string(to_string(required_stray_policy(run.space)))));
        if (!stray) throw std::invalid_argument("unknown stray policy in run '" + run.name + "'");
        run.stray = *stray;
        run.features = rj.contains("features")
                           ? feature_config_from_json(rj.at("features"))
                           : (learner == "baseline" ? baseline_feature_config()
                                                    : default_feature_config(run.space));
        if (learner == "baseline") {
            run.baseline = true;
            run.rule_pack = detail::resolve_path(base_dir, rj.at("rulePack").get<std::string>());
        } else {
            auto kind = learner_kind_from_string(learner);
            if (!kind) throw std::invalid_argument("unknown learner '" + learner + "'");
            run.learner.kind = *kind;
            if (rj.contains("weighting")) {
                auto w = weight_scheme_from_string(rj.at("weighting").get<std::string>());
                if (!w) throw std::invalid_argument("unknown weighting in run '" + run.name + "'");
                run.learner.weighting = *w;
            }
            run.learner.tbl_threshold = rj.value("threshold", 2);
            if (rj.value("initialState", "all-none") == "majority")
                run.learner.tbl_init = RuleInit::MajorityClass;
            if (rj.contains("templates"))
                run.learner.templates = templates_from_json(nlohmann::json::parse(
                    read_file(detail::resolve_path(base_dir, rj.at("templates").get<std::string>()))));
        }
        if (rj.contains("partition"))
            for (const auto& pj : rj.at("partition")) {
                auto comp = partition_component_from_string(pj.get<std::string>());
                if (!comp)
                    throw std::invalid_argument("unknown partition component in run '" + run.name + "'");
                run.scheme.components.push_back(*comp);
            }
        if (rj.contains("conflictPolicy")) {
            auto c = conflict_mode_from_string(rj.at("conflictPolicy").get<std::string>());
            if (!c) throw std::invalid_argument("unknown conflict policy in run '" + run.name + "'");
            run.conflict = *c;
        }
        m.runs.push_back(std::move(run));
    }
    for (const auto& cmp : j.value("comparisons", nlohmann::json::array())) {
        ComparisonSpec c;
        c.run_a = cmp.at("runA").get<std::string>();
        c.run_b = cmp.at("runB").get<std::string>();
        auto metric = metric_from_string(cmp.value("metric", "fscore"));
        auto group = score_group_from_string(cmp.value("group", "combined"));
        if (!metric || !group) throw std::invalid_argument("bad comparison metric or group");
        c.metric = *metric;
        c.group = *group;
        c.shuffles = cmp.value("shuffles", 10000);
        c.seed = cmp.contains("seed") ? cmp.at("seed").get<std::uint64_t>() : default_seed();
        m.comparisons.push_back(std::move(c));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Pipeline

/// Per-sentence gold GRs restricted to verb targets, in head-token space
/// (source and target given as head-token indexes, which are stable across
/// stray policies).
inline SentenceGrs verb_target_gold_tokens(const Sentence& s) {
    SentenceGrs out;
    for (const GrInstance& g : s.gold) {
        const Chunk& tgt = s.chunks[static_cast<size_t>(g.target_chunk)];
        if (tgt.kind != ChunkKind::Verb) continue;
        out.push_back(GrInstance{s.chunks[static_cast<size_t>(g.source_chunk)].head, tgt.head,
                                 g.label});
    }
    return out;
}

struct BuiltData {
    std::vector<Sentence> sentences;  // normalized
    std::vector<TrainingItem> items;
    std::vector<std::string> positions;
};

inline BuiltData build_items(const std::vector<Sentence>& raw, StrayPolicy stray, SpacePolicy space,
                             const FeatureConfig& cfg, const PartitionScheme& scheme) {
    if (required_stray_policy(space) != stray)
        throw std::invalid_argument(std::string("space policy ") + to_string(space) +
                                    " requires stray policy " +
                                    to_string(required_stray_policy(space)));
    BuiltData data;
    data.positions = position_names(cfg);
    data.sentences.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        Sentence norm = normalize_strays(raw[i], stray);
        std::vector<Candidate> cands = generate_candidates(norm, space, static_cast<int>(i));
        attach_gold(cands, norm);
        for (Candidate& c : cands) {
            TrainingItem item;
            item.cand = c;
            item.vec = extract_features(c, norm, cfg);
            item.key = partition_key(c, norm, scheme);
            data.items.push_back(std::move(item));
        }
        data.sentences.push_back(std::move(norm));
    }
    return data;
}

/// Predicted labels to per-sentence GRs in head-token space. Stray-source
/// predictions are never emitted as GRs.
inline std::vector<SentenceGrs> collect_responses(const BuiltData& data,
                                                  std::span<const GrLabel> labels) {
    std::vector<SentenceGrs> out(data.sentences.size());
    for (size_t i = 0; i < data.items.size(); ++i) {
        if (labels[i] == GrLabel::None) continue;
        const Candidate& c = data.items[i].cand;
        const Sentence& s = data.sentences[static_cast<size_t>(c.sentence)];
        const Chunk& src = s.chunks[static_cast<size_t>(c.source_chunk)];
        if (src.kind == ChunkKind::Stray) continue;
        out[static_cast<size_t>(c.sentence)].push_back(
            GrInstance{src.head, s.chunks[static_cast<size_t>(c.target_chunk)].head, labels[i]});
    }
    return out;
}

struct RunOutcome {
    std::string name;
    std::string error;  // empty on success
    ScoreReport report;
    std::vector<SentenceGrs> responses;  // head-token space, per test sentence
    nlohmann::json model_json;
    std::string rules_text;  // one-rule-per-line form, rule learners only
    double wall_seconds = 0.0;
};

struct ExperimentResult {
    std::string manifest_hash;
    std::vector<RunOutcome> runs;
    struct Comparison {
        ComparisonSpec spec;
        std::string error;
        SignificanceResult result;
    };
    std::vector<Comparison> comparisons;
    std::vector<SentenceGrs> gold;  // verb-target keys per test sentence
};

inline nlohmann::json model_envelope(const RunSpec& run, const PartitionedModel& model) {
    nlohmann::json scheme = nlohmann::json::array();
    for (auto c : run.scheme.components) scheme.push_back(to_string(c));
    return nlohmann::json{{"version", 1},
                          {"tool", kToolVersion},
                          {"spacePolicy", to_string(run.space)},
                          {"strayPolicy", to_string(run.stray)},
                          {"featureConfig", feature_config_to_json(run.features)},
                          {"conflictPolicy", to_string(run.conflict)},
                          {"model", partitioned_model_to_json(model)}};
}

/// Trains a run on the training corpus and scores it on the test corpus.
inline RunOutcome execute_run(const RunSpec& run, const std::vector<Sentence>& train_raw,
                              const std::vector<Sentence>& test_raw) {
    RunOutcome outcome;
    outcome.name = run.name;
    auto started = std::chrono::steady_clock::now();
    try {
        std::vector<SentenceGrs> responses;
        if (run.baseline) {
            RuleList pack = parse_ruleset(read_file(run.rule_pack));
            BuiltData test = build_items(test_raw, run.stray, run.space, run.features, run.scheme);
            PositionIndex index = make_position_index(test.positions);
            std::vector<FeatureVector> rows;
            rows.reserve(test.items.size());
            for (const TrainingItem& it : test.items) rows.push_back(it.vec);
            std::vector<GrLabel> labels = apply_rules(pack, rows, index);
            responses = collect_responses(test, labels);
            outcome.model_json = rules_to_json(pack);
            std::vector<SentenceGrs> gold;
            for (const Sentence& s : test.sentences) gold.push_back(verb_target_gold_tokens(s));
            outcome.report = score(gold, responses);
        } else {
            BuiltData train = build_items(train_raw, run.stray, run.space, run.features, run.scheme);
            BuiltData test = build_items(test_raw, run.stray, run.space, run.features, run.scheme);
            PartitionedModel model =
                train_partitioned(train.items, run.scheme, run.learner, train.positions);
            std::vector<GrLabel> labels = predict_partitioned(model, test.items, run.conflict);
            responses = collect_responses(test, labels);
            outcome.model_json = model_envelope(run, model);
            outcome.rules_text = rule_lists_text(model);
            std::vector<SentenceGrs> gold;
            for (const Sentence& s : test.sentences) gold.push_back(verb_target_gold_tokens(s));
            outcome.report = score(gold, responses);
        }
        outcome.responses = std::move(responses);
    } catch (const std::exception& e) {
        outcome.error = e.what();
    }
    outcome.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return outcome;
}

/// Runs every manifest run and comparison. A failing run is recorded and the
/// remaining runs proceed.
inline ExperimentResult run_experiment(const Manifest& manifest,
                                       std::string_view manifest_bytes = {}) {
    ExperimentResult result;
    result.manifest_hash = fnv1a_hex(manifest_bytes);

    std::vector<Sentence> train_raw;
    std::vector<Sentence> test_raw;
    if (manifest.corpus.use_synth) {
        GrammarSpec spec =
            parse_grammar_spec(nlohmann::json::parse(read_file(manifest.corpus.spec_path)));
        SynthOutput out = generate(spec, manifest.corpus.synth);
        train_raw = parse_corpus(out.train_text);
        test_raw = parse_corpus(out.test_text);
    } else {
        train_raw = parse_corpus(read_file(manifest.corpus.train_path));
        test_raw = parse_corpus(read_file(manifest.corpus.test_path));
    }
    for (const Sentence& s : test_raw) result.gold.push_back(verb_target_gold_tokens(s));

    for (const RunSpec& run : manifest.runs)
        result.runs.push_back(execute_run(run, train_raw, test_raw));

    for (const ComparisonSpec& cmp : manifest.comparisons) {
        ExperimentResult::Comparison out;
        out.spec = cmp;
        const RunOutcome* a = nullptr;
        const RunOutcome* b = nullptr;
        for (const RunOutcome& r : result.runs) {
            if (r.name == cmp.run_a) a = &r;
            if (r.name == cmp.run_b) b = &r;
        }
        if (!a || !b)
            out.error = "comparison references unknown run";
        else if (!a->error.empty() || !b->error.empty())
            out.error = "comparison references a failed run";
        else
            out.result = significance(result.gold, a->responses, b->responses, cmp.metric,
                                      cmp.group, cmp.shuffles, cmp.seed);
        result.comparisons.push_back(std::move(out));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json experiment_report_json(const Manifest& manifest,
                                             const ExperimentResult& result) {
    nlohmann::json runs = nlohmann::json::array();
    for (size_t i = 0; i < result.runs.size(); ++i) {
        const RunOutcome& r = result.runs[i];
        const RunSpec& spec = manifest.runs[i];
        nlohmann::json scheme = nlohmann::json::array();
        for (auto c : spec.scheme.components) scheme.push_back(to_string(c));
        nlohmann::json rj{{"name", r.name},
                          {"learner", spec.baseline ? "baseline" : to_string(spec.learner.kind)},
                          {"spacePolicy", to_string(spec.space)},
                          {"strayPolicy", to_string(spec.stray)},
                          {"partition", scheme},
                          {"features", feature_config_to_json(spec.features)},
                          {"status", r.error.empty() ? "ok" : "error"}};
        if (!r.error.empty()) {
            rj["error"] = r.error;
        } else {
            rj["scores"] = score_report_to_json(r.report);
            rj["modelPath"] = "runs/" + r.name + ".model.json";
        }
        runs.push_back(std::move(rj));
    }
    nlohmann::json comparisons = nlohmann::json::array();
    for (const auto& c : result.comparisons) {
        nlohmann::json cj{{"runA", c.spec.run_a},
                          {"runB", c.spec.run_b},
                          {"metric", to_string(c.spec.metric)},
                          {"group", to_string(c.spec.group)},
                          {"shuffles", c.spec.shuffles},
                          {"seed", c.spec.seed}};
        if (!c.error.empty()) {
            cj["status"] = "error";
            cj["error"] = c.error;
        } else {
            cj["status"] = "ok";
            cj["pValue"] = c.result.p_value;
            cj["observedDiff"] = c.result.observed_diff;
        }
        comparisons.push_back(std::move(cj));
    }
    return nlohmann::json{{"tool", kToolVersion},
                          {"manifestHash", result.manifest_hash},
                          {"runs", runs},
                          {"comparisons", comparisons}};
}

inline std::string experiment_report_text(const ExperimentResult& result) {
    std::vector<std::pair<std::string, ScoreReport>> rows;
    for (const RunOutcome& r : result.runs)
        if (r.error.empty()) rows.emplace_back(r.name, r.report);
    std::string out;
    for (ScoreGroup g : kScoreGroups) {
        out += score_table(rows, g);
        out += '\n';
    }
    for (const auto& c : result.comparisons) {
        out += c.spec.run_a + " vs " + c.spec.run_b + " on " + to_string(c.spec.group) + " " +
               to_string(c.spec.metric);
        if (!c.error.empty()) {
            out += ": " + c.error + "\n";
        } else {
            char buf[64];
            std::snprintf(buf, sizeof buf, ": one-sided p = %.6f", c.result.p_value);
            out += buf;
            out += " (" + std::to_string(c.spec.shuffles) + " shuffles, seed " +
                   std::to_string(c.spec.seed) + ")\n";
        }
    }
    for (const RunOutcome& r : result.runs)
        if (!r.error.empty()) out += "run " + r.name + " failed: " + r.error + "\n";
    return out;
}

/// Writes report.json, report.txt, per-run model files, and a timing log
/// (the one output that is not byte-reproducible).
inline void write_experiment_outputs(const Manifest& manifest, const ExperimentResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(manifest.out_dir);
    fs::create_directories(fs::path(manifest.out_dir) / "runs");
    write_file((fs::path(manifest.out_dir) / "report.json").string(),
               experiment_report_json(manifest, result).dump(2) + "\n");
    write_file((fs::path(manifest.out_dir) / "report.txt").string(),
               experiment_report_text(result));
    std::string timings;
    for (const RunOutcome& r : result.runs) {
        if (r.error.empty()) {
            write_file((fs::path(manifest.out_dir) / "runs" / (r.name + ".model.json")).string(),
                       r.model_json.dump(2) + "\n");
            if (!r.rules_text.empty())
                write_file((fs::path(manifest.out_dir) / "runs" / (r.name + ".rules.txt")).string(),
                           r.rules_text);
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f", r.wall_seconds);
        timings += r.name + " " + buf + "s\n";
    }
    write_file((fs::path(manifest.out_dir) / "timings.txt").string(), timings);
}

}  // namespace grf
