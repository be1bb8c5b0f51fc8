// grfinder: learn and evaluate grammatical-relationship finders over chunked
// text. Subcommands cover corpus synthesis, training, application, scoring,
// paired significance comparison, and manifest-driven experiment matrices.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "grfinder/baseline.hpp"
#include "grfinder/experiment.hpp"

namespace fs = std::filesystem;

namespace {

grf::SpacePolicy parse_space(const std::string& s) {
    auto p = grf::space_policy_from_string(s);
    if (!p) throw std::invalid_argument("unknown space policy '" + s + "'");
    return *p;
}

grf::StrayPolicy parse_stray(const std::string& s) {
    auto p = grf::stray_policy_from_string(s);
    if (!p) throw std::invalid_argument("unknown stray policy '" + s + "'");
    return *p;
}

grf::PartitionScheme parse_partition(const std::string& csv) {
    grf::PartitionScheme scheme;
    size_t p = 0;
    while (p < csv.size()) {
        size_t q = csv.find(',', p);
        std::string name = csv.substr(p, q == std::string::npos ? std::string::npos : q - p);
        if (!name.empty()) {
            auto comp = grf::partition_component_from_string(name);
            if (!comp) throw std::invalid_argument("unknown partition component '" + name + "'");
            scheme.components.push_back(*comp);
        }
        if (q == std::string::npos) break;
        p = q + 1;
    }
    return scheme;
}

/// Sentence alignment by token forms; scoring across differently chunked
/// corpora is meaningful only when the underlying text matches.
void require_same_text(const std::vector<grf::Sentence>& a, const std::vector<grf::Sentence>& b,
                       const std::string& what) {
    if (a.size() != b.size())
        throw std::invalid_argument(what + ": sentence counts differ (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                    ")");
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].tokens.size() != b[i].tokens.size())
            throw std::invalid_argument(what + ": sentence " + std::to_string(i + 1) +
                                        " token counts differ");
        for (size_t t = 0; t < a[i].tokens.size(); ++t)
            if (a[i].tokens[t].form != b[i].tokens[t].form)
                throw std::invalid_argument(what + ": sentence " + std::to_string(i + 1) +
                                            " texts differ");
    }
}

std::vector<grf::SentenceGrs> verb_target_grs(const std::vector<grf::Sentence>& corpus) {
    std::vector<grf::SentenceGrs> out;
    out.reserve(corpus.size());
    for (const grf::Sentence& s : corpus) out.push_back(grf::verb_target_gold_tokens(s));
    return out;
}

int cmd_synth(const std::string& spec_path, std::uint64_t seed, int sentences, double fraction,
              const std::string& out_dir) {
    grf::GrammarSpec spec =
        grf::parse_grammar_spec(nlohmann::json::parse(grf::read_file(spec_path)));
    grf::SynthOutput out = grf::generate(spec, grf::SynthConfig{seed, sentences, fraction});
    fs::create_directories(out_dir);
    grf::write_file((fs::path(out_dir) / "train.crp").string(), out.train_text);
    grf::write_file((fs::path(out_dir) / "test.crp").string(), out.test_text);
    std::cout << "wrote " << (fs::path(out_dir) / "train.crp").string() << " and "
              << (fs::path(out_dir) / "test.crp").string() << "\n";
    return 0;
}

int cmd_train(const std::string& train_path, const std::string& learner_name,
              const std::string& space_name, std::string stray_name,
              const std::string& features_path, const std::string& partition_csv,
              const std::string& weighting_name, int threshold, const std::string& templates_path,
              const std::string& conflict_name, const std::string& out_path) {
    grf::RunSpec run;
    run.name = "cli-train";
    auto kind = grf::learner_kind_from_string(learner_name);
    if (!kind) throw std::invalid_argument("unknown learner '" + learner_name + "'");
    run.learner.kind = *kind;
    run.space = parse_space(space_name);
    run.stray = stray_name.empty() ? grf::required_stray_policy(run.space)
                                   : parse_stray(stray_name);
    run.features = features_path.empty()
                       ? grf::default_feature_config(run.space)
                       : grf::feature_config_from_json(
                             nlohmann::json::parse(grf::read_file(features_path)));
    run.scheme = parse_partition(partition_csv);
    if (!weighting_name.empty()) {
        auto w = grf::weight_scheme_from_string(weighting_name);
        if (!w) throw std::invalid_argument("unknown weighting '" + weighting_name + "'");
        run.learner.weighting = *w;
    }
    run.learner.tbl_threshold = threshold;
    if (!templates_path.empty())
        run.learner.templates =
            grf::templates_from_json(nlohmann::json::parse(grf::read_file(templates_path)));
    if (!conflict_name.empty()) {
        auto c = grf::conflict_mode_from_string(conflict_name);
        if (!c) throw std::invalid_argument("unknown conflict policy '" + conflict_name + "'");
        run.conflict = *c;
    }

    std::vector<grf::Sentence> raw = grf::parse_corpus(grf::read_file(train_path));
    grf::BuiltData data = grf::build_items(raw, run.stray, run.space, run.features, run.scheme);
    grf::PartitionedModel model =
        grf::train_partitioned(data.items, run.scheme, run.learner, data.positions);
    grf::write_file(out_path, grf::model_envelope(run, model).dump(2) + "\n");
    std::string rules = grf::rule_lists_text(model);
    if (!rules.empty()) grf::write_file(out_path + ".rules.txt", rules);
    std::cout << "trained " << learner_name << " on " << raw.size() << " sentences ("
              << data.items.size() << " candidates) -> " << out_path << "\n";
    return 0;
}

int cmd_apply(const std::string& model_path, const std::string& rules_path,
              const std::string& corpus_path, const std::string& space_name,
              const std::string& out_path) {
    std::vector<grf::Sentence> raw = grf::parse_corpus(grf::read_file(corpus_path));
    std::vector<grf::SentenceGrs> responses;

    if (!model_path.empty()) {
        nlohmann::json env = nlohmann::json::parse(grf::read_file(model_path));
        grf::SpacePolicy space = parse_space(env.at("spacePolicy").get<std::string>());
        grf::StrayPolicy stray = parse_stray(env.at("strayPolicy").get<std::string>());
        grf::FeatureConfig features = grf::feature_config_from_json(env.at("featureConfig"));
        auto conflict =
            grf::conflict_mode_from_string(env.at("conflictPolicy").get<std::string>());
        grf::PartitionedModel model = grf::partitioned_model_from_json(env.at("model"));
        grf::BuiltData data = grf::build_items(raw, stray, space, features, model.scheme);
        std::vector<grf::GrLabel> labels =
            grf::predict_partitioned(model, data.items, *conflict);
        responses = grf::collect_responses(data, labels);
    } else {
        grf::RuleList pack = grf::parse_ruleset(grf::read_file(rules_path));
        grf::SpacePolicy space = parse_space(space_name);
        responses.resize(raw.size());
        for (size_t i = 0; i < raw.size(); ++i) {
            grf::Sentence norm = grf::normalize_strays(raw[i], grf::required_stray_policy(space));
            for (const grf::GrInstance& g : grf::apply_ruleset(pack, raw[i], space)) {
                const grf::Chunk& src = norm.chunks[static_cast<size_t>(g.source_chunk)];
                if (src.kind == grf::ChunkKind::Stray) continue;
                responses[i].push_back(grf::GrInstance{
                    src.head, norm.chunks[static_cast<size_t>(g.target_chunk)].head, g.label});
            }
        }
    }

    // response corpus: the input text and chunking, predictions as GR lines
    std::vector<grf::Sentence> out_corpus = raw;
    size_t total = 0;
    for (size_t i = 0; i < out_corpus.size(); ++i) {
        out_corpus[i].gold.clear();
        for (const grf::GrInstance& g : responses[i]) {
            auto src = out_corpus[i].chunk_of_head(g.source_chunk);
            auto tgt = out_corpus[i].chunk_of_head(g.target_chunk);
            if (src && tgt)
                out_corpus[i].gold.push_back(grf::GrInstance{*src, *tgt, g.label});
        }
        total += out_corpus[i].gold.size();
    }
    grf::write_file(out_path, grf::serialize_corpus(out_corpus));
    std::cout << "wrote " << total << " GRs -> " << out_path << "\n";
    return 0;
}

int cmd_score(const std::string& gold_path, const std::string& response_path,
              const std::string& out_path) {
    std::vector<grf::Sentence> gold = grf::parse_corpus(grf::read_file(gold_path));
    std::vector<grf::Sentence> resp = grf::parse_corpus(grf::read_file(response_path));
    require_same_text(gold, resp, "score");
    grf::ScoreReport report = grf::score(verb_target_grs(gold), verb_target_grs(resp));
    std::vector<std::pair<std::string, grf::ScoreReport>> rows = {
        {fs::path(response_path).filename().string(), report}};
    for (grf::ScoreGroup g : grf::kScoreGroups) std::cout << grf::score_table(rows, g) << "\n";
    if (!out_path.empty())
        grf::write_file(out_path, grf::score_report_to_json(report).dump(2) + "\n");
    return 0;
}

int cmd_compare(const std::string& gold_path, const std::string& a_path, const std::string& b_path,
                const std::string& metric_name, const std::string& group_name, int shuffles,
                std::uint64_t seed) {
    std::vector<grf::Sentence> gold = grf::parse_corpus(grf::read_file(gold_path));
    std::vector<grf::Sentence> a = grf::parse_corpus(grf::read_file(a_path));
    std::vector<grf::Sentence> b = grf::parse_corpus(grf::read_file(b_path));
    require_same_text(gold, a, "compare");
    require_same_text(gold, b, "compare");
    auto metric = grf::metric_from_string(metric_name);
    if (!metric) throw std::invalid_argument("unknown metric '" + metric_name + "'");
    auto group = grf::score_group_from_string(group_name);
    if (!group) throw std::invalid_argument("unknown group '" + group_name + "'");
    grf::SignificanceResult r = grf::significance(
        verb_target_grs(gold), verb_target_grs(a), verb_target_grs(b), *metric, *group, shuffles,
        seed);
    std::cout << a_path << " vs " << b_path << " on " << group_name << " " << metric_name
              << ": one-sided p = " << r.p_value << " (observed diff "
              << r.observed_diff << ", " << shuffles << " shuffles, seed " << seed << ")\n";
    return 0;
}

int cmd_run(const std::string& manifest_path, const std::string& out_override,
            const std::string& train_override, const std::string& test_override) {
    std::string bytes = grf::read_file(manifest_path);
    grf::Manifest manifest = grf::parse_manifest(
        nlohmann::json::parse(bytes), fs::path(manifest_path).parent_path().string());
    if (!out_override.empty()) manifest.out_dir = out_override;
    if (!train_override.empty() || !test_override.empty()) {
        if (train_override.empty() || test_override.empty())
            throw std::invalid_argument("--train and --test must be given together");
        manifest.corpus.use_synth = false;
        manifest.corpus.train_path = train_override;
        manifest.corpus.test_path = test_override;
    }
    grf::ExperimentResult result = grf::run_experiment(manifest, bytes);
    grf::write_experiment_outputs(manifest, result);
    if (manifest.corpus.use_synth) {
        grf::GrammarSpec spec =
            grf::parse_grammar_spec(nlohmann::json::parse(grf::read_file(manifest.corpus.spec_path)));
        grf::SynthOutput out = grf::generate(spec, manifest.corpus.synth);
        grf::write_file((fs::path(manifest.out_dir) / "train.crp").string(), out.train_text);
        grf::write_file((fs::path(manifest.out_dir) / "test.crp").string(), out.test_text);
    }
    std::cout << grf::experiment_report_text(result);
    std::cout << "reports in " << manifest.out_dir << "\n";
    for (const auto& r : result.runs)
        if (!r.error.empty()) return 1;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gr finder laboratory: learners and evaluation for grammatical relationships "
                 "over chunked text"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate an annotated synthetic corpus");
    std::string synth_spec;
    std::uint64_t synth_seed = 0;
    bool synth_seed_set = false;
    int synth_sentences = 250;
    double synth_fraction = 0.75;
    std::string synth_out = "out";
    synth->add_option("--spec", synth_spec, "grammar spec JSON")->required();
    synth->add_option("--seed", synth_seed, "generator seed")->each([&](const std::string&) {
        synth_seed_set = true;
    });
    synth->add_option("--sentences", synth_sentences, "sentence count");
    synth->add_option("--train-fraction", synth_fraction, "training split fraction");
    synth->add_option("--out", synth_out, "output directory")->required();

    // train
    auto* train = app.add_subcommand("train", "train a learner and serialize the model");
    std::string train_corpus, train_learner = "ib1", train_policy = "mb-verbcross";
    std::string train_stray, train_features, train_partition, train_weighting, train_templates;
    std::string train_conflict, train_out = "model.json";
    int train_threshold = 2;
    train->add_option("--train", train_corpus, "training corpus")->required();
    train->add_option("--learner", train_learner, "ib1 | igtree | tbl");
    train->add_option("--policy", train_policy, "search-space policy");
    train->add_option("--stray", train_stray, "stray policy (defaults to the space pairing)");
    train->add_option("--features", train_features, "feature config JSON");
    train->add_option("--partition", train_partition, "comma-separated partition components");
    train->add_option("--weighting", train_weighting, "info-gain | gain-ratio");
    train->add_option("--threshold", train_threshold, "rule-learning stop threshold");
    train->add_option("--templates", train_templates, "rule template pack JSON");
    train->add_option("--conflict", train_conflict, "conflict policy for relation-type schemes");
    train->add_option("--out", train_out, "model output path");

    // apply
    auto* apply = app.add_subcommand("apply", "apply a model or rule pack to a corpus");
    std::string apply_model, apply_rules, apply_corpus, apply_policy = "tr3", apply_out;
    apply->add_option("--model", apply_model, "serialized model JSON");
    apply->add_option("--rules", apply_rules, "hand-written rule pack (.grr)");
    apply->add_option("--corpus", apply_corpus, "input corpus")->required();
    apply->add_option("--policy", apply_policy, "search-space policy (rule packs only)");
    apply->add_option("--out", apply_out, "response corpus output path")->required();

    // score
    auto* scorecmd = app.add_subcommand("score", "score a response corpus against gold");
    std::string score_gold, score_response, score_out;
    scorecmd->add_option("--gold", score_gold, "gold corpus")->required();
    scorecmd->add_option("--response", score_response, "response corpus")->required();
    scorecmd->add_option("--out", score_out, "also write the report JSON here");

    // compare
    auto* compare = app.add_subcommand("compare", "paired randomization test between two responses");
    std::string cmp_gold, cmp_a, cmp_b, cmp_metric = "fscore", cmp_group = "combined";
    int cmp_shuffles = 10000;
    std::uint64_t cmp_seed = 0;
    bool cmp_seed_set = false;
    compare->add_option("--gold", cmp_gold, "gold corpus")->required();
    compare->add_option("responseA", cmp_a, "first response corpus")->required();
    compare->add_option("responseB", cmp_b, "second response corpus")->required();
    compare->add_option("--metric", cmp_metric, "recall | precision | fscore");
    compare->add_option("--group", cmp_group, "simple-arg | modifier | messy-arg | combined");
    compare->add_option("--shuffles", cmp_shuffles, "shuffle count (>= 1000)");
    compare->add_option("--seed", cmp_seed, "randomization seed")->each([&](const std::string&) {
        cmp_seed_set = true;
    });

    // run
    auto* runcmd = app.add_subcommand("run", "execute an experiment manifest");
    std::string run_manifest, run_out, run_train, run_test;
    runcmd->add_option("--manifest", run_manifest, "experiment manifest JSON")->required();
    runcmd->add_option("--out", run_out, "override the manifest output directory");
    runcmd->add_option("--train", run_train, "override the manifest training corpus");
    runcmd->add_option("--test", run_test, "override the manifest test corpus");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_spec, synth_seed_set ? synth_seed : grf::default_seed(),
                             synth_sentences, synth_fraction, synth_out);
        if (train->parsed())
            return cmd_train(train_corpus, train_learner, train_policy, train_stray,
                             train_features, train_partition, train_weighting, train_threshold,
                             train_templates, train_conflict, train_out);
        if (apply->parsed()) {
            if (apply_model.empty() == apply_rules.empty())
                throw std::invalid_argument("apply needs exactly one of --model or --rules");
            return cmd_apply(apply_model, apply_rules, apply_corpus, apply_policy, apply_out);
        }
        if (scorecmd->parsed()) return cmd_score(score_gold, score_response, score_out);
        if (compare->parsed())
            return cmd_compare(cmp_gold, cmp_a, cmp_b, cmp_metric, cmp_group, cmp_shuffles,
                               cmp_seed_set ? cmp_seed : grf::default_seed());
        if (runcmd->parsed()) return cmd_run(run_manifest, run_out, run_train, run_test);
    } catch (const grf::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
