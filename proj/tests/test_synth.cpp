#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <map>
#include <sstream>

#include "grfinder/candidates.hpp"
#include "grfinder/synth.hpp"

using namespace grf;

namespace {

GrammarSpec load_spec(const std::string& name) {
    std::ifstream in(std::string(GRF_REPO_DIR) + "/specs/" + name);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_grammar_spec(nlohmann::json::parse(ss.str()));
}

// a minimal grammar in the style of "I fly (fillers)* on Tuesday."
const char* kFlySpec = R"({
  "lexicon": {
    "pronoun": {"bio": "NP", "chunks": [[["I", "PRP"]]]},
    "fly": {"bio": "VP", "chunks": [[["fly", "VBP"]]]},
    "filler": {"bio": "NP", "chunks": [[["home", "NN"]], [["south", "NN"]]]},
    "on": {"bio": "PP", "chunks": [[["on", "IN"]]]},
    "day": {"bio": "NP", "chunks": [[["Tuesday", "NNP"]], [["Friday", "NNP"]]]},
    "period": {"bio": "O", "chunks": [[[".", "."]]]}
  },
  "modifierDistance": {"0": 25, "1": 25, "2": 25, "3": 25},
  "templates": [
    {
      "name": "fly",
      "weight": 1,
      "slots": [
        {"id": "s", "lex": "pronoun"},
        {"id": "v", "lex": "fly"},
        {"lex": "filler", "repeat": "modifierDistance", "offset": 0},
        {"id": "m", "lex": "on"},
        {"id": "d", "lex": "day"},
        {"lex": "period"}
      ],
      "grs": [
        {"src": "s", "tgt": "v", "label": "subject"},
        {"src": "m", "tgt": "v", "label": "time-mod"}
      ]
    }
  ]
})";

}  // namespace

TEST_CASE("generation is byte-identical per seed") {
    GrammarSpec spec = load_spec("default.json");
    SynthConfig cfg{42, 120, 0.75};
    SynthOutput a = generate(spec, cfg);
    SynthOutput b = generate(spec, cfg);
    CHECK(a.train_text == b.train_text);
    CHECK(a.test_text == b.test_text);
    SynthOutput c = generate(spec, SynthConfig{43, 120, 0.75});
    CHECK(a.train_text != c.train_text);
}

TEST_CASE("the default spec covers every label at least five times in train") {
    GrammarSpec spec = load_spec("default.json");
    SynthOutput out = generate(spec, SynthConfig{42, 250, 0.75});
    std::vector<Sentence> train = parse_corpus(out.train_text);
    CHECK(train.size() == 188);
    std::map<GrLabel, int> counts;
    for (const Sentence& s : train)
        for (const GrInstance& g : s.gold) counts[g.label] += 1;
    for (int i = 0; i < kGrLabelCount; ++i) {
        auto l = static_cast<GrLabel>(i);
        if (l == GrLabel::None) continue;
        INFO(to_string(l));
        CHECK(counts[l] >= 5);
    }
}

TEST_CASE("generated corpora parse back cleanly with verb-targeted gold") {
    GrammarSpec spec = load_spec("default.json");
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        std::vector<Sentence> corpus = generate_sentences(spec, seed, 200);
        std::string text = serialize_corpus(corpus);
        std::vector<Sentence> parsed = parse_corpus(text);
        REQUIRE(parsed.size() == corpus.size());
        for (const Sentence& s : parsed) {
            for (const GrInstance& g : s.gold)
                CHECK(s.chunks[static_cast<size_t>(g.target_chunk)].kind == ChunkKind::Verb);
            // round trip through the corpus format
        }
        CHECK(serialize_corpus(parsed) == text);
    }
}

TEST_CASE("the fly template yields L1 time modifiers at lengths one through four") {
    GrammarSpec spec = parse_grammar_spec(nlohmann::json::parse(kFlySpec));
    std::vector<Sentence> corpus = generate_sentences(spec, 11, 400);
    std::map<int, int> lengths;
    for (const Sentence& raw : corpus) {
        Sentence s = normalize_strays(raw, StrayPolicy::MbOneWordChunks);
        auto cands = generate_candidates(s, SpacePolicy::MbVerbcross);
        attach_gold(cands, s);
        for (const Candidate& c : cands)
            if (c.gold == GrLabel::TimeMod) {
                CHECK(c.rel_category == RelCategory::L1);
                lengths[c.abs_length] += 1;
            }
    }
    for (int l : {1, 2, 3, 4}) CHECK(lengths[l] > 0);
    CHECK(lengths.size() == 4);
}

TEST_CASE("modifier distances follow the configured distribution") {
    GrammarSpec spec = load_spec("default.json");
    std::vector<Sentence> corpus = generate_sentences(spec, 9, 25000);
    std::map<int, long> hist;
    long total = 0;
    for (const Sentence& s : corpus)
        for (const GrInstance& g : s.gold) {
            if (subtype_of(g.label) != GrSubtype::Modifier) continue;
            int between = std::abs(g.source_chunk - g.target_chunk) - 1;
            hist[between] += 1;
            ++total;
        }
    REQUIRE(total >= 10000);
    std::map<int, double> want = {{1, 0.40}, {2, 0.30}, {3, 0.15}, {4, 0.15}};
    for (const auto& [distance, expected] : want) {
        double got = static_cast<double>(hist[distance]) / static_cast<double>(total);
        INFO("distance " << distance);
        CHECK(std::abs(got - expected) <= 0.02);
    }
}

TEST_CASE("spec validation errors") {
    SECTION("template referencing missing vocabulary") {
        nlohmann::json j = nlohmann::json::parse(kFlySpec);
        j["templates"][0]["slots"][0]["lex"] = "nonexistent";
        CHECK_THROWS_WITH(parse_grammar_spec(j),
                          Catch::Matchers::ContainsSubstring("missing vocabulary"));
    }
    SECTION("GR target must be a verb slot") {
        nlohmann::json j = nlohmann::json::parse(kFlySpec);
        j["templates"][0]["grs"][0]["tgt"] = "d";
        CHECK_THROWS_AS(parse_grammar_spec(j), std::invalid_argument);
    }
    SECTION("GR endpoints must reference declared slots") {
        nlohmann::json j = nlohmann::json::parse(kFlySpec);
        j["templates"][0]["grs"][0]["src"] = "zz";
        CHECK_THROWS_AS(parse_grammar_spec(j), std::invalid_argument);
    }
    SECTION("distribution entries below a slot offset are rejected") {
        nlohmann::json j = nlohmann::json::parse(kFlySpec);
        j["templates"][0]["slots"][2]["offset"] = 1;
        CHECK_THROWS_AS(parse_grammar_spec(j), std::invalid_argument);
    }
    SECTION("bad train fraction") {
        GrammarSpec spec = parse_grammar_spec(nlohmann::json::parse(kFlySpec));
        CHECK_THROWS_AS(generate(spec, SynthConfig{1, 10, 0.0}), std::invalid_argument);
        CHECK_THROWS_AS(generate(spec, SynthConfig{1, 10, 1.0}), std::invalid_argument);
    }
}

TEST_CASE("train fraction splits by sentence count") {
    GrammarSpec spec = parse_grammar_spec(nlohmann::json::parse(kFlySpec));
    SynthOutput out = generate(spec, SynthConfig{5, 10, 0.75});
    CHECK(parse_corpus(out.train_text).size() == 8);
    CHECK(parse_corpus(out.test_text).size() == 2);
}
