#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "grfinder/candidates.hpp"
#include "grfinder/corpus.hpp"

using namespace grf;

namespace {

const char* kBowlSentence =
    "0 Yesterday NN B-ADVP _ _\n"
    "1 , , O _ _\n"
    "2 my PRP$ B-NP _ _\n"
    "3 cat NN I-NP _ _\n"
    "4 ate VBD B-VP _ _\n"
    "5 the DT B-NP _ _\n"
    "6 food NN I-NP _ _\n"
    "7 in IN B-PP _ _\n"
    "8 the DT B-NP _ _\n"
    "9 bowl NN I-NP _ _\n"
    "10 . . O _ _\n"
    "#GR 3 4 subject\n"
    "#GR 6 4 object\n"
    "#GR 0 4 time-mod\n"
    "#GR 7 6 location-mod\n";

const char* kFlyShort =
    "0 I PRP B-NP _ _\n"
    "1 fly VBP B-VP _ _\n"
    "2 on IN B-PP _ _\n"
    "3 Tuesday NNP B-NP _ _\n"
    "4 . . O _ _\n"
    "#GR 2 1 time-mod\n";

const char* kFlyLong =
    "0 I PRP B-NP _ _\n"
    "1 fly VBP B-VP _ _\n"
    "2 home NN B-NP _ _\n"
    "3 from IN B-PP _ _\n"
    "4 here RB B-ADVP _ _\n"
    "5 on IN B-PP _ _\n"
    "6 Tuesday NNP B-NP _ _\n"
    "7 . . O _ _\n"
    "#GR 5 1 time-mod\n";

Sentence mb_sentence(const char* text) {
    return normalize_strays(parse_corpus(text)[0], StrayPolicy::MbOneWordChunks);
}

Sentence tr_sentence(const char* text) {
    return normalize_strays(parse_corpus(text)[0], StrayPolicy::TrNeighborAttributes);
}

int chunk_with_head(const Sentence& s, const std::string& form) {
    for (const Chunk& c : s.chunks)
        if (headword(c, s).form == form) return c.id;
    FAIL("no chunk headed by " + form);
    return -1;
}

// Independent enumeration used as an oracle: re-derives admission from the
// policy definitions over raw pair descriptors.
std::set<std::pair<int, int>> naive_candidates(const Sentence& s, SpacePolicy policy) {
    std::set<std::pair<int, int>> out;
    int n = static_cast<int>(s.chunks.size());
    for (int src = 0; src < n; ++src)
        for (int tgt = 0; tgt < n; ++tgt) {
            if (src == tgt || s.chunks[static_cast<size_t>(tgt)].kind != ChunkKind::Verb) continue;
            int verbs = 0;
            for (int i = std::min(src, tgt) + 1; i < std::max(src, tgt); ++i)
                if (s.chunks[static_cast<size_t>(i)].kind == ChunkKind::Verb) ++verbs;
            int len = std::abs(src - tgt);
            bool left = tgt < src;
            bool ok = false;
            switch (policy) {
                case SpacePolicy::Tr3: ok = len <= 3; break;
                case SpacePolicy::TrUnbounded: ok = true; break;
                case SpacePolicy::MbVerbcross: ok = left ? verbs == 0 : verbs <= 1; break;
                case SpacePolicy::MbZerocross: ok = verbs == 0; break;
            }
            if (ok) out.insert({src, tgt});
        }
    return out;
}

}  // namespace

TEST_CASE("mb-verbcross admits every non-verb chunk of the bowl sentence") {
    Sentence s = mb_sentence(kBowlSentence);
    REQUIRE(s.chunks.size() == 8);
    auto cands = generate_candidates(s, SpacePolicy::MbVerbcross);
    CHECK(cands.size() == 7);
    std::set<int> sources;
    for (const Candidate& c : cands) {
        sources.insert(c.source_chunk);
        CHECK(s.chunks[static_cast<size_t>(c.target_chunk)].kind == ChunkKind::Verb);
    }
    CHECK(sources.size() == 7);
    CHECK(sources.count(chunk_with_head(s, ",")) == 1);
    CHECK(sources.count(chunk_with_head(s, ".")) == 1);
}

TEST_CASE("tr3 bounds candidates at three chunks after stray absorption") {
    Sentence s = tr_sentence(kBowlSentence);
    REQUIRE(s.chunks.size() == 6);
    auto cands = generate_candidates(s, SpacePolicy::Tr3);
    REQUIRE(cands.size() == 5);
    int yesterday = chunk_with_head(s, "Yesterday");
    bool found = false;
    for (const Candidate& c : cands)
        if (c.source_chunk == yesterday) {
            found = true;
            CHECK(c.abs_length == 2);
            CHECK(c.direction == Direction::Right);
        }
    CHECK(found);
    // the period was absorbed as a stray attribute
    CHECK(s.chunks.back().right_stray == std::vector<std::string>{"."});
}

TEST_CASE("a sentence without verb chunks yields no candidates") {
    Sentence s = mb_sentence("0 cats NNS B-NP _ _\n1 here RB B-ADVP _ _\n");
    CHECK(generate_candidates(s, SpacePolicy::MbVerbcross).empty());
    CHECK(generate_candidates(s, SpacePolicy::TrUnbounded).empty());
}

TEST_CASE("crossing counts on the fly sentences") {
    SECTION("adjacent modifier") {
        Sentence s = mb_sentence(kFlyShort);
        auto [verbs, commas] = crossing_counts(s, chunk_with_head(s, "on"), chunk_with_head(s, "fly"));
        CHECK(verbs == 0);
        CHECK(commas == 0);
    }
    SECTION("three chunks separating, still zero crossings") {
        Sentence s = mb_sentence(kFlyLong);
        int on = chunk_with_head(s, "on");
        int fly = chunk_with_head(s, "fly");
        auto [verbs, commas] = crossing_counts(s, on, fly);
        CHECK(verbs == 0);
        CHECK(commas == 0);
        CHECK(on - fly == 4);  // absLength 4 under mb chunking
    }
    SECTION("adjacent chunks cross nothing") {
        Sentence s = mb_sentence("0 Cats NNS B-NP _ _\n1 eat VBP B-VP _ _\n");
        CHECK(crossing_counts(s, 0, 1) == std::pair<int, int>{0, 0});
    }
    SECTION("symmetry in the chunk arguments") {
        Sentence s = mb_sentence(kFlyLong);
        for (int a = 0; a < static_cast<int>(s.chunks.size()); ++a)
            for (int b = 0; b < static_cast<int>(s.chunks.size()); ++b)
                CHECK(crossing_counts(s, a, b) == crossing_counts(s, b, a));
    }
    SECTION("comma strays strictly between are counted") {
        Sentence s = mb_sentence(
            "0 Yesterday NN B-ADVP _ _\n1 , , O _ _\n2 cats NNS B-NP _ _\n3 eat VBP B-VP _ _\n");
        CHECK(crossing_counts(s, 0, 3) == std::pair<int, int>{0, 1});
    }
}

TEST_CASE("relative category is a function of direction and verbs crossed") {
    Sentence s = mb_sentence(kFlyShort);
    auto cands = generate_candidates(s, SpacePolicy::MbVerbcross);
    int on = chunk_with_head(s, "on");
    for (const Candidate& c : cands)
        if (c.source_chunk == on) {
            CHECK(c.direction == Direction::Left);
            CHECK(c.rel_category == RelCategory::L1);
        }
    CHECK(relative_category(Direction::Right, 1) == RelCategory::R2);
    CHECK(relative_category(Direction::Left, 2) == RelCategory::Other);
    // exhaustive over the table
    for (int vc = 0; vc <= 3; ++vc) {
        CHECK(relative_category(Direction::Left, vc) ==
              (vc == 0 ? RelCategory::L1 : RelCategory::Other));
        CHECK(relative_category(Direction::Right, vc) ==
              (vc == 0   ? RelCategory::R1
               : vc == 1 ? RelCategory::R2
                         : RelCategory::Other));
    }
}

TEST_CASE("candidate enumeration matches a naive oracle on random sentences") {
    std::mt19937_64 rng(11);
    const char* bios[] = {"B-NP", "I-NP", "B-VP", "B-PP", "B-ADVP", "O"};
    for (int iter = 0; iter < 200; ++iter) {
        std::string text;
        int tokens = 1 + static_cast<int>(rng() % 14);
        for (int i = 0; i < tokens; ++i)
            text += std::to_string(i) + " w" + std::to_string(rng() % 9) + " T " +
                    bios[rng() % 6] + " _ _\n";
        Sentence raw = parse_corpus(text)[0];
        for (SpacePolicy policy : {SpacePolicy::Tr3, SpacePolicy::TrUnbounded,
                                   SpacePolicy::MbVerbcross, SpacePolicy::MbZerocross}) {
            Sentence s = normalize_strays(raw, required_stray_policy(policy));
            auto got = generate_candidates(s, policy);
            std::set<std::pair<int, int>> pairs;
            int last_source = -1;
            for (const Candidate& c : got) {
                pairs.insert({c.source_chunk, c.target_chunk});
                CHECK(c.source_chunk != c.target_chunk);
                CHECK(c.abs_length >= 1);
                CHECK(c.rel_category == relative_category(c.direction, c.verbs_crossed));
                CHECK(c.source_chunk >= last_source);  // deterministic order
                last_source = c.source_chunk;
            }
            CHECK(pairs == naive_candidates(s, policy));
        }
        // policy monotonicity
        Sentence tr = normalize_strays(raw, StrayPolicy::TrNeighborAttributes);
        Sentence mb = normalize_strays(raw, StrayPolicy::MbOneWordChunks);
        auto subset = [](const std::set<std::pair<int, int>>& a,
                         const std::set<std::pair<int, int>>& b) {
            for (const auto& p : a)
                if (!b.count(p)) return false;
            return true;
        };
        CHECK(subset(naive_candidates(tr, SpacePolicy::Tr3),
                     naive_candidates(tr, SpacePolicy::TrUnbounded)));
        CHECK(subset(naive_candidates(mb, SpacePolicy::MbZerocross),
                     naive_candidates(mb, SpacePolicy::MbVerbcross)));
    }
}

TEST_CASE("verb chunk property heuristics") {
    auto props = [](const char* text) {
        Sentence s = parse_corpus(text)[0];
        return estimate_verb_properties(s.chunks[0], s);
    };
    CHECK(props("0 to TO B-VP _ _\n1 eat VB I-VP _ _\n") == std::set<std::string>{"infinitive"});
    CHECK(props("0 was VBD B-VP _ _\n1 eaten VBN I-VP _ _\n") == std::set<std::string>{"passive"});
    CHECK(props("0 ate VBD B-VP _ _\n").empty());
    CHECK(props("0 eating VBG B-VP _ _\n") ==
          std::set<std::string>{"unconjugated-present-participle"});
    CHECK(props("0 is VBZ B-VP _ _\n1 eating VBG I-VP _ _\n").empty());
    CHECK(props("0 got VBD B-VP _ _\n1 eaten VBN I-VP _ _\n") == std::set<std::string>{"passive"});
}

TEST_CASE("mb window features on the two-token sentence") {
    Sentence s = mb_sentence("0 Cats NNS B-NP _ _\n1 eat VBP B-VP _ _\n#GR 0 1 subject\n");
    auto cands = generate_candidates(s, SpacePolicy::MbVerbcross);
    attach_gold(cands, s);
    REQUIRE(cands.size() == 1);
    FeatureConfig cfg;
    cfg.window = WindowKind::MbWindow;
    cfg.families = {"chunk-kind", "head-form", "head-pos"};
    cfg.geometry = GeometryMode::Both;
    FeatureVector vec = extract_features(cands[0], s, cfg);
    auto names = position_names(cfg);
    REQUIRE(vec.values.size() == names.size());
    std::map<std::string, std::string> by_name;
    for (size_t i = 0; i < names.size(); ++i) by_name[names[i]] = vec.values[i].atom;
    CHECK(by_name.at("src-2.chunk-kind") == "none");
    CHECK(by_name.at("src-1.chunk-kind") == "none");
    CHECK(by_name.at("src.chunk-kind") == "noun");
    CHECK(by_name.at("src.head-form") == "Cats");
    CHECK(by_name.at("src.head-pos") == "NNS");
    CHECK(by_name.at("tgt.chunk-kind") == "verb");
    CHECK(by_name.at("tgt.head-form") == "eat");
    CHECK(by_name.at("tgt.head-pos") == "VBP");
    // source+1 is the target chunk itself
    CHECK(by_name.at("src+1.chunk-kind") == "verb");
    CHECK(by_name.at("src+1.head-form") == "eat");
    CHECK(by_name.at("src+1.head-pos") == "VBP");
    CHECK(vec.cls == GrLabel::Subject);
}

TEST_CASE("tr window between-slots are empty for adjacent pairs") {
    Sentence s = tr_sentence("0 Cats NNS B-NP _ _\n1 eat VBP B-VP _ _\n");
    auto cands = generate_candidates(s, SpacePolicy::Tr3);
    REQUIRE(cands.size() == 1);
    FeatureConfig cfg;
    cfg.window = WindowKind::TrWindow;
    cfg.families = {"chunk-kind"};
    cfg.geometry = GeometryMode::Absolute;
    FeatureVector vec = extract_features(cands[0], s, cfg);
    auto names = position_names(cfg);
    std::map<std::string, std::string> by_name;
    for (size_t i = 0; i < names.size(); ++i) by_name[names[i]] = vec.values[i].atom;
    CHECK(by_name.at("btw1.chunk-kind") == "none");
    CHECK(by_name.at("btw2.chunk-kind") == "none");
    CHECK(by_name.at("geom.abs-category") == "right-1");
}

TEST_CASE("between-slots list chunks nearest to the source first") {
    Sentence s = tr_sentence(kFlyLong);
    auto cands = generate_candidates(s, SpacePolicy::TrUnbounded);
    int on = chunk_with_head(s, "on");
    FeatureConfig cfg;
    cfg.window = WindowKind::TrWindow;
    cfg.families = {"head-form"};
    bool checked = false;
    for (const Candidate& c : cands)
        if (c.source_chunk == on &&
            headword(s.chunks[static_cast<size_t>(c.target_chunk)], s).form == "fly") {
            FeatureVector vec = extract_features(c, s, cfg);
            auto names = position_names(cfg);
            std::map<std::string, std::string> by_name;
            for (size_t i = 0; i < names.size(); ++i) by_name[names[i]] = vec.values[i].atom;
            CHECK(by_name.at("btw1.head-form") == "here");
            CHECK(by_name.at("btw2.head-form") == "from");
            checked = true;
        }
    CHECK(checked);
}

TEST_CASE("relative geometry alone ends the vector with the category") {
    Sentence s = mb_sentence(kFlyShort);
    auto cands = generate_candidates(s, SpacePolicy::MbVerbcross);
    int on = chunk_with_head(s, "on");
    FeatureConfig cfg;
    cfg.families = {"chunk-kind"};
    cfg.geometry = GeometryMode::Relative;
    bool checked = false;
    for (const Candidate& c : cands)
        if (c.source_chunk == on) {
            FeatureVector vec = extract_features(c, s, cfg);
            CHECK(position_names(cfg).back() == "geom.rel-category");
            CHECK(vec.values.back().atom == "L1");
            checked = true;
        }
    CHECK(checked);
}

TEST_CASE("feature vectors under one config share arity") {
    std::mt19937_64 rng(23);
    const char* bios[] = {"B-NP", "I-NP", "B-VP", "B-PP", "O"};
    FeatureConfig cfg;
    cfg.window = WindowKind::TrWindow;
    cfg.families = {"chunk-kind", "head-form", "stray-forms", "verb-properties"};
    cfg.emit_verbs_crossed = true;
    cfg.emit_commas_crossed = true;
    size_t arity = position_names(cfg).size();
    for (int iter = 0; iter < 40; ++iter) {
        std::string text;
        int tokens = 1 + static_cast<int>(rng() % 10);
        for (int i = 0; i < tokens; ++i)
            text += std::to_string(i) + " w" + std::to_string(rng() % 9) + " T " +
                    bios[rng() % 5] + " _ _\n";
        Sentence s = tr_sentence(text.c_str());
        for (const Candidate& c : generate_candidates(s, SpacePolicy::TrUnbounded))
            CHECK(extract_features(c, s, cfg).values.size() == arity);
    }
}

TEST_CASE("aux annotations surface through their families") {
    Sentence s = mb_sentence(
        "0 Paris NNP B-NP _ ne=location,attach=verb\n"
        "1 fell VBD B-VP _ _\n");
    auto cands = generate_candidates(s, SpacePolicy::MbVerbcross);
    REQUIRE(cands.size() == 1);
    FeatureConfig cfg;
    cfg.families = {"aux:ne", "attachment-estimate", "aux:stem"};
    cfg.geometry = GeometryMode::Relative;
    FeatureVector vec = extract_features(cands[0], s, cfg);
    auto names = position_names(cfg);
    std::map<std::string, std::string> by_name;
    for (size_t i = 0; i < names.size(); ++i) by_name[names[i]] = vec.values[i].atom;
    CHECK(by_name.at("src.aux:ne") == "location");
    CHECK(by_name.at("src.attachment-estimate") == "verb");
    CHECK(by_name.at("src.aux:stem") == "none");  // unannotated family
    CHECK(by_name.at("tgt.aux:ne") == "none");
}

TEST_CASE("stray forms surface as a set-valued feature") {
    Sentence s = tr_sentence(kBowlSentence);
    auto cands = generate_candidates(s, SpacePolicy::Tr3);
    int yesterday = chunk_with_head(s, "Yesterday");
    FeatureConfig cfg;
    cfg.window = WindowKind::TrWindow;
    cfg.families = {"stray-forms"};
    cfg.geometry = GeometryMode::Relative;
    bool checked = false;
    for (const Candidate& c : cands)
        if (c.source_chunk == yesterday) {
            FeatureVector vec = extract_features(c, s, cfg);
            auto names = position_names(cfg);
            for (size_t i = 0; i < names.size(); ++i)
                if (names[i] == "src.stray-forms") {
                    CHECK(vec.values[i].is_set);
                    CHECK(vec.values[i].contains(","));
                    checked = true;
                }
        }
    CHECK(checked);
}
