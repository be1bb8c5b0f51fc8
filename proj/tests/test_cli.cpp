#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>

#include "grfinder/experiment.hpp"

using namespace grf;
namespace fs = std::filesystem;

namespace {

const std::string kRepo = GRF_REPO_DIR;
const std::string kCli = GRF_CLI_PATH;

struct CliResult {
    int code = -1;
    std::string output;
};

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "grfinder-cli-tests";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    fs::path log = work_dir() / ("cli" + std::to_string(counter++) + ".log");
    std::string cmd = kCli + " " + args + " > " + log.string() + " 2>&1";
    int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.output = read_file(log.string());
    return r;
}

}  // namespace

TEST_CASE("synth writes deterministic corpora") {
    fs::path out1 = work_dir() / "synth1";
    fs::path out2 = work_dir() / "synth2";
    std::string spec = kRepo + "/specs/deterministic.json";
    CHECK(run_cli("synth --spec " + spec + " --seed 9 --sentences 60 --out " + out1.string()).code == 0);
    CHECK(run_cli("synth --spec " + spec + " --seed 9 --sentences 60 --out " + out2.string()).code == 0);
    CHECK(read_file((out1 / "train.crp").string()) == read_file((out2 / "train.crp").string()));
    CHECK(read_file((out1 / "test.crp").string()) == read_file((out2 / "test.crp").string()));
    CHECK(parse_corpus(read_file((out1 / "train.crp").string())).size() == 45);
}

TEST_CASE("score of a corpus against itself prints 100 everywhere") {
    fs::path dir = work_dir() / "score";
    std::string spec = kRepo + "/specs/deterministic.json";
    REQUIRE(run_cli("synth --spec " + spec + " --seed 3 --sentences 40 --out " + dir.string()).code == 0);
    std::string gold = (dir / "test.crp").string();
    std::string report = (dir / "report.json").string();
    CliResult r = run_cli("score --gold " + gold + " --response " + gold + " --out " + report);
    CHECK(r.code == 0);
    CHECK(r.output.find("(100%)") != std::string::npos);
    nlohmann::json j = nlohmann::json::parse(read_file(report));
    CHECK(j.at("combined").at("recallPct") == 100);
    CHECK(j.at("combined").at("precisionPct") == 100);
    CHECK(j.at("combined").at("fscorePct") == 100);
}

TEST_CASE("train then apply reproduces the rule learner's training-end labels") {
    fs::path dir = work_dir() / "tbl";
    fs::create_directories(dir);
    std::string spec = kRepo + "/specs/deterministic.json";
    REQUIRE(run_cli("synth --spec " + spec + " --seed 8 --sentences 80 --out " + dir.string()).code == 0);
    std::string train_crp = (dir / "train.crp").string();
    std::string model = (dir / "model.json").string();
    std::string response = (dir / "response.crp").string();
    REQUIRE(run_cli("train --train " + train_crp + " --learner tbl --policy tr3 --out " + model).code == 0);
    REQUIRE(run_cli("apply --model " + model + " --corpus " + train_crp + " --out " + response).code == 0);

    // library-side replay on the same training corpus
    auto raw = parse_corpus(read_file(train_crp));
    RunSpec run;
    run.learner.kind = LearnerKind::Tbl;
    run.space = SpacePolicy::Tr3;
    run.stray = StrayPolicy::TrNeighborAttributes;
    run.features = default_feature_config(run.space);
    RunOutcome outcome = execute_run(run, raw, raw);
    REQUIRE(outcome.error.empty());

    auto applied = parse_corpus(read_file(response));
    REQUIRE(applied.size() == raw.size());
    for (size_t i = 0; i < applied.size(); ++i) {
        SentenceGrs got;
        for (const GrInstance& g : applied[i].gold)
            got.push_back(GrInstance{applied[i].chunks[static_cast<size_t>(g.source_chunk)].head,
                                     applied[i].chunks[static_cast<size_t>(g.target_chunk)].head,
                                     g.label});
        std::sort(got.begin(), got.end());
        SentenceGrs want = outcome.responses[i];
        std::sort(want.begin(), want.end());
        CHECK(got == want);
    }
}

TEST_CASE("compare emits a one-sided p-value") {
    fs::path dir = work_dir() / "compare";
    std::string spec = kRepo + "/specs/deterministic.json";
    REQUIRE(run_cli("synth --spec " + spec + " --seed 4 --sentences 60 --out " + dir.string()).code == 0);
    std::string gold = (dir / "test.crp").string();

    // response B: gold with all GR lines stripped
    std::string empty_crp = (dir / "empty.crp").string();
    auto corpus = parse_corpus(read_file(gold));
    for (Sentence& s : corpus) s.gold.clear();
    write_file(empty_crp, serialize_corpus(corpus));

    CliResult r = run_cli("compare --gold " + gold + " " + gold + " " + empty_crp +
                          " --metric fscore --group combined --shuffles 10000 --seed 7");
    CHECK(r.code == 0);
    CHECK(r.output.find("one-sided p = ") != std::string::npos);
    CliResult again = run_cli("compare --gold " + gold + " " + gold + " " + empty_crp +
                              " --metric fscore --group combined --shuffles 10000 --seed 7");
    CHECK(again.output == r.output);
}

TEST_CASE("rule packs apply through the cli") {
    fs::path dir = work_dir() / "rules";
    fs::create_directories(dir);
    std::string corpus = (dir / "in.crp").string();
    write_file(corpus,
               "0 My PRP$ B-NP _ _\n1 cat NN I-NP _ _\n2 ate VBD B-VP _ _\n"
               "3 the DT B-NP _ _\n4 food NN I-NP _ _\n5 . . O _ _\n");
    std::string response = (dir / "out.crp").string();
    CliResult r = run_cli("apply --rules " + kRepo + "/rules/simple6.grr --corpus " + corpus +
                          " --policy tr3 --out " + response);
    CHECK(r.code == 0);
    auto parsed = parse_corpus(read_file(response));
    REQUIRE(parsed.size() == 1);
    bool object_found = false;
    for (const GrInstance& g : parsed[0].gold)
        if (g.label == GrLabel::Object &&
            headword(parsed[0].chunks[static_cast<size_t>(g.source_chunk)], parsed[0]).form == "food")
            object_found = true;
    CHECK(object_found);
}

TEST_CASE("run accepts corpus overrides for the manifest") {
    fs::path dir = work_dir() / "override";
    std::string spec = kRepo + "/specs/deterministic.json";
    REQUIRE(run_cli("synth --spec " + spec + " --seed 6 --sentences 60 --out " + dir.string()).code == 0);
    std::string manifest = (dir / "m.json").string();
    write_file(manifest, nlohmann::json{
        {"corpus", {{"synth", {{"spec", spec}, {"seed", 1}, {"sentences", 30}}}}},
        {"outputDir", (dir / "out").string()},
        {"runs", nlohmann::json::array({{{"name", "ib1"},
                                         {"learner", "ib1"},
                                         {"spacePolicy", "mb-verbcross"}}})}}.dump());
    CliResult r = run_cli("run --manifest " + manifest + " --train " + (dir / "train.crp").string() +
                          " --test " + (dir / "test.crp").string());
    CHECK(r.code == 0);
    nlohmann::json report = nlohmann::json::parse(read_file((dir / "out" / "report.json").string()));
    CHECK(report.at("runs")[0].at("status") == "ok");
    // 60 sentences at the default 0.75 fraction leave 15 test sentences
    CHECK(report.at("runs")[0].at("scores").at("combined").at("keys").get<int>() > 0);
}

TEST_CASE("input errors exit with code one") {
    CHECK(run_cli("score --gold /nonexistent.crp --response /nonexistent.crp").code == 1);
    CHECK(run_cli("train --train /nonexistent.crp --out /tmp/x.json").code == 1);
    fs::path dir = work_dir() / "badinput";
    fs::create_directories(dir);
    std::string bad = (dir / "bad.crp").string();
    write_file(bad, "0 word\n");
    CHECK(run_cli("score --gold " + bad + " --response " + bad).code == 1);
    // apply requires exactly one of --model / --rules
    CHECK(run_cli("apply --corpus " + bad + " --out /tmp/x.crp").code == 1);
}

TEST_CASE("mismatched corpora are an input error") {
    fs::path dir = work_dir() / "mismatch";
    fs::create_directories(dir);
    std::string a = (dir / "a.crp").string();
    std::string b = (dir / "b.crp").string();
    write_file(a, "0 Cats NNS B-NP _ _\n1 eat VBP B-VP _ _\n");
    write_file(b, "0 Dogs NNS B-NP _ _\n1 eat VBP B-VP _ _\n");
    CliResult r = run_cli("score --gold " + a + " --response " + b);
    CHECK(r.code == 1);
    CHECK(r.output.find("texts differ") != std::string::npos);
}
