#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "sbgen/codec.hpp"
#include "sbgen/dataset.hpp"
#include "sbgen/util.hpp"

using namespace sbgen;

namespace {

std::string temp_dir(const char* tag) {
    const auto path = std::filesystem::temp_directory_path() /
                      (std::string("sbgen_test_") + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
    return path.string();
}

}  // namespace

TEST_CASE("storyboard json round trip") {
    SyntheticCorpusConfig cfg;
    cfg.count = 20;
    cfg.seed = 77;
    for (const Storyboard& sb : generate_synthetic(cfg)) {
        const std::string text = storyboard_to_json(sb);
        const Storyboard back = storyboard_from_json(text);
        CHECK(storyboard_to_json(back) == text);
        CHECK(validate(back).ok());
        CHECK(back.id == sb.id);
        CHECK(back.shots.size() == sb.shots.size());
    }
}

TEST_CASE("schema violations carry a message") {
    CHECK_THROWS_AS(storyboard_from_json("{}"), std::runtime_error);
    CHECK_THROWS_AS(storyboard_from_json("not json"), std::runtime_error);
    // empty shots list is a schema error
    const std::string no_shots =
        R"({"id":"x","synopsis":{"kind":"condensed","texts":["t"]},"shots":[]})";
    CHECK_THROWS_AS(storyboard_from_json(no_shots), std::runtime_error);
    const std::string bad_box =
        R"({"id":"x","synopsis":{"kind":"condensed","texts":["t"]},
            "shots":[{"width":100,"height":100,"characters":[
              {"id":0,"mention":"he","bbox":[1,2,3]}],"film_sets":[]}]})";
    CHECK_THROWS_AS(storyboard_from_json(bad_box), std::runtime_error);
}

TEST_CASE("load keeps going past broken records") {
    const std::string dir = temp_dir("load");
    SyntheticCorpusConfig cfg;
    cfg.count = 4;
    cfg.seed = 5;
    const std::vector<Storyboard> boards = generate_synthetic(cfg);

    DatasetManifest manifest;
    manifest.root = dir;
    for (size_t i = 0; i < boards.size(); ++i) {
        const std::string name = "b" + std::to_string(i) + ".json";
        save_storyboard(boards[i], dir + "/" + name);
        manifest.entries.push_back({name, ""});
    }
    atomic_write_file(dir + "/broken.json", "{\"id\": 3}");
    manifest.entries.push_back({"broken.json", ""});
    manifest.entries.push_back({"missing.json", ""});

    const LoadReport report = load(manifest);
    CHECK(report.storyboards.size() == 4);
    REQUIRE(report.problems.size() == 2);
    CHECK(report.problems[0].file.find("broken.json") != std::string::npos);
    CHECK(report.problems[1].file.find("missing.json") != std::string::npos);

    // a record whose id changes mention mid-board loads fine but fails validate
    Storyboard twisted = boards[0];
    if (twisted.shots.size() < 2) twisted.shots.push_back(twisted.shots[0]);
    twisted.shots[1].characters = twisted.shots[0].characters;
    if (!twisted.shots[1].characters.empty()) {
        twisted.shots[1].characters[0].mention = "somebody else";
        if (twisted.synopsis.kind == SynopsisKind::ShotByShot) {
            twisted.synopsis.texts.resize(twisted.shots.size(), twisted.synopsis.texts.back());
        }
        save_storyboard(twisted, dir + "/twisted.json");
        const Storyboard loaded = load_storyboard(dir + "/twisted.json");
        CHECK_FALSE(validate(loaded).ok());
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("manifest text round trip") {
    DatasetManifest m;
    m.entries.push_back({"a.json", "train"});
    m.entries.push_back({"b.json", "testA"});
    m.entries.push_back({"c.json", ""});
    const std::string dir = temp_dir("manifest");
    atomic_write_file(dir + "/manifest.txt", "# comment\n" + m.to_text());
    const DatasetManifest back = DatasetManifest::read(dir + "/manifest.txt");
    REQUIRE(back.entries.size() == 3);
    CHECK(back.entries[0].split == "train");
    CHECK(back.entries[1].split == "testA");
    CHECK(back.entries[2].split.empty());
    CHECK(back.root == dir);

    atomic_write_file(dir + "/bad.txt", "a.json\tweird\n");
    CHECK_THROWS_AS(DatasetManifest::read(dir + "/bad.txt"), std::runtime_error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("split routes by synopsis kind") {
    SyntheticCorpusConfig cfg;
    cfg.count = 200;
    cfg.seed = 1;
    cfg.shot_by_shot_fraction = 0.5;
    const std::vector<Storyboard> boards = generate_synthetic(cfg);

    SplitConfig scfg;
    scfg.holdout_fraction = 0.2;
    scfg.seed = 9;
    const SplitResult r = split(boards, {}, scfg);
    CHECK(r.train.size() + r.test_a.size() + r.test_b.size() == boards.size());
    for (const Storyboard& sb : r.test_a) CHECK(sb.synopsis.kind == SynopsisKind::Condensed);
    for (const Storyboard& sb : r.test_b) CHECK(sb.synopsis.kind == SynopsisKind::ShotByShot);
    CHECK(r.test_a.size() > 5);
    CHECK(r.test_b.size() > 5);

    // deterministic under the same seed
    const SplitResult again = split(boards, {}, scfg);
    CHECK(again.train.size() == r.train.size());
    CHECK(again.test_a.size() == r.test_a.size());

    // explicit tags win; a mismatched tag moves with a warning
    std::vector<std::string> tags(boards.size(), "train");
    tags[0] = boards[0].synopsis.kind == SynopsisKind::Condensed ? "testB" : "testA";
    const SplitResult forced = split(boards, tags, scfg);
    CHECK(forced.train.size() == boards.size() - 1);
    bool moved_warning = false;
    for (const std::string& w : forced.warnings) {
        if (w.find("moved to") != std::string::npos) moved_warning = true;
    }
    CHECK(moved_warning);
}

TEST_CASE("condensed-only corpus leaves testB empty with a warning") {
    SyntheticCorpusConfig cfg;
    cfg.count = 50;
    cfg.seed = 2;
    cfg.shot_by_shot_fraction = 0.0;
    const std::vector<Storyboard> boards = generate_synthetic(cfg);
    SplitConfig scfg;
    scfg.holdout_fraction = 0.1;
    const SplitResult r = split(boards, {}, scfg);
    CHECK(r.test_b.empty());
    bool warned = false;
    for (const std::string& w : r.warnings) {
        if (w.find("testB") != std::string::npos) warned = true;
    }
    CHECK(warned);
}

TEST_CASE("synthetic corpus is valid, deterministic and tier-complete") {
    SyntheticCorpusConfig cfg;
    cfg.count = 100;
    cfg.seed = 0;
    const std::vector<Storyboard> a = generate_synthetic(cfg);
    const std::vector<Storyboard> b = generate_synthetic(cfg);
    REQUIRE(a.size() == 100);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(validate(a[i]).ok());
        CHECK(storyboard_to_json(a[i]) == storyboard_to_json(b[i]));
    }

    std::set<RepresentationTier> tiers;
    std::set<SynopsisKind> kinds;
    for (const Storyboard& sb : a) {
        kinds.insert(sb.synopsis.kind);
        for (const Shot& shot : sb.shots) {
            for (const CharacterAnnotation& ch : shot.characters) tiers.insert(ch.tier);
        }
    }
    CHECK(tiers.size() == 3);
    CHECK(kinds.size() == 2);
}

TEST_CASE("shot counts follow the configured distribution") {
    SyntheticCorpusConfig cfg;
    cfg.count = 2000;
    cfg.seed = 13;
    cfg.shot_count_weights = {0.25, 0.5, 0.25};
    const std::vector<Storyboard> boards = generate_synthetic(cfg);
    long counts[3] = {0, 0, 0};
    for (const Storyboard& sb : boards) {
        REQUIRE(sb.shots.size() >= 1);
        REQUIRE(sb.shots.size() <= 3);
        ++counts[sb.shots.size() - 1];
    }
    // chi-square against the configured weights, 2 dof; 13.8 ~ p = 0.001
    const double expected[3] = {500.0, 1000.0, 500.0};
    double chi2 = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double d = counts[i] - expected[i];
        chi2 += d * d / expected[i];
    }
    CHECK(chi2 < 13.8);
}
