#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sbgen/dataset.hpp"
#include "sbgen/types.hpp"
#include "sbgen/util.hpp"

using namespace sbgen;

namespace {

Storyboard small_board() {
    Storyboard sb;
    sb.id = "t";
    sb.synopsis.kind = SynopsisKind::Condensed;
    sb.synopsis.texts = {"he walks in"};
    Shot shot;
    shot.frame_width = 640.0;
    shot.frame_height = 480.0;
    shot.characters.push_back(
        CharacterAnnotation{0, "he", BoundingBox{10, 10, 30, 40}, std::nullopt,
                            RepresentationTier::BoxOnly});
    shot.film_sets.push_back(FilmSetAnnotation{"door", BoundingBox{100, 50, 200, 300}});
    sb.shots.push_back(shot);
    return sb;
}

}  // namespace

TEST_CASE("area of boxes") {
    CHECK(area(BoundingBox{0, 0, 96, 96}) == doctest::Approx(9216.0));
    CHECK(area(BoundingBox{10, 10, 10.0001, 20}) == doctest::Approx(0.001).epsilon(0.01));
    CHECK(area(BoundingBox{0, 0, 512, 512}) == doctest::Approx(262144.0));
}

TEST_CASE("tier thresholds") {
    CHECK(tier_of_area(10000.0) == RepresentationTier::WholeBody93);
    CHECK(tier_of_area(2500.0) == RepresentationTier::Sparse17);
    CHECK(tier_of_area(400.0) == RepresentationTier::BoxOnly);
    // boundaries belong to the middle tier
    CHECK(tier_of_area(32.0 * 32.0) == RepresentationTier::Sparse17);
    CHECK(tier_of_area(96.0 * 96.0) == RepresentationTier::Sparse17);
    CHECK_THROWS_AS(tier_of_area(0.0), std::domain_error);
    CHECK_THROWS_AS(tier_of_area(-5.0), std::domain_error);
}

TEST_CASE("tier is monotone in area") {
    Rng rng(7);
    double prev_area = 1e-6;
    auto tier_index = [](RepresentationTier t) { return static_cast<int>(t); };
    int prev = tier_index(tier_of_area(prev_area));
    for (int i = 0; i < 2000; ++i) {
        const double a = prev_area + rng.next_real01() * 50.0;
        const int cur = tier_index(tier_of_area(a));
        CHECK(cur >= prev);
        prev = cur;
        prev_area = a;
    }
}

TEST_CASE("well-formed storyboard validates clean") {
    const ValidationReport report = validate(small_board());
    CHECK(report.ok());
}

TEST_CASE("inverted box is reported with its path") {
    Storyboard sb = small_board();
    sb.shots[0].film_sets[0].bbox = BoundingBox{200, 50, 100, 300};  // x_min > x_max
    const ValidationReport report = validate(sb);
    REQUIRE_FALSE(report.ok());
    bool found = false;
    for (const Violation& v : report.violations) {
        if (v.path == "shots[0].film_sets[0].bbox") found = true;
    }
    CHECK(found);
}

TEST_CASE("character id must keep one mention per storyboard") {
    Storyboard sb = small_board();
    Shot second = sb.shots[0];
    second.characters[0].mention = "Edward";  // same id 0, new name
    sb.shots.push_back(second);
    const ValidationReport report = validate(sb);
    REQUIRE_FALSE(report.ok());
    bool found = false;
    for (const Violation& v : report.violations) {
        if (v.message.find("already labeled") != std::string::npos) found = true;
    }
    CHECK(found);
}

TEST_CASE("tier must match the box area") {
    Storyboard sb = small_board();
    sb.shots[0].characters[0].bbox = BoundingBox{0, 0, 200, 200};  // 40000 px^2
    const ValidationReport report = validate(sb);  // still tagged BoxOnly
    CHECK_FALSE(report.ok());
}

TEST_CASE("keypoint arity and tier compatibility") {
    Storyboard sb = small_board();
    CharacterAnnotation& ch = sb.shots[0].characters[0];
    ch.bbox = BoundingBox{0, 0, 60, 60};  // sparse tier
    ch.tier = RepresentationTier::Sparse17;
    ch.keypoints = KeypointSet{KeypointLayout::Sparse17, std::vector<Keypoint>(17)};
    CHECK(validate(sb).ok());

    ch.keypoints->points.pop_back();
    CHECK_FALSE(validate(sb).ok());

    ch.keypoints = KeypointSet{KeypointLayout::Sampled93, std::vector<Keypoint>(93)};
    CHECK_FALSE(validate(sb).ok());  // 93-point layout is not a sparse-tier shape
}

TEST_CASE("mutating a valid board is caught by validate") {
    SyntheticCorpusConfig cfg;
    cfg.count = 30;
    cfg.seed = 11;
    std::vector<Storyboard> boards = generate_synthetic(cfg);
    Rng rng(99);
    int mutated = 0;
    for (Storyboard& sb : boards) {
        REQUIRE(validate(sb).ok());
        Shot& shot = sb.shots[static_cast<size_t>(rng.next_int(0, static_cast<int64_t>(sb.shots.size()) - 1))];
        switch (rng.next_int(0, 2)) {
            case 0:
                if (!shot.characters.empty()) {
                    shot.characters[0].bbox.x_max = shot.characters[0].bbox.x_min - 1.0;
                    ++mutated;
                    CHECK_FALSE(validate(sb).ok());
                }
                break;
            case 1:
                if (!shot.film_sets.empty()) {
                    shot.film_sets[0].category.clear();
                    ++mutated;
                    CHECK_FALSE(validate(sb).ok());
                }
                break;
            default:
                shot.frame_width = -1.0;
                ++mutated;
                CHECK_FALSE(validate(sb).ok());
                break;
        }
    }
    CHECK(mutated > 10);
}
