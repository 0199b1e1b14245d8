#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <regex>

#include "sbgen/dataset.hpp"
#include "sbgen/render.hpp"
#include "sbgen/run_config.hpp"

using namespace sbgen;

namespace {

size_t count_occurrences(const std::string& hay, const std::string& needle) {
    size_t count = 0;
    for (size_t at = hay.find(needle); at != std::string::npos; at = hay.find(needle, at + 1)) {
        ++count;
    }
    return count;
}

}  // namespace

TEST_CASE("box-only characters render as labeled rectangles without skeletons") {
    Shot shot;
    shot.frame_width = 512;
    shot.frame_height = 512;
    shot.characters.push_back(CharacterAnnotation{0, "he", BoundingBox{10, 10, 40, 40},
                                                  std::nullopt, RepresentationTier::BoxOnly});
    shot.film_sets.push_back(FilmSetAnnotation{"door", BoundingBox{100, 100, 200, 300}});
    const std::string svg = render_shot_svg(shot, RenderStyle{});
    CHECK(count_occurrences(svg, "<rect") == 3);  // background + two boxes
    CHECK(svg.find("<line") == std::string::npos);
    CHECK(svg.find("<circle") == std::string::npos);
    CHECK(svg.find(">he<") != std::string::npos);
    CHECK(svg.find(">door<") != std::string::npos);
}

TEST_CASE("the same character id keeps its color across shots") {
    SyntheticCorpusConfig cfg;
    cfg.count = 1;
    cfg.seed = 23;
    cfg.shot_count_weights = {0.0, 0.0, 1.0};  // exactly three shots
    Storyboard sb = generate_synthetic(cfg)[0];
    const std::vector<std::string> svgs = render_storyboard(sb, RenderStyle{});
    REQUIRE(svgs.size() == sb.shots.size());

    const std::string color = character_color(0);
    CHECK(character_color(0) == color);
    CHECK(character_color(1) != color);
    for (size_t si = 0; si < sb.shots.size(); ++si) {
        bool has_id0 = false;
        for (const CharacterAnnotation& ch : sb.shots[si].characters) {
            if (ch.character_id == 0) has_id0 = true;
        }
        if (has_id0) {
            CHECK(svgs[si].find(color) != std::string::npos);
        }
    }
}

TEST_CASE("invisible keypoints are omitted") {
    Shot shot;
    shot.frame_width = 512;
    shot.frame_height = 512;
    CharacterAnnotation ch;
    ch.character_id = 2;
    ch.mention = "she";
    ch.bbox = BoundingBox{100, 100, 250, 300};
    ch.tier = RepresentationTier::WholeBody93;
    KeypointSet kps;
    kps.layout = KeypointLayout::Sampled93;
    for (int i = 0; i < 93; ++i) {
        if (i < 10) {
            kps.points.push_back(Keypoint{0, 0, false});
        } else {
            kps.points.push_back(Keypoint{120.0 + i, 120.0 + i, true});
        }
    }
    ch.keypoints = kps;
    shot.characters.push_back(ch);

    const std::string svg = render_shot_svg(shot, RenderStyle{});
    CHECK(count_occurrences(svg, "<circle") == 83);
}

TEST_CASE("rendered coordinates stay inside the view box") {
    SyntheticCorpusConfig cfg;
    cfg.count = 10;
    cfg.seed = 31;
    const RenderStyle style;
    const std::regex number(R"((x|y|cx|cy|x1|y1|x2|y2)=\"(-?[0-9.]+)\")");
    for (const Storyboard& sb : generate_synthetic(cfg)) {
        for (const std::string& svg : render_storyboard(sb, style)) {
            for (std::sregex_iterator it(svg.begin(), svg.end(), number), end; it != end; ++it) {
                const double v = std::stod((*it)[2]);
                CHECK(v >= -0.01);
                CHECK(v <= style.canvas + 0.01);
            }
        }
    }
}

TEST_CASE("run config loads, validates and overrides") {
    const std::string text = R"({
      "quantizer": {"bins": 256},
      "model": {"n_layers": 3, "d_model": 96, "n_heads": 6},
      "train": {"total_iterations": 10, "seed": 4},
      "sampler": {"temperature": 0.8},
      "min_count": 2,
      "seed": 11
    })";
    const RunConfig cfg = RunConfig::from_json(text);
    CHECK(cfg.quantizer.bins == 256);
    CHECK(cfg.quantizer.canvas == doctest::Approx(512.0));  // default kept
    CHECK(cfg.model.n_layers == 3);
    CHECK(cfg.train.total_iterations == 10);
    CHECK(cfg.sampler.temperature == doctest::Approx(0.8));
    CHECK(cfg.min_count == 2);
    CHECK(cfg.seed == 11);

    // round trip through its own json form
    const RunConfig back = RunConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());

    CHECK_THROWS_AS(RunConfig::from_json("{\"quantizer\": {\"bins\": 1}}"), std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::from_json("{\"sampler\": {\"temperature\": 0}}"),
                    std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::from_json("nope"), std::invalid_argument);
}
