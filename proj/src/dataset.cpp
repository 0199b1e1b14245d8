#include "sbgen/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sbgen/util.hpp"

namespace sbgen {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json box_to_json(const BoundingBox& b) {
    return ordered_json::array({b.x_min, b.y_min, b.x_max, b.y_max});
}

BoundingBox box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) {
        throw std::runtime_error("bbox must be an array of four numbers");
    }
    return BoundingBox{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                       j[3].get<double>()};
}

KeypointLayout layout_from_string(const std::string& s) {
    if (s == "whole_body_133") return KeypointLayout::WholeBody133;
    if (s == "sampled_93") return KeypointLayout::Sampled93;
    if (s == "sparse_17") return KeypointLayout::Sparse17;
    throw std::runtime_error("unknown keypoint layout '" + s + "'");
}

}  // namespace

std::string storyboard_to_json(const Storyboard& sb) {
    ordered_json j;
    j["id"] = sb.id;
    j["synopsis"] = {
        {"kind", sb.synopsis.kind == SynopsisKind::Condensed ? "condensed" : "shot_by_shot"},
        {"texts", sb.synopsis.texts}};
    if (sb.summative.has_value()) {
        j["summative"] = {{"title", sb.summative->title},
                          {"genre", sb.summative->genre},
                          {"emotion", sb.summative->emotion},
                          {"scene", sb.summative->scene},
                          {"summary", sb.summative->summary}};
    }
    j["shots"] = ordered_json::array();
    for (const Shot& shot : sb.shots) {
        ordered_json js;
        js["width"] = shot.frame_width;
        js["height"] = shot.frame_height;
        if (!shot.description.empty()) {
            js["description"] = shot.description;
        }
        js["characters"] = ordered_json::array();
        for (const CharacterAnnotation& ch : shot.characters) {
            ordered_json jc;
            jc["id"] = ch.character_id;
            jc["mention"] = ch.mention;
            jc["bbox"] = box_to_json(ch.bbox);
            if (ch.keypoints.has_value()) {
                ordered_json pts = ordered_json::array();
                for (const Keypoint& kp : ch.keypoints->points) {
                    pts.push_back(ordered_json::array({kp.x, kp.y, kp.visible ? 1 : 0}));
                }
                jc["keypoints"] = {{"layout", to_string(ch.keypoints->layout)},
                                   {"points", std::move(pts)}};
            }
            js["characters"].push_back(std::move(jc));
        }
        js["film_sets"] = ordered_json::array();
        for (const FilmSetAnnotation& fs : shot.film_sets) {
            js["film_sets"].push_back({{"category", fs.category}, {"bbox", box_to_json(fs.bbox)}});
        }
        j["shots"].push_back(std::move(js));
    }
    return j.dump(2) + "\n";
}

Storyboard storyboard_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        Storyboard sb;
        sb.id = j.at("id").get<std::string>();

        const json& syn = j.at("synopsis");
        const std::string kind = syn.at("kind").get<std::string>();
        if (kind == "condensed") {
            sb.synopsis.kind = SynopsisKind::Condensed;
        } else if (kind == "shot_by_shot") {
            sb.synopsis.kind = SynopsisKind::ShotByShot;
        } else {
            throw std::runtime_error("unknown synopsis kind '" + kind + "'");
        }
        sb.synopsis.texts = syn.at("texts").get<std::vector<std::string>>();

        if (j.contains("summative")) {
            const json& s = j.at("summative");
            sb.summative = SummativeAnnotation{
                s.at("title").get<std::string>(), s.at("genre").get<std::string>(),
                s.at("emotion").get<std::string>(), s.at("scene").get<std::string>(),
                s.at("summary").get<std::string>()};
        }

        const json& shots = j.at("shots");
        if (!shots.is_array() || shots.empty()) {
            throw std::runtime_error("'shots' must be a non-empty array");
        }
        for (const json& js : shots) {
            Shot shot;
            shot.frame_width = js.at("width").get<double>();
            shot.frame_height = js.at("height").get<double>();
            if (js.contains("description")) {
                shot.description = js.at("description").get<std::string>();
            }
            for (const json& jc : js.at("characters")) {
                CharacterAnnotation ch;
                ch.character_id = jc.at("id").get<int>();
                ch.mention = jc.at("mention").get<std::string>();
                ch.bbox = box_from_json(jc.at("bbox"));
                if (jc.contains("keypoints")) {
                    KeypointSet kps;
                    kps.layout = layout_from_string(
                        jc.at("keypoints").at("layout").get<std::string>());
                    for (const json& jp : jc.at("keypoints").at("points")) {
                        if (!jp.is_array() || jp.size() != 3) {
                            throw std::runtime_error("keypoint must be an [x, y, v] triple");
                        }
                        kps.points.push_back(Keypoint{jp[0].get<double>(), jp[1].get<double>(),
                                                      jp[2].get<double>() != 0.0});
                    }
                    ch.keypoints = std::move(kps);
                }
                // The schema carries no tier. A reduced keypoint layout pins
                // it down directly; full 133-point annotations and bare boxes
                // fall back to the area rule.
                if (ch.keypoints && ch.keypoints->layout == KeypointLayout::Sampled93) {
                    ch.tier = RepresentationTier::WholeBody93;
                } else if (ch.keypoints && ch.keypoints->layout == KeypointLayout::Sparse17) {
                    ch.tier = RepresentationTier::Sparse17;
                } else if (ch.keypoints) {
                    const double a = area(ch.bbox);
                    ch.tier = a > 0.0 ? tier_of_area(a) : RepresentationTier::BoxOnly;
                } else {
                    ch.tier = RepresentationTier::BoxOnly;
                }
                shot.characters.push_back(std::move(ch));
            }
            for (const json& jf : js.at("film_sets")) {
                shot.film_sets.push_back(FilmSetAnnotation{jf.at("category").get<std::string>(),
                                                           box_from_json(jf.at("bbox"))});
            }
            sb.shots.push_back(std::move(shot));
        }
        return sb;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("storyboard schema error: ") + e.what());
    }
}

Storyboard load_storyboard(const std::string& path) {
    return storyboard_from_json(read_file(path));
}

void save_storyboard(const Storyboard& sb, const std::string& path) {
    atomic_write_file(path, storyboard_to_json(sb));
}

DatasetManifest DatasetManifest::read(const std::string& path) {
    DatasetManifest m;
    m.root = std::filesystem::path(path).parent_path().string();
    std::istringstream in(read_file(path));
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        const size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        line = line.substr(first);

        Entry entry;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            entry.file = line;
        } else {
            entry.file = line.substr(0, tab);
            entry.split = line.substr(tab + 1);
            if (entry.split != "train" && entry.split != "testA" && entry.split != "testB") {
                throw std::runtime_error("manifest " + path + ":" + std::to_string(line_no) +
                                         ": unknown split '" + entry.split + "'");
            }
        }
        m.entries.push_back(std::move(entry));
    }
    return m;
}

std::string DatasetManifest::to_text() const {
    std::string out;
    for (const Entry& e : entries) {
        out += e.file;
        if (!e.split.empty()) {
            out += '\t';
            out += e.split;
        }
        out += '\n';
    }
    return out;
}

std::string DatasetManifest::resolve(const Entry& entry) const {
    const std::filesystem::path p(entry.file);
    if (p.is_absolute() || root.empty()) return entry.file;
    return (std::filesystem::path(root) / p).string();
}

LoadReport load(const DatasetManifest& manifest) {
    LoadReport report;
    for (const DatasetManifest::Entry& entry : manifest.entries) {
        const std::string path = manifest.resolve(entry);
        try {
            report.storyboards.push_back(load_storyboard(path));
            report.tags.push_back(entry.split);
        } catch (const std::exception& e) {
            report.problems.push_back({path, e.what()});
        }
    }
    return report;
}

SplitResult split(const std::vector<Storyboard>& boards, const std::vector<std::string>& tags,
                  const SplitConfig& cfg) {
    if (!tags.empty() && tags.size() != boards.size()) {
        throw std::invalid_argument("split: one tag per storyboard (or none at all)");
    }
    SplitResult result;
    for (size_t i = 0; i < boards.size(); ++i) {
        const Storyboard& sb = boards[i];
        const bool condensed = sb.synopsis.kind == SynopsisKind::Condensed;
        std::string tag = tags.empty() ? std::string() : tags[i];

        if (tag == "testA" && !condensed) {
            result.warnings.push_back("storyboard '" + sb.id +
                                      "' tagged testA has a shot-by-shot synopsis; moved to testB");
            tag = "testB";
        } else if (tag == "testB" && condensed) {
            result.warnings.push_back("storyboard '" + sb.id +
                                      "' tagged testB has a condensed synopsis; moved to testA");
            tag = "testA";
        }

        if (tag.empty()) {
            Rng rng = Rng::derive(cfg.seed, i);
            const bool holdout = rng.next_real01() < cfg.holdout_fraction;
            tag = holdout ? (condensed ? "testA" : "testB") : "train";
        }

        if (tag == "train") {
            result.train.push_back(sb);
        } else if (tag == "testA") {
            result.test_a.push_back(sb);
        } else {
            result.test_b.push_back(sb);
        }
    }
    if (result.test_a.empty()) result.warnings.push_back("testA split is empty");
    if (result.test_b.empty()) result.warnings.push_back("testB split is empty");
    return result;
}

// ---------------------------------------------------------------------------
// synthetic corpus

namespace {

struct SceneSpec {
    const char* name;
    std::vector<const char*> objects;
};

const std::vector<SceneSpec>& scene_specs() {
    static const std::vector<SceneSpec> scenes = {
        {"room", {"sofa", "lamp", "table", "window", "door", "painting"}},
        {"bar", {"counter", "stool", "bottle", "glass", "stage", "piano"}},
        {"street", {"car", "building", "lamppost", "bench", "bicycle", "sign"}},
        {"beach", {"boat", "umbrella", "towel", "rock", "palm", "cooler"}},
        {"kitchen", {"stove", "pot", "knife", "plate", "fridge", "cupboard"}},
        {"office", {"desk", "chair", "computer", "shelf", "phone", "clock"}},
        {"station", {"train", "bench", "clock", "gate", "kiosk", "luggage"}},
        {"garden", {"tree", "fountain", "bench", "flowerbed", "gate", "statue"}},
    };
    return scenes;
}

const std::vector<const char*>& cast_names() {
    static const std::vector<const char*> names = {"Edward", "Anna",  "Peter", "Marla",
                                                   "Victor", "Rose",  "Jack",  "Elena",
                                                   "the boy", "the girl"};
    return names;
}

const std::vector<const char*>& genres() {
    static const std::vector<const char*> g = {"drama", "action", "comedy", "thriller", "romance"};
    return g;
}

const std::vector<const char*>& emotions() {
    static const std::vector<const char*> e = {"tense", "joyful", "somber", "fearful", "calm"};
    return e;
}

std::string sentence(Rng& rng, const std::string& a, const std::string& b,
                     const std::string& scene, const std::string& obj) {
    const bool has_b = !b.empty();
    switch (rng.next_int(0, has_b ? 5 : 3)) {
        case 0: return a + " walks into the " + scene + " and looks at the " + obj + ".";
        case 1: return a + " reaches for the " + obj + ".";
        case 2: return "the " + scene + " is quiet before " + a + " arrives.";
        case 3: return a + " turns away from the " + obj + " and leaves the " + scene + ".";
        case 4: return a + " and " + b + " are talking near the " + obj + ".";
        default: return a + " sits by the " + obj + " while " + b + " watches.";
    }
}

// Canonical standing pose in unit coordinates: body joints, feet, a face
// ellipse and two hand clusters, in the 133-point order.
const std::vector<std::pair<double, double>>& unit_pose() {
    static const std::vector<std::pair<double, double>> pose = [] {
        std::vector<std::pair<double, double>> p(133);
        const std::pair<double, double> body[17] = {
            {0.50, 0.08}, {0.46, 0.06}, {0.54, 0.06}, {0.42, 0.08}, {0.58, 0.08},
            {0.35, 0.22}, {0.65, 0.22}, {0.30, 0.38}, {0.70, 0.38}, {0.28, 0.52},
            {0.72, 0.52}, {0.40, 0.55}, {0.60, 0.55}, {0.40, 0.75}, {0.60, 0.75},
            {0.40, 0.95}, {0.60, 0.95}};
        for (int i = 0; i < 17; ++i) p[static_cast<size_t>(i)] = body[i];
        const std::pair<double, double> feet[6] = {{0.38, 0.99}, {0.35, 0.99}, {0.41, 0.97},
                                                   {0.62, 0.99}, {0.65, 0.99}, {0.59, 0.97}};
        for (int i = 0; i < 6; ++i) p[static_cast<size_t>(17 + i)] = feet[i];
        for (int i = 0; i < 68; ++i) {  // face ring
            const double angle = 2.0 * 3.141592653589793 * i / 68.0;
            p[static_cast<size_t>(23 + i)] = {0.50 + 0.055 * std::cos(angle),
                                              0.075 + 0.045 * std::sin(angle)};
        }
        for (int i = 0; i < 21; ++i) {  // hands: tight spirals at the wrists
            const double angle = 2.399963 * i;
            const double r = 0.004 + 0.016 * i / 21.0;
            p[static_cast<size_t>(91 + i)] = {0.28 + r * std::cos(angle),
                                              0.54 + r * std::sin(angle)};
            p[static_cast<size_t>(112 + i)] = {0.72 + r * std::cos(angle),
                                               0.54 + r * std::sin(angle)};
        }
        return p;
    }();
    return pose;
}

KeypointSet make_pose(Rng& rng, const BoundingBox& box) {
    KeypointSet kps;
    kps.layout = KeypointLayout::WholeBody133;
    kps.points.reserve(133);
    const double w = box.x_max - box.x_min;
    const double h = box.y_max - box.y_min;
    const auto& pose = unit_pose();
    for (int i = 0; i < 133; ++i) {
        double visible_p = 0.9;          // body and feet
        if (i >= 23 && i <= 90) visible_p = 0.7;  // face
        if (i >= 91) visible_p = 0.6;             // hands
        if (rng.next_real01() >= visible_p) {
            // Draw the jitter anyway so visibility does not perturb the stream
            // for later points.
            rng.next_real01();
            rng.next_real01();
            kps.points.push_back(Keypoint{0.0, 0.0, false});
            continue;
        }
        const double jx = (rng.next_real01() - 0.5) * 0.04;
        const double jy = (rng.next_real01() - 0.5) * 0.04;
        const double ux = std::clamp(pose[static_cast<size_t>(i)].first + jx, 0.0, 1.0);
        const double uy = std::clamp(pose[static_cast<size_t>(i)].second + jy, 0.0, 1.0);
        kps.points.push_back(Keypoint{box.x_min + ux * w, box.y_min + uy * h, true});
    }
    return kps;
}

BoundingBox place_box(Rng& rng, double w, double h, double frame_w, double frame_h) {
    w = std::min(w, frame_w);
    h = std::min(h, frame_h);
    const double x0 = rng.next_real01() * (frame_w - w);
    const double y0 = rng.next_real01() * (frame_h - h);
    return BoundingBox{x0, y0, x0 + w, y0 + h};
}

BoundingBox tier_box(Rng& rng, RepresentationTier tier, double frame_w, double frame_h) {
    double area_lo = 0.0, area_hi = 0.0, aspect_lo = 0.35, aspect_hi = 0.65;
    switch (tier) {
        case RepresentationTier::WholeBody93:
            area_lo = 9500.0;
            area_hi = 40000.0;
            break;
        case RepresentationTier::Sparse17:
            area_lo = 1100.0;
            area_hi = 9000.0;
            break;
        case RepresentationTier::BoxOnly:
            area_lo = 200.0;
            area_hi = 1000.0;
            aspect_lo = 0.4;
            aspect_hi = 1.2;
            break;
    }
    const double target = area_lo + rng.next_real01() * (area_hi - area_lo);
    const double aspect = aspect_lo + rng.next_real01() * (aspect_hi - aspect_lo);
    const double w = std::sqrt(target * aspect);
    const double h = std::sqrt(target / aspect);
    return place_box(rng, w, h, frame_w, frame_h);
}

}  // namespace

std::vector<Storyboard> generate_synthetic(const SyntheticCorpusConfig& cfg) {
    if (cfg.count <= 0) {
        throw std::invalid_argument("generate_synthetic: count must be positive");
    }
    if (!(cfg.frame_width > 0.0) || !(cfg.frame_height > 0.0)) {
        throw std::invalid_argument("generate_synthetic: frame extents must be positive");
    }
    if (cfg.shot_count_weights.empty()) {
        throw std::invalid_argument("generate_synthetic: shot_count_weights must be non-empty");
    }
    double weight_sum = 0.0;
    for (double w : cfg.shot_count_weights) {
        if (w < 0.0) throw std::invalid_argument("generate_synthetic: negative shot-count weight");
        weight_sum += w;
    }
    if (!(weight_sum > 0.0)) {
        throw std::invalid_argument("generate_synthetic: shot-count weights sum to zero");
    }

    std::vector<Storyboard> boards;
    boards.reserve(static_cast<size_t>(cfg.count));

    for (int bi = 0; bi < cfg.count; ++bi) {
        Rng rng = Rng::derive(cfg.seed, static_cast<uint64_t>(bi));
        Storyboard sb;
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "synthetic-%05d", bi);
            sb.id = buf;
        }

        const SceneSpec& scene =
            scene_specs()[static_cast<size_t>(rng.next_int(0, static_cast<int64_t>(scene_specs().size()) - 1))];

        // cast with persistent ids and distinct mentions
        std::vector<std::string> cast;
        const int cast_size = static_cast<int>(rng.next_int(1, 3));
        std::vector<int> name_order(cast_names().size());
        for (size_t i = 0; i < name_order.size(); ++i) name_order[i] = static_cast<int>(i);
        for (size_t i = name_order.size(); i > 1; --i) {
            std::swap(name_order[i - 1], name_order[static_cast<size_t>(rng.next_int(0, static_cast<int64_t>(i) - 1))]);
        }
        for (int i = 0; i < cast_size; ++i) {
            cast.push_back(cast_names()[static_cast<size_t>(name_order[static_cast<size_t>(i)])]);
        }

        // shot count from the configured distribution
        double draw = rng.next_real01() * weight_sum;
        int n_shots = 1;
        for (size_t i = 0; i < cfg.shot_count_weights.size(); ++i) {
            draw -= cfg.shot_count_weights[i];
            if (draw <= 0.0) {
                n_shots = static_cast<int>(i) + 1;
                break;
            }
            n_shots = static_cast<int>(cfg.shot_count_weights.size());
        }

        const bool keypoint_board = rng.next_real01() < cfg.keypoint_board_fraction;
        const bool shot_by_shot = rng.next_real01() < cfg.shot_by_shot_fraction;
        sb.synopsis.kind = shot_by_shot ? SynopsisKind::ShotByShot : SynopsisKind::Condensed;

        auto pick_obj = [&rng, &scene]() {
            return std::string(
                scene.objects[static_cast<size_t>(rng.next_int(0, static_cast<int64_t>(scene.objects.size()) - 1))]);
        };

        for (int si = 0; si < n_shots; ++si) {
            Shot shot;
            shot.frame_width = cfg.frame_width;
            shot.frame_height = cfg.frame_height;

            const int n_sets = static_cast<int>(rng.next_int(1, cfg.max_film_sets_per_shot));
            for (int fi = 0; fi < n_sets; ++fi) {
                const double w = 40.0 + rng.next_real01() * 280.0;
                const double h = 40.0 + rng.next_real01() * 280.0;
                shot.film_sets.push_back(
                    FilmSetAnnotation{pick_obj(), place_box(rng, w, h, cfg.frame_width, cfg.frame_height)});
            }

            const int n_chars =
                static_cast<int>(rng.next_int(1, std::min<int64_t>(cfg.max_characters_per_shot,
                                                                   static_cast<int64_t>(cast.size()))));
            for (int ci = 0; ci < n_chars; ++ci) {
                CharacterAnnotation ch;
                ch.character_id = ci;
                ch.mention = cast[static_cast<size_t>(ci)];
                RepresentationTier tier = RepresentationTier::BoxOnly;
                if (keypoint_board) {
                    const double t = rng.next_real01();
                    tier = t < 0.5   ? RepresentationTier::WholeBody93
                           : t < 0.8 ? RepresentationTier::Sparse17
                                     : RepresentationTier::BoxOnly;
                }
                ch.bbox = tier_box(rng, tier, cfg.frame_width, cfg.frame_height);
                // place_box clamps to the frame, so read the tier back off the
                // actual box to keep the area invariant intact.
                ch.tier = tier_of_area(area(ch.bbox));
                if (ch.tier != RepresentationTier::BoxOnly) {
                    ch.keypoints = make_pose(rng, ch.bbox);
                }
                shot.characters.push_back(std::move(ch));
            }

            const std::string a = cast[0];
            const std::string b = cast.size() > 1 ? cast[1] : std::string();
            const std::string text = sentence(rng, a, b, scene.name, pick_obj());
            if (shot_by_shot) {
                sb.synopsis.texts.push_back(text);
                shot.description = text;
            } else if (si == 0) {
                std::string condensed = text;
                if (rng.next_real01() < 0.5) {
                    condensed += " " + sentence(rng, a, b, scene.name, pick_obj());
                }
                sb.synopsis.texts.push_back(condensed);
            }
            sb.shots.push_back(std::move(shot));
        }

        SummativeAnnotation summ;
        summ.title = cast[0] + " in the " + scene.name;
        summ.genre = genres()[static_cast<size_t>(rng.next_int(0, static_cast<int64_t>(genres().size()) - 1))];
        summ.emotion =
            emotions()[static_cast<size_t>(rng.next_int(0, static_cast<int64_t>(emotions().size()) - 1))];
        summ.scene = scene.name;
        summ.summary = cast[0] + " spends time in the " + scene.name + ".";
        sb.summative = std::move(summ);

        boards.push_back(std::move(sb));
    }
    return boards;
}

}  // namespace sbgen
