#include "sbgen/types.hpp"

#include <map>
#include <sstream>
#include <stdexcept>

namespace sbgen {

double area(const BoundingBox& box) {
    return (box.x_max - box.x_min) * (box.y_max - box.y_min);
}

int layout_size(KeypointLayout layout) {
    switch (layout) {
        case KeypointLayout::WholeBody133: return 133;
        case KeypointLayout::Sampled93: return 93;
        case KeypointLayout::Sparse17: return 17;
    }
    return 0;
}

const char* to_string(KeypointLayout layout) {
    switch (layout) {
        case KeypointLayout::WholeBody133: return "whole_body_133";
        case KeypointLayout::Sampled93: return "sampled_93";
        case KeypointLayout::Sparse17: return "sparse_17";
    }
    return "?";
}

const char* to_string(RepresentationTier tier) {
    switch (tier) {
        case RepresentationTier::BoxOnly: return "box_only";
        case RepresentationTier::Sparse17: return "sparse_17";
        case RepresentationTier::WholeBody93: return "whole_body_93";
    }
    return "?";
}

std::optional<RepresentationTier> tier_from_string(const std::string& s) {
    if (s == "box_only") return RepresentationTier::BoxOnly;
    if (s == "sparse_17") return RepresentationTier::Sparse17;
    if (s == "whole_body_93") return RepresentationTier::WholeBody93;
    return std::nullopt;
}

RepresentationTier tier_of_area(double area_px2) {
    if (!(area_px2 > 0.0)) {
        throw std::domain_error("tier_of_area: area must be positive");
    }
    if (area_px2 > 96.0 * 96.0) return RepresentationTier::WholeBody93;
    if (area_px2 >= 32.0 * 32.0) return RepresentationTier::Sparse17;
    return RepresentationTier::BoxOnly;
}

namespace {

void check_box(const BoundingBox& box, double w, double h, const std::string& path,
               std::vector<Violation>& out) {
    if (!(box.x_min < box.x_max)) {
        out.push_back({path, "x_min must be < x_max"});
    }
    if (!(box.y_min < box.y_max)) {
        out.push_back({path, "y_min must be < y_max"});
    }
    if (box.x_min < 0.0 || box.y_min < 0.0) {
        out.push_back({path, "coordinates must be >= 0"});
    }
    if (box.x_max > w || box.y_max > h) {
        out.push_back({path, "coordinates must be within the frame extent"});
    }
}

bool layout_matches_tier(KeypointLayout layout, RepresentationTier tier) {
    if (tier == RepresentationTier::WholeBody93) {
        return layout == KeypointLayout::WholeBody133 || layout == KeypointLayout::Sampled93;
    }
    if (tier == RepresentationTier::Sparse17) {
        return layout == KeypointLayout::WholeBody133 || layout == KeypointLayout::Sparse17;
    }
    return false;
}

}  // namespace

ValidationReport validate(const Storyboard& sb) {
    ValidationReport report;
    auto& out = report.violations;

    if (sb.shots.empty()) {
        out.push_back({"shots", "storyboard must contain at least one shot"});
    }

    if (sb.synopsis.kind == SynopsisKind::Condensed) {
        if (sb.synopsis.texts.size() != 1) {
            out.push_back({"synopsis.texts", "condensed synopsis must hold exactly one text"});
        }
    } else {
        if (sb.synopsis.texts.size() != sb.shots.size()) {
            std::ostringstream msg;
            msg << "shot-by-shot synopsis has " << sb.synopsis.texts.size()
                << " texts for " << sb.shots.size() << " shots";
            out.push_back({"synopsis.texts", msg.str()});
        }
    }

    // character_id -> first mention seen, for per-storyboard ID consistency
    std::map<int, std::pair<std::string, std::string>> id_mentions;

    for (size_t si = 0; si < sb.shots.size(); ++si) {
        const Shot& shot = sb.shots[si];
        const std::string shot_path = "shots[" + std::to_string(si) + "]";

        if (!(shot.frame_width > 0.0) || !(shot.frame_height > 0.0)) {
            out.push_back({shot_path, "frame extents must be positive"});
            continue;
        }

        for (size_t ci = 0; ci < shot.characters.size(); ++ci) {
            const CharacterAnnotation& ch = shot.characters[ci];
            const std::string path = shot_path + ".characters[" + std::to_string(ci) + "]";

            check_box(ch.bbox, shot.frame_width, shot.frame_height, path + ".bbox", out);

            if (ch.character_id < 0) {
                out.push_back({path + ".character_id", "character_id must be non-negative"});
            }

            const double a = area(ch.bbox);
            if (a > 0.0 && tier_of_area(a) != ch.tier) {
                out.push_back({path + ".tier",
                               std::string("tier must match the bounding-box area tier (expected ") +
                                   to_string(tier_of_area(a)) + ")"});
            }

            if (ch.tier == RepresentationTier::BoxOnly) {
                if (ch.keypoints.has_value()) {
                    out.push_back({path + ".keypoints", "box-only characters must not carry keypoints"});
                }
            } else if (!ch.keypoints.has_value()) {
                out.push_back({path + ".keypoints", "keypoint tiers require a keypoint set"});
            } else {
                const KeypointSet& kps = *ch.keypoints;
                if (static_cast<int>(kps.points.size()) != layout_size(kps.layout)) {
                    out.push_back({path + ".keypoints.points", "point count must match the layout"});
                }
                if (!layout_matches_tier(kps.layout, ch.tier)) {
                    out.push_back({path + ".keypoints.layout", "layout is incompatible with the tier"});
                }
                for (size_t ki = 0; ki < kps.points.size(); ++ki) {
                    const Keypoint& kp = kps.points[ki];
                    if (kp.visible &&
                        (kp.x < 0.0 || kp.y < 0.0 || kp.x > shot.frame_width || kp.y > shot.frame_height)) {
                        out.push_back({path + ".keypoints.points[" + std::to_string(ki) + "]",
                                       "visible keypoint lies outside the frame extent"});
                    }
                }
            }

            auto it = id_mentions.find(ch.character_id);
            if (it == id_mentions.end()) {
                id_mentions.emplace(ch.character_id, std::make_pair(ch.mention, path));
            } else if (it->second.first != ch.mention) {
                out.push_back({path + ".mention",
                               "character_id " + std::to_string(ch.character_id) + " already labeled '" +
                                   it->second.first + "' at " + it->second.second});
            }
        }

        for (size_t fi = 0; fi < shot.film_sets.size(); ++fi) {
            const FilmSetAnnotation& fs = shot.film_sets[fi];
            const std::string path = shot_path + ".film_sets[" + std::to_string(fi) + "]";
            if (fs.category.empty()) {
                out.push_back({path + ".category", "category must be non-empty"});
            }
            check_box(fs.bbox, shot.frame_width, shot.frame_height, path + ".bbox", out);
        }
    }

    return report;
}

}  // namespace sbgen
