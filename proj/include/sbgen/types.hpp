#pragma once

#include <optional>
#include <string>
#include <vector>

namespace sbgen {

// Continuous coordinates in source-frame pixels.
struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;
};

double area(const BoundingBox& box);

struct Keypoint {
    double x = 0.0;
    double y = 0.0;
    bool visible = false;
};

enum class KeypointLayout {
    WholeBody133,  // body 0-16, feet 17-22, face 23-90, hands 91-132
    Sampled93,
    Sparse17,
};

int layout_size(KeypointLayout layout);
const char* to_string(KeypointLayout layout);

struct KeypointSet {
    KeypointLayout layout = KeypointLayout::WholeBody133;
    std::vector<Keypoint> points;
};

// Area-dependent character representation. Order matters: the tier index is
// non-decreasing in bounding-box area.
enum class RepresentationTier {
    BoxOnly = 0,
    Sparse17 = 1,
    WholeBody93 = 2,
};

const char* to_string(RepresentationTier tier);
std::optional<RepresentationTier> tier_from_string(const std::string& s);

// BoxOnly below 32x32, Sparse17 on [32^2, 96^2], WholeBody93 above 96^2.
// Throws std::domain_error for non-positive areas.
RepresentationTier tier_of_area(double area_px2);

struct CharacterAnnotation {
    int character_id = 0;
    std::string mention;  // as it appears in the synopsis, e.g. "he" or "Edward"
    BoundingBox bbox;
    std::optional<KeypointSet> keypoints;
    RepresentationTier tier = RepresentationTier::BoxOnly;
};

struct FilmSetAnnotation {
    std::string category;
    BoundingBox bbox;
};

struct Shot {
    double frame_width = 0.0;
    double frame_height = 0.0;
    std::vector<CharacterAnnotation> characters;
    std::vector<FilmSetAnnotation> film_sets;
    std::string description;  // optional; empty means absent
};

enum class SynopsisKind { Condensed, ShotByShot };

struct Synopsis {
    SynopsisKind kind = SynopsisKind::Condensed;
    // One string for Condensed, one per shot for ShotByShot.
    std::vector<std::string> texts;
};

struct SummativeAnnotation {
    std::string title;
    std::string genre;
    std::string emotion;
    std::string scene;
    std::string summary;
};

struct Storyboard {
    std::string id;
    std::vector<Shot> shots;
    Synopsis synopsis;
    std::optional<SummativeAnnotation> summative;
};

struct Violation {
    std::string path;     // e.g. "shots[1].characters[0].bbox"
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

// Checks every structural invariant; violations are data, not failures.
ValidationReport validate(const Storyboard& sb);

}  // namespace sbgen
