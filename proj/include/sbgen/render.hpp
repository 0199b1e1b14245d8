#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sbgen/codec.hpp"
#include "sbgen/types.hpp"

namespace sbgen {

struct RenderStyle {
    double canvas = 512.0;
    double stroke_width = 2.0;
    double keypoint_radius = 2.5;
    // Index sets mapping the reduced layouts back onto the 133-point space,
    // editable together with the serializer's sets.
    std::vector<int> sampled_indices = default_keypoint_indices_93();
    std::vector<int> sparse_indices = default_sparse_indices_17();
};

// Skeleton edge table over the 133-point layout: body limbs, feet and the
// wrist-to-hand links. Edges are drawn only when both endpoints are present
// in the character's layout and visible.
const std::vector<std::pair<int, int>>& skeleton_edges_133();

// Stable per-character color, keyed by id so the same character keeps its
// color across shots.
std::string character_color(int character_id);

std::string render_shot_svg(const Shot& shot, const RenderStyle& style);

// One SVG document per shot, in shot order.
std::vector<std::string> render_storyboard(const Storyboard& sb, const RenderStyle& style);

}  // namespace sbgen
