#include "sbgen/render.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sbgen {

const std::vector<std::pair<int, int>>& skeleton_edges_133() {
    static const std::vector<std::pair<int, int>> edges = {
        // head
        {0, 1}, {0, 2}, {1, 3}, {2, 4},
        // torso and arms
        {5, 6}, {5, 7}, {7, 9}, {6, 8}, {8, 10}, {5, 11}, {6, 12}, {11, 12},
        // legs
        {11, 13}, {13, 15}, {12, 14}, {14, 16},
        // feet
        {15, 19}, {19, 17}, {19, 18}, {16, 22}, {22, 20}, {22, 21},
        // wrists to hand roots
        {9, 91}, {10, 112},
    };
    return edges;
}

std::string character_color(int character_id) {
    const int hue = ((character_id % 360) * 47) % 360;
    std::ostringstream out;
    out << "hsl(" << (hue < 0 ? hue + 360 : hue) << ", 65%, 45%)";
    return out.str();
}

namespace {

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(2);
    out << std::fixed << v;
    return out.str();
}

struct Mapper {
    double sx, sy, canvas;
    double x(double v) const { return std::clamp(v * sx, 0.0, canvas); }
    double y(double v) const { return std::clamp(v * sy, 0.0, canvas); }
};

void draw_box(std::ostringstream& out, const Mapper& map, const BoundingBox& b,
              const std::string& stroke, const std::string& dash, double stroke_width,
              const std::string& label) {
    const double x0 = map.x(b.x_min), y0 = map.y(b.y_min);
    const double x1 = map.x(b.x_max), y1 = map.y(b.y_max);
    out << "  <rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\"" << fmt(x1 - x0)
        << "\" height=\"" << fmt(y1 - y0) << "\" fill=\"none\" stroke=\"" << stroke
        << "\" stroke-width=\"" << fmt(stroke_width) << "\"";
    if (!dash.empty()) {
        out << " stroke-dasharray=\"" << dash << "\"";
    }
    out << "/>\n";
    if (!label.empty()) {
        out << "  <text x=\"" << fmt(x0 + 2.0) << "\" y=\"" << fmt(std::max(10.0, y0 - 3.0))
            << "\" font-size=\"11\" font-family=\"sans-serif\" fill=\"" << stroke << "\">"
            << escape_xml(label) << "</text>\n";
    }
}

// index within the 133-point space -> position in the character's point list
std::vector<int> position_of_133(const KeypointSet& kps, const RenderStyle& style) {
    std::vector<int> pos(133, -1);
    const std::vector<int>* indices = nullptr;
    switch (kps.layout) {
        case KeypointLayout::WholeBody133: {
            for (int i = 0; i < 133; ++i) pos[static_cast<size_t>(i)] = i;
            return pos;
        }
        case KeypointLayout::Sampled93: indices = &style.sampled_indices; break;
        case KeypointLayout::Sparse17: indices = &style.sparse_indices; break;
    }
    for (size_t i = 0; i < indices->size() && i < kps.points.size(); ++i) {
        const int idx = (*indices)[i];
        if (idx >= 0 && idx < 133) pos[static_cast<size_t>(idx)] = static_cast<int>(i);
    }
    return pos;
}

void draw_keypoints(std::ostringstream& out, const Mapper& map, const KeypointSet& kps,
                    const std::string& color, const RenderStyle& style) {
    const std::vector<int> pos = position_of_133(kps, style);
    for (const auto& [a, b] : skeleton_edges_133()) {
        const int pa = pos[static_cast<size_t>(a)];
        const int pb = pos[static_cast<size_t>(b)];
        if (pa < 0 || pb < 0) continue;
        const Keypoint& ka = kps.points[static_cast<size_t>(pa)];
        const Keypoint& kb = kps.points[static_cast<size_t>(pb)];
        if (!ka.visible || !kb.visible) continue;
        out << "  <line x1=\"" << fmt(map.x(ka.x)) << "\" y1=\"" << fmt(map.y(ka.y)) << "\" x2=\""
            << fmt(map.x(kb.x)) << "\" y2=\"" << fmt(map.y(kb.y)) << "\" stroke=\"" << color
            << "\" stroke-width=\"" << fmt(style.stroke_width * 0.75) << "\"/>\n";
    }
    for (const Keypoint& kp : kps.points) {
        if (!kp.visible) continue;
        out << "  <circle cx=\"" << fmt(map.x(kp.x)) << "\" cy=\"" << fmt(map.y(kp.y))
            << "\" r=\"" << fmt(style.keypoint_radius) << "\" fill=\"" << color << "\"/>\n";
    }
}

}  // namespace

std::string render_shot_svg(const Shot& shot, const RenderStyle& style) {
    const Mapper map{shot.frame_width > 0.0 ? style.canvas / shot.frame_width : 0.0,
                     shot.frame_height > 0.0 ? style.canvas / shot.frame_height : 0.0,
                     style.canvas};
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << fmt(style.canvas) << " "
        << fmt(style.canvas) << "\">\n";
    out << "  <rect width=\"" << fmt(style.canvas) << "\" height=\"" << fmt(style.canvas)
        << "\" fill=\"#fafafa\"/>\n";

    for (const FilmSetAnnotation& fs : shot.film_sets) {
        draw_box(out, map, fs.bbox, "#707070", "5,3", style.stroke_width, fs.category);
    }
    for (const CharacterAnnotation& ch : shot.characters) {
        const std::string color = character_color(ch.character_id);
        draw_box(out, map, ch.bbox, color, "", style.stroke_width, ch.mention);
        if (ch.keypoints.has_value()) {
            draw_keypoints(out, map, *ch.keypoints, color, style);
        }
    }
    out << "</svg>\n";
    return out.str();
}

std::vector<std::string> render_storyboard(const Storyboard& sb, const RenderStyle& style) {
    std::vector<std::string> out;
    out.reserve(sb.shots.size());
    for (const Shot& shot : sb.shots) {
        out.push_back(render_shot_svg(shot, style));
    }
    return out;
}

}  // namespace sbgen
