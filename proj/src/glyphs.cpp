// Stroke-rendered stand-ins for the ten handwritten digit classes. Strokes are
// polylines in a unit box (x right, y down) drawn with a Gaussian pen.

#include "stkm/data.hpp"
#include "stkm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stkm {

namespace {

struct P {
    double x, y;
};
using Stroke = std::vector<P>;

/// Elliptic arc; angles in degrees, measured counter-clockwise with y pointing up.
Stroke arc(double cx, double cy, double rx, double ry, double from, double to, int pieces = 28) {
    Stroke s;
    for (int i = 0; i <= pieces; ++i) {
        const double t = (from + (to - from) * i / pieces) * std::numbers::pi / 180.0;
        s.push_back({cx + rx * std::cos(t), cy - ry * std::sin(t)});
    }
    return s;
}

Stroke join(Stroke a, const Stroke &b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::vector<Stroke> digit(int d) {
    switch (d) {
    case 0: return {arc(0.5, 0.5, 0.32, 0.48, 0, 360)};
    case 1: return {{{0.34, 0.2}, {0.56, 0.02}, {0.56, 0.98}}};
    case 2: return {join(arc(0.5, 0.3, 0.3, 0.28, 160, -40), {{0.18, 0.98}, {0.86, 0.98}})};
    case 3: return {join(arc(0.5, 0.27, 0.29, 0.25, 150, -90), arc(0.5, 0.74, 0.32, 0.25, 90, -150))};
    case 4: return {{{0.62, 0.02}, {0.12, 0.66}, {0.9, 0.66}}, {{0.68, 0.22}, {0.68, 0.98}}};
    case 5: return {join({{0.84, 0.02}, {0.26, 0.02}, {0.22, 0.46}}, arc(0.5, 0.68, 0.32, 0.3, 150, -150))};
    case 6: return {join(arc(0.62, 0.6, 0.42, 0.58, 80, 190), arc(0.5, 0.72, 0.3, 0.26, 190, -170))};
    case 7: return {{{0.12, 0.04}, {0.88, 0.04}, {0.42, 0.98}}};
    case 8: return {arc(0.5, 0.26, 0.26, 0.23, 0, 360), arc(0.5, 0.73, 0.32, 0.25, 0, 360)};
    case 9: return {arc(0.5, 0.3, 0.3, 0.27, 0, 360), {{0.8, 0.3}, {0.72, 0.98}}};
    default: return {};
    }
}

double segment_distance2(double px, double py, P a, P b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = a.x + t * dx - px, ey = a.y + t * dy - py;
    return ex * ex + ey * ey;
}

} // namespace

std::vector<Image> builtin_glyphs(int width, int height) {
    if (width < 8 || height < 8)
        throw ValidationError("builtin glyphs need images of at least 8x8");
    // Digit box of ~0.7 of the frame, centered, like the classic 20-in-28 layout.
    const double box = 0.7 * std::min(width, height);
    const double ox = 0.5 * (width - 1) - 0.5 * box * 0.8;
    const double oy = 0.5 * (height - 1) - 0.5 * box;
    const double pen = 1.3 * std::min(width, height) / 28.0;

    std::vector<Image> out;
    for (int d = 0; d < 10; ++d) {
        std::vector<Stroke> strokes = digit(d);
        for (auto &s : strokes)
            for (auto &p : s)
                p = {ox + p.x * box * 0.8, oy + p.y * box};
        Image im(width, height);
        for (int v = 0; v < height; ++v)
            for (int u = 0; u < width; ++u) {
                double best = 1e300;
                for (const auto &s : strokes)
                    for (std::size_t i = 0; i + 1 < s.size(); ++i)
                        best = std::min(best, segment_distance2(u, v, s[i], s[i + 1]));
                im.at(u, v) = std::min(1.0, 1.3 * std::exp(-0.5 * best / (pen * pen)));
            }
        snap_to_float32(im);
        out.push_back(std::move(im));
    }
    return out;
}

} // namespace stkm
