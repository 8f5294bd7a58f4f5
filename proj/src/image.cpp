#include "stkm/image.hpp"
#include "stkm/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stkm {

const char *category_name(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::io: return "io";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::shape: return "shape";
    case ErrorCategory::numerical: return "numerical";
    }
    return "unknown";
}

Image::Image(int w, int h, double fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

Image::Image(int w, int h, std::vector<double> values) : width(w), height(h), pixels(std::move(values)) {
    if (pixels.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h))
        throw ShapeError("image of " + std::to_string(w) + "x" + std::to_string(h) + " given " +
                         std::to_string(pixels.size()) + " intensities");
}

double squared_distance(const Image &a, const Image &b) {
    if (!a.same_shape(b))
        throw ShapeError("squared_distance: image shapes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        acc += d * d;
    }
    return acc;
}

double squared_norm(const Image &a) {
    double acc = 0.0;
    for (double p : a.pixels)
        acc += p * p;
    return acc;
}

Image gaussian_blur(const Image &src, double sigma) {
    if (sigma <= 0.0)
        return src;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double total = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        taps[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
        total += taps[k + radius];
    }
    for (double &t : taps)
        t /= total;

    const int w = src.width, h = src.height;
    Image tmp(w, h), out(w, h);
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int uu = u + k;
                if (uu >= 0 && uu < w)
                    acc += taps[k + radius] * src.at(uu, v);
            }
            tmp.at(u, v) = acc;
        }
    for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int vv = v + k;
                if (vv >= 0 && vv < h)
                    acc += taps[k + radius] * tmp.at(u, vv);
            }
            out.at(u, v) = acc;
        }
    return out;
}

void snap_to_float32(Image &img) {
    for (double &p : img.pixels)
        p = static_cast<double>(static_cast<float>(p));
}

void clamp_unit(Image &img) {
    for (double &p : img.pixels)
        p = std::clamp(p, 0.0, 1.0);
}

} // namespace stkm
