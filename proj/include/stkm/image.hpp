#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stkm {

/// A grayscale W x H raster stored row-major; pixel (u, v) lives at v * width + u.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int w, int h, double fill = 0.0);
    Image(int w, int h, std::vector<double> values);

    std::size_t size() const { return pixels.size(); }
    bool same_shape(const Image &other) const { return width == other.width && height == other.height; }

    double at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * width + u]; }
    double &at(int u, int v) { return pixels[static_cast<std::size_t>(v) * width + u]; }

    bool operator==(const Image &) const = default;
};

/// Squared Euclidean distance, summed in ascending pixel order.
double squared_distance(const Image &a, const Image &b);

double squared_norm(const Image &a);

/// Separable Gaussian low-pass filter with zero padding outside the frame.
Image gaussian_blur(const Image &src, double sigma);

/// Rounds every intensity to the nearest float32 value, so the image survives
/// a float32 container round trip bit-exactly.
void snap_to_float32(Image &img);

/// Clamps intensities into [0, 1].
void clamp_unit(Image &img);

} // namespace stkm
