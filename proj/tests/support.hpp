#pragma once

#include "stkm/image.hpp"
#include "stkm/tps.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace support {

inline stkm::Image random_image(int w, int h, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    stkm::Image img(w, h);
    for (auto &p : img.pixels)
        p = d(rng);
    return img;
}

// A few anisotropic Gaussian strokes, scaled to peak at 1. Smooth, and with
// no rotational symmetry to speak of.
inline stkm::Image blob_image(int w, int h, std::mt19937_64 &rng, int bumps = 3) {
    std::uniform_real_distribution<double> cu(0.3 * (w - 1), 0.7 * (w - 1));
    std::uniform_real_distribution<double> cv(0.3 * (h - 1), 0.7 * (h - 1));
    std::uniform_real_distribution<double> sd(1.0, 3.5);
    std::uniform_real_distribution<double> angle(0.0, 3.14159);
    stkm::Image img(w, h);
    for (int b = 0; b < bumps; ++b) {
        const double u0 = cu(rng), v0 = cv(rng), sa = sd(rng), sb = sd(rng), th = angle(rng);
        const double c = std::cos(th), s = std::sin(th);
        for (int v = 0; v < h; ++v)
            for (int u = 0; u < w; ++u) {
                const double a = c * (u - u0) + s * (v - v0);
                const double bb = -s * (u - u0) + c * (v - v0);
                img.at(u, v) += std::exp(-0.5 * (a * a / (sa * sa) + bb * bb / (sb * sb)));
            }
    }
    double peak = 0.0;
    for (double p : img.pixels)
        peak = std::max(peak, p);
    for (auto &p : img.pixels)
        p /= peak;
    return img;
}

inline std::vector<stkm::Point2> jitter(const std::vector<stkm::Point2> &pts, double sd, std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, sd);
    std::vector<stkm::Point2> out = pts;
    for (auto &p : out) {
        p.u += n(rng);
        p.v += n(rng);
    }
    return out;
}

inline std::vector<stkm::Point2> shifted(const std::vector<stkm::Point2> &pts, double du, double dv) {
    std::vector<stkm::Point2> out = pts;
    for (auto &p : out) {
        p.u += du;
        p.v += dv;
    }
    return out;
}

class TempDir {
public:
    explicit TempDir(const std::string &tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("stkm_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace support
