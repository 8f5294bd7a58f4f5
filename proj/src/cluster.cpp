#include "stkm/cluster.hpp"
#include "stkm/error.hpp"
#include "stkm/parallel.hpp"
#include "stkm/sampler.hpp"
#include "log.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace stkm {

std::string to_string(Mode m) {
    switch (m) {
    case Mode::euclidean: return "euclidean";
    case Mode::affine_invariant: return "affine";
    case Mode::spatial_transformer: return "st";
    }
    return "unknown";
}

Mode parse_mode(std::string_view text) {
    if (text == "euclidean" || text == "kmeans")
        return Mode::euclidean;
    if (text == "affine" || text == "affine_invariant" || text == "ai")
        return Mode::affine_invariant;
    if (text == "st" || text == "spatial_transformer")
        return Mode::spatial_transformer;
    throw ValidationError("unknown mode '" + std::string(text) + "' (expected euclidean, affine or st)");
}

void FitConfig::validate() const {
    if (cluster_count < 1)
        throw ValidationError("cluster count must be >= 1");
    if (max_lloyd_iterations < 1)
        throw ValidationError("max_lloyd_iterations must be >= 1");
    if (landmark_side < 2)
        throw ValidationError("landmark side count must be >= 2");
    if (batch_size < 1)
        throw ValidationError("batch_size must be >= 1");
    if (!(assignment_change_tolerance >= 0.0 && assignment_change_tolerance <= 1.0))
        throw ValidationError("assignment_change_tolerance must lie in [0, 1]");
    if (jobs < 0)
        throw ValidationError("jobs must be >= 0");
    alignment.validate();
}

namespace {

void check_uniform(std::span<const Image> data) {
    for (std::size_t i = 1; i < data.size(); ++i)
        if (!data[i].same_shape(data[0]))
            throw ShapeError("image " + std::to_string(i) + " is " + std::to_string(data[i].width) + "x" +
                             std::to_string(data[i].height) + ", expected " + std::to_string(data[0].width) + "x" +
                             std::to_string(data[0].height));
}

void check_against_model(const ClusterModel &model, std::span<const Image> data) {
    check_uniform(data);
    if (!data.empty() && !model.centroids.empty() && !data[0].same_shape(model.centroids[0]))
        throw ShapeError("data is " + std::to_string(data[0].width) + "x" + std::to_string(data[0].height) +
                         " but the model centroids are " + std::to_string(model.centroids[0].width) + "x" +
                         std::to_string(model.centroids[0].height));
}

struct PairResult {
    double distance = 0.0;
    std::vector<Point2> warp;
};

PairResult score_pair(const Image &x, const Image &centroid, const LandmarkGrid &grid, Mode mode,
                      const AlignmentConfig &cfg, std::span<const Point2> warm) {
    if (mode == Mode::euclidean)
        return {squared_distance(x, centroid), {}};
    std::optional<std::span<const Point2>> start;
    if (!warm.empty())
        start = warm;
    const WarpFamily family = mode == Mode::affine_invariant ? WarpFamily::affine_only : WarpFamily::full_tps;
    AlignmentResult r = align(x, centroid, grid, cfg, start, family);
    return {r.distance, std::move(r.warp_targets)};
}

/// Scores every (point, centroid) pair in batches of points.
void score_all(const ClusterModel &model, std::span<const Image> data, const FitConfig &config,
               const std::vector<std::vector<Point2>> *warm, std::vector<double> &pair_distances,
               std::vector<std::vector<Point2>> &pair_warps) {
    const std::size_t n = data.size();
    const std::size_t k = model.centroids.size();
    pair_distances.assign(n * k, 0.0);
    pair_warps.assign(n * k, {});
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);
    const std::size_t batches = (n + batch - 1) / batch;
    for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t begin = b * batch;
        const std::size_t end = std::min(n, begin + batch);
        parallel_for((end - begin) * k, config.jobs, [&](std::size_t task) {
            const std::size_t i = begin + task / k;
            const std::size_t c = task % k;
            std::span<const Point2> w;
            if (warm && !warm->empty())
                w = (*warm)[i * k + c];
            try {
                PairResult r = score_pair(data[i], model.centroids[c], *model.grid, model.mode, config.alignment, w);
                pair_distances[i * k + c] = r.distance;
                pair_warps[i * k + c] = std::move(r.warp);
            } catch (const Error &e) {
                const std::string where = " (datum " + std::to_string(i) + ", centroid " + std::to_string(c) + ")";
                if (e.category() == ErrorCategory::numerical)
                    throw NumericalError(e.what() + where);
                if (e.category() == ErrorCategory::shape)
                    throw ShapeError(e.what() + where);
                throw ValidationError(e.what() + where);
            }
        });
    }
}

int argmin_row(const std::vector<double> &pair_distances, std::size_t i, std::size_t k) {
    int best = 0;
    for (std::size_t c = 1; c < k; ++c)
        if (pair_distances[i * k + c] < pair_distances[i * k + static_cast<std::size_t>(best)])
            best = static_cast<int>(c);
    return best;
}

double ordered_sum(const std::vector<double> &values) {
    double acc = 0.0;
    for (double v : values)
        acc += v;
    return acc;
}

} // namespace

double pair_cost(const Image &x, const Image &centroid, const LandmarkGrid &grid, std::span<const Point2> warp) {
    if (warp.empty())
        return squared_distance(x, centroid);
    return warp_loss(x, centroid, grid, warp);
}

std::vector<std::size_t> kmeanspp_indices(std::span<const Image> data, int k, std::uint64_t seed) {
    if (k < 1)
        throw ValidationError("K-means++ needs K >= 1");
    if (data.size() < static_cast<std::size_t>(k))
        throw ValidationError("K-means++ needs at least K = " + std::to_string(k) + " points, got " +
                              std::to_string(data.size()));
    check_uniform(data);
    std::mt19937_64 rng(seed);
    const std::size_t n = data.size();
    std::vector<std::size_t> chosen;
    std::vector<char> taken(n, 0);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    chosen.push_back(first(rng));
    taken[chosen.back()] = 1;

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i)
        d2[i] = squared_distance(data[i], data[chosen.back()]);

    while (chosen.size() < static_cast<std::size_t>(k)) {
        const double total = ordered_sum(d2);
        std::size_t pick = n;
        if (total > 0.0) {
            std::uniform_real_distribution<double> uni(0.0, total);
            const double r = uni(rng);
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0)
                    continue;
                cum += d2[i];
                pick = i;
                if (cum > r)
                    break;
            }
        } else {
            // Every point coincides with a chosen centroid; fall back to a uniform unchosen index.
            std::vector<std::size_t> rest;
            for (std::size_t i = 0; i < n; ++i)
                if (!taken[i])
                    rest.push_back(i);
            std::uniform_int_distribution<std::size_t> uni(0, rest.size() - 1);
            pick = rest[uni(rng)];
        }
        chosen.push_back(pick);
        taken[pick] = 1;
        for (std::size_t i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], squared_distance(data[i], data[pick]));
    }
    return chosen;
}

std::vector<Image> init_kmeanspp(std::span<const Image> data, int k, std::uint64_t seed) {
    std::vector<Image> out;
    for (std::size_t idx : kmeanspp_indices(data, k, seed))
        out.push_back(data[idx]);
    return out;
}

ClusterModel make_model(std::vector<Image> centroids, const FitConfig &config, std::uint64_t seed) {
    config.validate();
    if (centroids.empty())
        throw ValidationError("a model needs at least one centroid");
    ClusterModel m;
    m.mode = config.mode;
    m.grid = std::make_shared<const LandmarkGrid>(config.landmark_side, centroids[0].width, centroids[0].height,
                                                  config.tps);
    m.centroids = std::move(centroids);
    m.rng_seed = seed;
    return m;
}

int assign(ClusterModel &model, std::span<const Image> data, const FitConfig &config) {
    check_against_model(model, data);
    const std::size_t n = data.size();
    const std::size_t k = model.centroids.size();
    const bool have_warm = model.warm_warps.size() == n * k;
    std::vector<std::vector<Point2>> warps;
    score_all(model, data, config, have_warm ? &model.warm_warps : nullptr, model.pair_distances, warps);
    model.warm_warps = std::move(warps);

    int changed = 0;
    std::vector<int> next(n);
    model.distances.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        next[i] = argmin_row(model.pair_distances, i, k);
        model.distances[i] = model.pair_distances[i * k + static_cast<std::size_t>(next[i])];
        if (model.assignments.size() != n || model.assignments[i] != next[i])
            ++changed;
    }
    model.assignments = std::move(next);
    return changed;
}

void update_centroids(ClusterModel &model, std::span<const Image> data) {
    check_against_model(model, data);
    const std::size_t n = data.size();
    const std::size_t k = model.centroids.size();
    if (model.assignments.size() != n || model.distances.size() != n)
        throw ValidationError("update_centroids: assignments are not current for this data");
    if (model.warm_warps.size() != n * k)
        model.warm_warps.assign(n * k, {});

    // Cost of each point before the update, for the no-increase guard below.
    const std::vector<double> before = model.distances;

    std::vector<std::size_t> sizes(k, 0);
    for (int a : model.assignments)
        ++sizes[static_cast<std::size_t>(a)];

    // Empty clusters take the point farthest from its centroid (among clusters that can spare one).
    std::vector<char> reseeded(k, 0);
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] != 0)
            continue;
        std::size_t far = n;
        for (std::size_t i = 0; i < n; ++i) {
            const auto a = static_cast<std::size_t>(model.assignments[i]);
            if (sizes[a] < 2 || reseeded[a])
                continue;
            if (far == n || model.distances[i] > model.distances[far])
                far = i;
        }
        if (far == n)
            continue;
        log::debug("cluster {} is empty; reseeding with datum {}", c, far);
        --sizes[static_cast<std::size_t>(model.assignments[far])];
        model.assignments[far] = static_cast<int>(c);
        model.warm_warps[far * k + c].clear();
        sizes[c] = 1;
        reseeded[c] = 1;
    }

    const std::vector<Image> old = model.centroids;
    const Image &shape = model.centroids[0];
    std::vector<Image> sums(k, Image(shape.width, shape.height));
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(model.assignments[i]);
        std::span<const Point2> w = model.warm_warps[i * k + c];
        if (w.empty()) {
            for (std::size_t p = 0; p < sums[c].pixels.size(); ++p)
                sums[c].pixels[p] += data[i].pixels[p];
        } else {
            const Image warped = transform(data[i], *model.grid, w).image;
            for (std::size_t p = 0; p < sums[c].pixels.size(); ++p)
                sums[c].pixels[p] += warped.pixels[p];
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] == 0)
            continue;
        const double inv = 1.0 / static_cast<double>(sizes[c]);
        for (double &p : sums[c].pixels)
            p *= inv;
        model.centroids[c] = std::move(sums[c]);
    }

    auto recompute = [&](std::vector<double> &cost) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(model.assignments[i]);
            cost[i] = pair_cost(data[i], model.centroids[c], *model.grid, model.warm_warps[i * k + c]);
        }
    };
    std::vector<double> after(n);
    recompute(after);

    // The mean is the exact minimizer, so in exact arithmetic neither guard fires;
    // they only absorb rounding when a centroid barely moves.
    std::vector<double> before_sum(k, 0.0), after_sum(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(model.assignments[i]);
        before_sum[c] += before[i];
        after_sum[c] += after[i];
    }
    bool reverted = false;
    for (std::size_t c = 0; c < k; ++c)
        if (!reseeded[c] && after_sum[c] > before_sum[c]) {
            model.centroids[c] = old[c];
            reverted = true;
        }
    if (reverted)
        recompute(after);
    if (ordered_sum(after) > ordered_sum(before)) {
        for (std::size_t c = 0; c < k; ++c)
            if (!reseeded[c])
                model.centroids[c] = old[c];
        recompute(after);
    }
    model.distances = std::move(after);
}

ClusterModel fit(std::span<const Image> data, const FitConfig &config, std::uint64_t seed) {
    config.validate();
    check_uniform(data);
    if (data.size() < static_cast<std::size_t>(config.cluster_count))
        throw ValidationError("cannot fit " + std::to_string(config.cluster_count) + " clusters to " +
                              std::to_string(data.size()) + " points");
    ClusterModel model = make_model(init_kmeanspp(data, config.cluster_count, seed), config, seed);
    const double limit = config.assignment_change_tolerance * static_cast<double>(data.size());

    for (int it = 0; it < config.max_lloyd_iterations; ++it) {
        const int changed = assign(model, data, config);
        model.distortion_chain.push_back(ordered_sum(model.distances));
        update_centroids(model, data);
        const double d = ordered_sum(model.distances);
        model.distortion_chain.push_back(d);
        model.distortion_history.push_back(d);
        model.iterations = it + 1;
        log::info("lloyd iteration {}: {} assignments changed, distortion {:.6g}", it + 1, changed, d);
        if (it > 0 && static_cast<double>(changed) <= limit) {
            model.converged = true;
            break;
        }
    }
    return model;
}

Prediction predict_detailed(const ClusterModel &model, std::span<const Image> data, const FitConfig &config,
                            bool use_warm_starts) {
    check_against_model(model, data);
    if (!model.grid)
        throw ValidationError("predict: model has no landmark grid");
    const std::size_t n = data.size();
    const std::size_t k = model.centroids.size();
    const bool warm = use_warm_starts && model.warm_warps.size() == n * k;
    Prediction out;
    std::vector<std::vector<Point2>> warps;
    score_all(model, data, config, warm ? &model.warm_warps : nullptr, out.pair_distances, warps);
    out.assignments.resize(n);
    out.distances.resize(n);
    out.warps.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int a = argmin_row(out.pair_distances, i, k);
        out.assignments[i] = a;
        out.distances[i] = out.pair_distances[i * k + static_cast<std::size_t>(a)];
        out.warps[i] = std::move(warps[i * k + static_cast<std::size_t>(a)]);
    }
    return out;
}

std::vector<int> predict(const ClusterModel &model, std::span<const Image> data, const FitConfig &config,
                         bool use_warm_starts) {
    return predict_detailed(model, data, config, use_warm_starts).assignments;
}

double distortion(const ClusterModel &model, std::span<const Image> data) {
    check_against_model(model, data);
    if (model.assignments.size() != data.size())
        throw ValidationError("distortion: assignments are not current for this data");
    const std::size_t k = model.centroids.size();
    const bool have_warps = model.warm_warps.size() == data.size() * k;
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto c = static_cast<std::size_t>(model.assignments[i]);
        std::span<const Point2> w;
        if (have_warps)
            w = model.warm_warps[i * k + c];
        acc += pair_cost(data[i], model.centroids[c], *model.grid, w);
    }
    return acc;
}

} // namespace stkm
