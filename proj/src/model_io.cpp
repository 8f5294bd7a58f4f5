#include "stkm/model_io.hpp"
#include "stkm/error.hpp"

#include <json.hpp>

namespace stkm {

namespace {

constexpr const char *kFormat = "stkm-model";
constexpr int kVersion = 1;

using json = nlohmann::ordered_json;

RunConfig consistent_config(const ClusterModel &model, RunConfig config) {
    config.fit.mode = model.mode;
    config.fit.cluster_count = model.cluster_count();
    if (model.grid) {
        config.fit.landmark_side = model.grid->side_count();
        config.fit.tps = model.grid->options();
    }
    config.seed = model.rng_seed;
    return config;
}

template <typename T>
T field(const json &doc, const char *key, const std::string &origin) {
    const auto it = doc.find(key);
    if (it == doc.end())
        throw ValidationError(origin + ": model is missing '" + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception &) {
        throw ValidationError(origin + ": model field '" + key + "' has the wrong type");
    }
}

} // namespace

std::string serialize_model(const ClusterModel &model, const RunConfig &config) {
    if (model.centroids.empty() || !model.grid)
        throw ValidationError("cannot save an empty model");
    const RunConfig effective = consistent_config(model, config);
    json doc;
    doc["format"] = kFormat;
    doc["version"] = kVersion;
    doc["mode"] = to_string(model.mode);
    doc["clusters"] = model.cluster_count();
    doc["landmark_side"] = model.grid->side_count();
    doc["width"] = model.centroids[0].width;
    doc["height"] = model.centroids[0].height;
    doc["seed"] = model.rng_seed;
    doc["iterations"] = model.iterations;
    doc["converged"] = model.converged;
    doc["distortion_history"] = model.distortion_history;
    doc["distortion_chain"] = model.distortion_chain;
    doc["assignments"] = model.assignments;
    doc["distances"] = model.distances;
    json centroids = json::array();
    for (const auto &c : model.centroids)
        centroids.push_back(c.pixels);
    doc["centroids"] = std::move(centroids);
    doc["config"] = render_config(effective);
    return doc.dump(1) + "\n";
}

StoredModel parse_model(const std::string &text, const std::string &origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error &e) {
        throw ValidationError(origin + ": not a model file (" + e.what() + ")");
    }
    if (!doc.is_object() || doc.value("format", std::string()) != kFormat)
        throw ValidationError(origin + ": not a model file");
    if (field<int>(doc, "version", origin) != kVersion)
        throw ValidationError(origin + ": unsupported model version");

    StoredModel out;
    apply_config_text(out.config, field<std::string>(doc, "config", origin), origin + " [config]");
    out.config.fit.mode = parse_mode(field<std::string>(doc, "mode", origin));
    out.config.fit.landmark_side = field<int>(doc, "landmark_side", origin);
    out.config.fit.cluster_count = field<int>(doc, "clusters", origin);

    const int width = field<int>(doc, "width", origin);
    const int height = field<int>(doc, "height", origin);
    if (width < 1 || height < 1)
        throw ValidationError(origin + ": invalid image dimensions");
    const auto pixels = field<std::vector<std::vector<double>>>(doc, "centroids", origin);
    if (static_cast<int>(pixels.size()) != out.config.fit.cluster_count)
        throw ValidationError(origin + ": centroid count does not match cluster count");
    std::vector<Image> centroids;
    for (const auto &p : pixels) {
        if (p.size() != static_cast<std::size_t>(width) * height)
            throw ShapeError(origin + ": centroid size does not match " + std::to_string(width) + "x" +
                             std::to_string(height));
        centroids.push_back(Image{width, height, p});
    }

    const auto seed = field<std::uint64_t>(doc, "seed", origin);
    out.config.seed = seed;
    out.model = make_model(std::move(centroids), out.config.fit, seed);
    out.model.iterations = field<int>(doc, "iterations", origin);
    out.model.converged = field<bool>(doc, "converged", origin);
    out.model.distortion_history = field<std::vector<double>>(doc, "distortion_history", origin);
    out.model.distortion_chain = field<std::vector<double>>(doc, "distortion_chain", origin);
    out.model.assignments = field<std::vector<int>>(doc, "assignments", origin);
    out.model.distances = field<std::vector<double>>(doc, "distances", origin);
    for (int a : out.model.assignments)
        if (a < 0 || a >= out.config.fit.cluster_count)
            throw ValidationError(origin + ": assignment out of range");
    return out;
}

void save_model(const std::filesystem::path &path, const ClusterModel &model, const RunConfig &config) {
    write_file_atomic(path, serialize_model(model, config));
}

StoredModel load_model(const std::filesystem::path &path) {
    const auto bytes = read_file_bytes(path);
    return parse_model(std::string(bytes.begin(), bytes.end()), path.string());
}

} // namespace stkm
