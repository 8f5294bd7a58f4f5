#pragma once

// Model files: a JSON document holding the mode, landmark grid, image
// dimensions, centroids, fit trace and the effective run configuration.
// Stored warps are not persisted; predictions start from the identity warp.

#include <filesystem>
#include <string>

#include "stkm/cluster.hpp"
#include "stkm/run_config.hpp"

namespace stkm {

struct StoredModel {
    ClusterModel model;
    RunConfig config;
};

std::string serialize_model(const ClusterModel &model, const RunConfig &config);
StoredModel parse_model(const std::string &text, const std::string &origin);

void save_model(const std::filesystem::path &path, const ClusterModel &model, const RunConfig &config);
StoredModel load_model(const std::filesystem::path &path);

} // namespace stkm
