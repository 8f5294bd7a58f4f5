#include "stkm/commands.hpp"
#include "stkm/error.hpp"
#include "stkm/run_config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>

namespace {

std::string flag_name(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
}

int fail(const char *category, const std::string &detail, int code) {
    std::fprintf(stderr, "stkm: error[%s]: %s\n", category, detail.c_str());
    return code;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Spatial-transformer K-means: deformation-invariant clustering of images"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "key = value config file; flags override its values");
    std::map<std::string, std::string> values;
    bool export_warped = false;
    for (const auto &key : stkm::config_keys()) {
        if (key.name == "export_warped")
            app.add_flag("--export-warped", export_warped, key.help);
        else
            app.add_option(flag_name(key.name), values[key.name], key.help);
    }

    using Command = std::function<std::string(const stkm::RunConfig &)>;
    const std::vector<std::tuple<const char *, const char *, Command>> commands = {
        {"fit", "fit a model and write it with its distortion log and metrics", stkm::cmd_fit},
        {"predict", "assign a dataset to the clusters of a saved model", stkm::cmd_predict},
        {"eval", "accuracy, NMI, ARI and cluster sizes of a saved model on a dataset", stkm::cmd_eval},
        {"gridsearch", "fit over landmark and learning-rate grids, ranked by training distortion",
         stkm::cmd_gridsearch},
        {"export", "write centroids, and optionally every datum warped onto its centroid, as images",
         stkm::cmd_export},
        {"synth", "write a synthetic rigid, non-rigid or blob dataset container", stkm::cmd_synth},
    };
    for (const auto &[name, help, fn] : commands)
        app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        return fail("validation", e.what(), 3);
    }

    try {
        stkm::RunConfig cfg;
        if (!config_path.empty())
            stkm::apply_config_file(cfg, config_path);
        for (const auto &key : stkm::config_keys()) {
            if (key.name == "export_warped") {
                if (app.count("--export-warped"))
                    cfg.export_warped = export_warped;
                continue;
            }
            const std::string flag = flag_name(key.name);
            if (!app.count(flag))
                continue;
            try {
                stkm::apply_setting(cfg, key.name, values[key.name]);
            } catch (const stkm::Error &e) {
                throw stkm::ValidationError(flag + ": " + e.what());
            }
        }
        for (const auto &[name, help, fn] : commands)
            if (app.got_subcommand(name)) {
                std::cout << fn(cfg);
                break;
            }
    } catch (const stkm::Error &e) {
        return fail(stkm::category_name(e.category()), e.what(), stkm::exit_code(e.category()));
    } catch (const std::exception &e) {
        return fail("internal", e.what(), 1);
    }
    return 0;
}
