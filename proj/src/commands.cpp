#include "stkm/commands.hpp"
#include "stkm/metrics.hpp"
#include "stkm/model_io.hpp"
#include "stkm/parallel.hpp"
#include "stkm/sampler.hpp"
#include "log.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace stkm {

namespace fs = std::filesystem;

int exit_code(ErrorCategory category) {
    switch (category) {
    case ErrorCategory::io: return 2;
    case ErrorCategory::validation: return 3;
    case ErrorCategory::shape: return 3;
    case ErrorCategory::numerical: return 4;
    }
    return 1;
}

namespace {

constexpr std::string_view kBuiltin = "builtin:";

Dataset builtin_source(const RunConfig &cfg, std::string_view which) {
    if (which == "blobs") {
        Dataset ds = toy_blobs(cfg.synth_copies, 28, 28, cfg.data_seed);
        ds.name = "blobs";
        return ds;
    }
    if (which == "rigid" || which == "nonrigid") {
        SynthSpec spec;
        spec.base_images = builtin_glyphs();
        spec.copies_per_class = cfg.synth_copies;
        spec.tps_displacement_std = which == "nonrigid" ? cfg.synth_tps_std : 0.0;
        spec.seed = cfg.data_seed;
        spec.name = std::string(which);
        return synthesize(spec);
    }
    throw ValidationError("unknown builtin dataset '" + std::string(which) + "' (expected blobs, rigid or nonrigid)");
}

bool is_container(const fs::path &p) { return fs::is_directory(p) && fs::exists(p / "manifest.json"); }

Dataset pick_split(const Dataset &all, const RunConfig &cfg, Split split) {
    if (split == Split::all)
        return all;
    auto [train, test] = split_dataset(all, cfg.test_fraction, cfg.data_seed);
    return split == Split::train ? train : test;
}

std::string fmt_opt(const std::optional<double> &v) { return v ? format_double(*v) : std::string(); }

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string fixed_opt(const std::optional<double> &v) { return v ? fixed(*v) : std::string("n/a"); }

void ensure_dir(const fs::path &dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create output directory " + dir.string());
}

void echo_config(const RunConfig &cfg) {
    ensure_dir(cfg.out);
    write_file_atomic(fs::path(cfg.out) / "config.txt", render_config(cfg));
}

void require_model_path(const RunConfig &cfg) {
    if (cfg.model.empty())
        throw ValidationError("no model file given (set model or --model)");
}

// Prediction settings come from the model's own config; the run config may
// only change the alignment budget and the worker count.
FitConfig prediction_config(const StoredModel &stored, const RunConfig &cfg) {
    FitConfig fc = stored.config.fit;
    fc.alignment = cfg.fit.alignment;
    fc.jobs = cfg.fit.jobs;
    fc.batch_size = cfg.fit.batch_size;
    return fc;
}

std::string sizes_text(const std::vector<int> &sizes) {
    std::string out;
    for (std::size_t k = 0; k < sizes.size(); ++k)
        out += (k ? ";" : "") + std::to_string(sizes[k]);
    return out;
}

} // namespace

Dataset load_dataset(const RunConfig &cfg, Split split) {
    if (cfg.data.empty())
        throw ValidationError("no dataset given (set data or --data)");
    Dataset ds;
    if (cfg.data.rfind(kBuiltin, 0) == 0) {
        ds = pick_split(builtin_source(cfg, std::string_view(cfg.data).substr(kBuiltin.size())), cfg, split);
    } else {
        const fs::path p(cfg.data);
        if (!fs::exists(p))
            throw IoError("dataset not found: " + cfg.data);
        if (is_container(p))
            ds = read_container(p, split);
        else if (fs::is_directory(p))
            ds = pick_split(load_image_dir(p), cfg, split);
        else
            ds = pick_split(load_idx(p, cfg.labels.empty() ? std::nullopt : std::optional<fs::path>(cfg.labels)), cfg,
                            split);
    }
    ds.split = split;
    ds.validate();
    if (ds.images.empty())
        throw ValidationError("dataset " + cfg.data + " has no images in split " + to_string(split));
    return ds;
}

std::optional<Dataset> load_test_split(const RunConfig &cfg) {
    if (cfg.split != Split::train)
        return std::nullopt;
    if (cfg.data.rfind(kBuiltin, 0) != 0) {
        const fs::path p(cfg.data);
        if (is_container(p)) {
            const auto splits = container_splits(p);
            if (std::find(splits.begin(), splits.end(), Split::test) == splits.end())
                return std::nullopt;
        } else if (cfg.test_fraction <= 0.0) {
            return std::nullopt;
        }
    } else if (cfg.test_fraction <= 0.0) {
        return std::nullopt;
    }
    Dataset test = load_dataset(cfg, Split::test);
    if (test.images.empty())
        return std::nullopt;
    return test;
}

Scores score(const ClusterModel &model, const Dataset &data, const FitConfig &config) {
    const Prediction p = predict_detailed(model, data.images, config);
    Scores s;
    s.count = data.size();
    for (std::size_t i = 0; i < p.distances.size(); ++i)
        s.distortion += p.distances[i];
    s.cluster_sizes.assign(model.centroids.size(), 0);
    for (int a : p.assignments)
        ++s.cluster_sizes[static_cast<std::size_t>(a)];
    if (data.labels) {
        s.accuracy = accuracy(*data.labels, p.assignments);
        s.nmi = nmi(*data.labels, p.assignments);
        s.ari = ari(*data.labels, p.assignments);
    }
    return s;
}

FitOutcome fit_with_restarts(const RunConfig &cfg, const Dataset &train, const Dataset *test) {
    cfg.validate();
    FitOutcome out;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.restarts; ++r) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
        ClusterModel m = fit(train.images, cfg.fit, seed);
        RunRecord rec{seed, m.distortion_history.back(), m.iterations, m.converged, std::nullopt};
        if (test && test->labels)
            rec.test_accuracy = accuracy(*test->labels, predict(m, test->images, cfg.fit));
        log::info("run seed {}: distortion {:.6g} after {} iterations", seed, rec.distortion, rec.iterations);
        out.runs.push_back(rec);
        if (rec.distortion < best) {
            best = rec.distortion;
            out.selected = out.runs.size() - 1;
            out.model = std::move(m);
        }
    }
    return out;
}

GridResult run_gridsearch(const RunConfig &cfg, const Dataset &train, const Dataset *test) {
    cfg.validate();
    GridResult res;
    for (int side : cfg.grid_landmarks)
        for (double lr : cfg.grid_lr) {
            GridCell cell;
            cell.landmarks = side;
            cell.learning_rate = lr;
            res.cells.push_back(cell);
        }

    const bool cell_parallel = res.cells.size() > 1 && resolve_jobs(cfg.fit.jobs) > 1;
    parallel_for(res.cells.size(), cell_parallel ? cfg.fit.jobs : 1, [&](std::size_t c) {
        GridCell &cell = res.cells[c];
        RunConfig rc = cfg;
        rc.fit.landmark_side = cell.landmarks;
        rc.fit.alignment.learning_rate = cell.learning_rate;
        if (cell_parallel)
            rc.fit.jobs = 1;
        try {
            FitOutcome fo = fit_with_restarts(rc, train, nullptr);
            cell.distortion = fo.model.distortion_history.back();
            if (train.labels)
                cell.train_accuracy = accuracy(*train.labels, fo.model.assignments);
            if (test && test->labels)
                cell.test_accuracy = accuracy(*test->labels, predict(fo.model, test->images, rc.fit));
            cell.ok = true;
        } catch (const Error &e) {
            cell.error = std::string(category_name(e.category())) + ": " + e.what();
            log::warn("grid cell landmarks={} lr={} failed: {}", cell.landmarks, cell.learning_rate, e.what());
        }
    });

    std::vector<double> dist, acc;
    for (std::size_t c = 0; c < res.cells.size(); ++c) {
        const GridCell &cell = res.cells[c];
        if (!cell.ok)
            continue;
        if (!res.selected || cell.distortion < res.cells[*res.selected].distortion)
            res.selected = c;
        const auto &a = cell.test_accuracy ? cell.test_accuracy : cell.train_accuracy;
        if (a) {
            dist.push_back(cell.distortion);
            acc.push_back(*a);
        }
    }
    if (dist.size() >= 2) {
        const double rho = spearman(dist, acc);
        if (std::isfinite(rho))
            res.spearman = rho;
    }
    return res;
}

std::string cmd_fit(const RunConfig &cfg) {
    cfg.validate();
    const Dataset train = load_dataset(cfg, cfg.split);
    const std::optional<Dataset> test = load_test_split(cfg);
    echo_config(cfg);
    const fs::path out(cfg.out);

    FitOutcome fo = fit_with_restarts(cfg, train, test ? &*test : nullptr);
    const ClusterModel &model = fo.model;
    save_model(out / "model.json", model, cfg);

    std::string log = "iteration,after_assign,after_update\n";
    for (std::size_t t = 0; t < model.distortion_history.size(); ++t)
        log += std::to_string(t + 1) + "," + format_double(model.distortion_chain[2 * t]) + "," +
               format_double(model.distortion_chain[2 * t + 1]) + "\n";
    write_file_atomic(out / "distortion.csv", log);

    std::string runs = "seed,distortion,iterations,converged,test_accuracy,selected\n";
    for (std::size_t r = 0; r < fo.runs.size(); ++r) {
        const RunRecord &rec = fo.runs[r];
        runs += std::to_string(rec.seed) + "," + format_double(rec.distortion) + "," +
                std::to_string(rec.iterations) + "," + (rec.converged ? "true" : "false") + "," +
                fmt_opt(rec.test_accuracy) + "," + (r == fo.selected ? "true" : "false") + "\n";
    }
    write_file_atomic(out / "runs.csv", runs);

    // Train scores go through predict so that eval on the same split reproduces them.
    const Scores s = score(model, train, cfg.fit);
    std::string metrics = "split,count,distortion,accuracy,nmi,ari,cluster_sizes\n";
    metrics += to_string(train.split) + "," + std::to_string(s.count) + "," + format_double(s.distortion) + "," +
               fmt_opt(s.accuracy) + "," + fmt_opt(s.nmi) + "," + fmt_opt(s.ari) + "," + sizes_text(s.cluster_sizes) +
               "\n";
    write_file_atomic(out / "metrics.csv", metrics);

    std::ostringstream ss;
    ss << "mode " << to_string(model.mode) << ", K " << model.cluster_count() << ", seed " << model.rng_seed << ", "
       << model.iterations << " Lloyd iterations" << (model.converged ? " (converged)" : "") << "\n";
    ss << "training distortion " << fixed(model.distortion_history.back()) << "\n";
    if (s.accuracy)
        ss << "train accuracy " << fixed(*s.accuracy) << "  nmi " << fixed(*s.nmi) << "  ari " << fixed(*s.ari)
           << "\n";
    if (fo.runs.size() > 1)
        ss << "selected seed " << fo.runs[fo.selected].seed << " of " << fo.runs.size() << " runs by distortion\n";
    ss << "model written to " << (out / "model.json").string() << "\n";
    return ss.str();
}

std::string cmd_predict(const RunConfig &cfg) {
    cfg.validate();
    require_model_path(cfg);
    const StoredModel stored = load_model(cfg.model);
    const Dataset data = load_dataset(cfg, cfg.split);
    echo_config(cfg);
    const Prediction p = predict_detailed(stored.model, data.images, prediction_config(stored, cfg));
    std::string csv = data.labels ? "index,cluster,distance,label\n" : "index,cluster,distance\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        csv += std::to_string(i) + "," + std::to_string(p.assignments[i]) + "," + format_double(p.distances[i]);
        if (data.labels)
            csv += "," + std::to_string((*data.labels)[i]);
        csv += "\n";
    }
    const fs::path path = fs::path(cfg.out) / "predictions.csv";
    write_file_atomic(path, csv);
    return "predicted " + std::to_string(data.size()) + " points; written to " + path.string() + "\n";
}

std::string cmd_eval(const RunConfig &cfg) {
    cfg.validate();
    require_model_path(cfg);
    const StoredModel stored = load_model(cfg.model);
    const Dataset data = load_dataset(cfg, cfg.split);
    echo_config(cfg);
    const Scores s = score(stored.model, data, prediction_config(stored, cfg));

    std::string csv = "model,data,split,count,distortion,accuracy,nmi,ari,cluster_sizes\n";
    csv += cfg.model + "," + cfg.data + "," + to_string(data.split) + "," + std::to_string(s.count) + "," +
           format_double(s.distortion) + "," + fmt_opt(s.accuracy) + "," + fmt_opt(s.nmi) + "," + fmt_opt(s.ari) +
           "," + sizes_text(s.cluster_sizes) + "\n";
    write_file_atomic(fs::path(cfg.out) / "eval.csv", csv);

    std::ostringstream ss;
    ss << csv;
    ss << "\n";
    ss << "  points      " << s.count << "\n";
    ss << "  distortion  " << fixed(s.distortion) << "\n";
    ss << "  accuracy    " << fixed_opt(s.accuracy) << "\n";
    ss << "  nmi         " << fixed_opt(s.nmi) << "\n";
    ss << "  ari         " << fixed_opt(s.ari) << "\n";
    ss << "  cluster sizes:";
    for (std::size_t k = 0; k < s.cluster_sizes.size(); ++k)
        ss << " " << k << ":" << s.cluster_sizes[k];
    ss << "\n";
    return ss.str();
}

std::string cmd_gridsearch(const RunConfig &cfg) {
    cfg.validate();
    const Dataset train = load_dataset(cfg, cfg.split);
    const std::optional<Dataset> test = load_test_split(cfg);
    echo_config(cfg);
    const GridResult res = run_gridsearch(cfg, train, test ? &*test : nullptr);

    std::vector<std::size_t> order(res.cells.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const GridCell &x = res.cells[a], &y = res.cells[b];
        if (x.ok != y.ok)
            return x.ok;
        return x.ok && x.distortion < y.distortion;
    });

    std::string csv = "rank,landmarks,lr,status,distortion,train_accuracy,test_accuracy,selected\n";
    std::ostringstream ss;
    ss << "rank  landmarks  lr          distortion      train_acc  test_acc\n";
    for (std::size_t r = 0; r < order.size(); ++r) {
        const GridCell &c = res.cells[order[r]];
        const bool sel = res.selected && *res.selected == order[r];
        std::string status = c.ok ? "ok" : c.error;
        std::replace(status.begin(), status.end(), ',', ';');
        csv += std::to_string(r + 1) + "," + std::to_string(c.landmarks * c.landmarks) + "," +
               format_double(c.learning_rate) + "," + status + "," + (c.ok ? format_double(c.distortion) : "") + "," +
               fmt_opt(c.train_accuracy) + "," + fmt_opt(c.test_accuracy) + "," + (sel ? "true" : "false") + "\n";
        char line[160];
        std::snprintf(line, sizeof line, "%4zu  %9d  %-10s  %-14s  %-9s  %-9s%s\n", r + 1, c.landmarks * c.landmarks,
                      format_double(c.learning_rate).c_str(), c.ok ? fixed(c.distortion, 3).c_str() : "failed",
                      fixed_opt(c.train_accuracy).c_str(), fixed_opt(c.test_accuracy).c_str(), sel ? "  <- selected" : "");
        ss << line;
    }
    write_file_atomic(fs::path(cfg.out) / "gridsearch.csv", csv);
    if (res.selected) {
        const GridCell &c = res.cells[*res.selected];
        ss << "selected landmarks " << c.landmarks * c.landmarks << " (side " << c.landmarks << "), lr "
           << format_double(c.learning_rate) << " by training distortion\n";
    } else {
        ss << "every cell failed\n";
    }
    if (res.spearman)
        ss << "spearman(distortion, " << (test ? "test" : "train") << " accuracy) = " << fixed(*res.spearman) << "\n";
    return ss.str();
}

std::string cmd_export(const RunConfig &cfg) {
    cfg.validate();
    require_model_path(cfg);
    const StoredModel stored = load_model(cfg.model);
    const fs::path out(cfg.out);
    echo_config(cfg);
    ensure_dir(out / "centroids");
    const auto &cents = stored.model.centroids;
    for (std::size_t k = 0; k < cents.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "centroid_%02zu.pgm", k);
        write_pgm(out / "centroids" / name, cents[k]);
    }
    write_container(out / "centroids" / "raw", {Dataset{cents, std::nullopt, "centroids", Split::all}});
    std::string report = "wrote " + std::to_string(cents.size()) + " centroids to " + (out / "centroids").string() +
                         "\n";
    if (!cfg.export_warped)
        return report;

    const Dataset data = load_dataset(cfg, cfg.split);
    const Prediction p = predict_detailed(stored.model, data.images, prediction_config(stored, cfg));
    const LandmarkGrid &grid = *stored.model.grid;
    ensure_dir(out / "warped");
    Dataset warped{{}, data.labels, "warped", Split::all};
    std::string csv = "index,cluster,distance,file\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        Image w = p.warps[i].empty() ? data.images[i] : transform(data.images[i], grid, p.warps[i]).image;
        char name[48];
        std::snprintf(name, sizeof name, "%06zu_c%02d.pgm", i, p.assignments[i]);
        write_pgm(out / "warped" / name, w);
        csv += std::to_string(i) + "," + std::to_string(p.assignments[i]) + "," + format_double(p.distances[i]) + "," +
               name + "\n";
        clamp_unit(w);
        snap_to_float32(w);
        warped.images.push_back(std::move(w));
    }
    write_file_atomic(out / "warped.csv", csv);
    write_container(out / "warped" / "raw", {warped});
    return report + "wrote " + std::to_string(data.size()) + " warped images to " + (out / "warped").string() + "\n";
}

std::string cmd_synth(const RunConfig &cfg) {
    cfg.validate();
    Dataset all;
    if (cfg.synth_kind == "blobs") {
        all = toy_blobs(cfg.synth_copies, 28, 28, cfg.data_seed);
        all.name = "blobs";
    } else {
        SynthSpec spec;
        if (cfg.synth_base.empty()) {
            spec.base_images = builtin_glyphs();
        } else {
            const Dataset base = load_idx(cfg.synth_base, cfg.synth_base_labels.empty()
                                                              ? std::nullopt
                                                              : std::optional<fs::path>(cfg.synth_base_labels));
            if (!base.labels)
                throw ValidationError("synth_base needs synth_base_labels to pick one image per class");
            std::map<int, std::vector<std::size_t>> by_class;
            for (std::size_t i = 0; i < base.size(); ++i)
                by_class[(*base.labels)[i]].push_back(i);
            std::mt19937_64 rng(cfg.data_seed);
            for (const auto &[label, members] : by_class) {
                std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
                spec.base_images.push_back(base.images[members[pick(rng)]]);
            }
        }
        spec.copies_per_class = cfg.synth_copies;
        spec.tps_displacement_std = cfg.synth_kind == "nonrigid" ? cfg.synth_tps_std : 0.0;
        spec.seed = cfg.data_seed;
        spec.name = cfg.synth_kind;
        all = synthesize(spec);
    }
    auto [train, test] = split_dataset(all, cfg.test_fraction, cfg.data_seed);
    echo_config(cfg);
    std::vector<Dataset> splits{train};
    if (!test.images.empty())
        splits.push_back(test);
    write_container(cfg.out, splits);
    return "wrote " + std::to_string(train.size()) + " train and " + std::to_string(test.size()) +
           " test images to " + cfg.out + "\n";
}

} // namespace stkm
