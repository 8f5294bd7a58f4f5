#include <doctest.h>

#include "stkm/error.hpp"
#include "stkm/model_io.hpp"
#include "stkm/run_config.hpp"
#include "support.hpp"

#include <fstream>
#include <random>
#include <string>

using namespace stkm;

namespace {

std::string diagnostic(const std::string &text) {
    RunConfig cfg;
    try {
        apply_config_text(cfg, text, "run.cfg");
    } catch (const ValidationError &e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("config text sets fields") {
    RunConfig cfg;
    apply_config_text(cfg,
                      "# comment line\n"
                      "mode = affine\n"
                      "clusters=7   # trailing comment\n"
                      "\n"
                      "  lr = 0.005\n"
                      "steps = 90\n"
                      "affine_steps = 30\n"
                      "warp_cap = 2.5\n"
                      "grid_lr = 1e-3, 1e-2\n"
                      "grid_landmarks = 3,5\n"
                      "export_warped = yes\n"
                      "split = test\n"
                      "data = builtin:rigid\n"
                      "seed = 18446744073709551615\n",
                      "inline");
    CHECK(cfg.fit.mode == Mode::affine_invariant);
    CHECK(cfg.fit.cluster_count == 7);
    CHECK(cfg.fit.alignment.learning_rate == 0.005);
    CHECK(cfg.fit.alignment.max_steps == 90);
    CHECK(cfg.fit.alignment.affine_steps() == 30);
    CHECK(*cfg.fit.alignment.warp_magnitude_cap == 2.5);
    CHECK(cfg.grid_lr == std::vector<double>{1e-3, 1e-2});
    CHECK(cfg.grid_landmarks == std::vector<int>{3, 5});
    CHECK(cfg.export_warped);
    CHECK(cfg.split == Split::test);
    CHECK(cfg.data == "builtin:rigid");
    CHECK(cfg.seed == 18446744073709551615ULL);
}

TEST_CASE("rendered config reads back to the same config") {
    RunConfig cfg;
    cfg.fit.alignment.learning_rate = 0.1 + 0.2;
    cfg.fit.tps.norm = DistanceNorm::l1;
    cfg.fit.alignment.affine_stage_steps = 12;
    cfg.test_fraction = 1.0 / 7.0;
    cfg.synth_kind = "nonrigid";
    const std::string text = render_config(cfg);
    RunConfig back;
    apply_config_text(back, text, "echo");
    CHECK(render_config(back) == text);
    CHECK(back.fit.alignment.learning_rate == cfg.fit.alignment.learning_rate);
    CHECK(back.test_fraction == cfg.test_fraction);

    std::size_t lines = 0;
    for (char c : text)
        lines += c == '\n';
    CHECK(lines == config_keys().size());
}

TEST_CASE("diagnostics name the offending line") {
    CHECK(diagnostic("mode = st\nbogus = 1\n").find("run.cfg:2:") == 0);
    CHECK(diagnostic("mode = st\nbogus = 1\n").find("unknown key 'bogus'") != std::string::npos);
    CHECK(diagnostic("\n\nsteps = many\n").find("run.cfg:3:") == 0);
    CHECK(diagnostic("lr = 1\nlr = 2\n").find("run.cfg:2: duplicate key 'lr'") == 0);
    CHECK(diagnostic("just words\n").find("run.cfg:1: expected key = value") == 0);
    CHECK(diagnostic("mode = fuzzy\n").find("run.cfg:1:") == 0);
    CHECK(diagnostic("seed = 1\nclusters = 0\n").find("run.cfg:2:") == 0);
    CHECK(diagnostic("steps = 20\nlr = -1\n").find("run.cfg:2:") == 0);
    CHECK(diagnostic("export_warped = maybe\n").find("run.cfg:1:") == 0);
    // Cross-key conflicts resolve once the file is complete.
    CHECK(diagnostic("affine_steps = 100\nsteps = 200\n").empty());
    CHECK(diagnostic("steps = 200\naffine_steps = 100\n").empty());
}

TEST_CASE("missing config file is an io error") {
    RunConfig cfg;
    CHECK_THROWS_AS(apply_config_file(cfg, "/nonexistent/run.cfg"), IoError);
    support::TempDir dir("cfg");
    {
        std::ofstream out(dir / "a.cfg");
        out << "clusters = 4\nnot_a_key = 2\n";
    }
    try {
        apply_config_file(cfg, dir / "a.cfg");
        FAIL("expected a validation error");
    } catch (const ValidationError &e) {
        CHECK(std::string(e.what()).find("a.cfg:2:") != std::string::npos);
    }
}

TEST_CASE("doubles print in shortest round-trip form") {
    CHECK(format_double(0.05) == "0.05");
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double x = d(rng);
        CHECK(std::stod(format_double(x)) == x);
    }
}

TEST_CASE("model files round trip") {
    std::mt19937_64 rng(2);
    RunConfig cfg;
    cfg.fit.mode = Mode::euclidean;
    cfg.fit.cluster_count = 2;
    cfg.fit.jobs = 1;
    std::vector<Image> data;
    for (int i = 0; i < 6; ++i)
        data.push_back(support::random_image(5, 4, rng));
    cfg.seed = 3;
    const auto model = fit(data, cfg.fit, cfg.seed);
    const std::string text = serialize_model(model, cfg);
    const auto back = parse_model(text, "mem");
    CHECK(back.model.centroids == model.centroids);
    CHECK(back.model.assignments == model.assignments);
    CHECK(back.model.distortion_history == model.distortion_history);
    CHECK(back.model.grid->side_count() == model.grid->side_count());
    CHECK(render_config(back.config) == render_config(cfg));
    CHECK(serialize_model(back.model, back.config) == text);
    CHECK_THROWS_AS(parse_model("{}", "mem"), Error);
    CHECK_THROWS_AS(parse_model("not json", "mem"), Error);
}
