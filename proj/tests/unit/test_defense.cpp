#include <doctest.h>

#include <cmath>
#include <random>

#include "counterscope/defense.hpp"
#include "counterscope/stats.hpp"
#include "test_util.hpp"

using namespace counterscope;

namespace {

TraceSet quiet_trace(std::size_t seconds = 60) {
    SceneScript s;
    s.duration_s = seconds;
    s.noise.global = 0.0;
    return simulate(s, builtin_catalog()).traces;
}

double mean_sq_diff(const TraceSet &a, const TraceSet &b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        const double d = a.values()[i] - b.values()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.values().size());
}

AccessLog periodic(std::size_t n, double period, double start = 0.0) {
    AccessLog log;
    for (std::size_t i = 0; i < n; ++i)
        log.timestamps.push_back(start + period * static_cast<double>(i));
    return log;
}

} // namespace

TEST_CASE("zero-strength strategies leave the trace unchanged") {
    const auto t = simulate(make_pixel_sweep_script(SceneType::VR, 60, 1), builtin_catalog()).traces;
    CHECK(inject_noise(t, GaussianNoise{0.0, 5}, builtin_catalog()) == t);
    DummyRender d;
    d.rate_per_s = 0.0;
    CHECK(inject_noise(t, d, builtin_catalog()) == t);
}

TEST_CASE("dummy rendering raises NBLT on a flat baseline") {
    const auto t = quiet_trace();
    DummyRender d;
    d.rate_per_s = 0.5;
    d.seed = 3;
    const auto noisy = inject_noise(t, d, builtin_catalog());
    CHECK(stats::mean(noisy.column("non_base_level_textures")) > stats::mean(t.column("non_base_level_textures")));
    CHECK(stats::mean(noisy.column("prims_clipped")) < stats::mean(t.column("prims_clipped")));
    CHECK(inject_noise(t, d, builtin_catalog()) == noisy);
}

TEST_CASE("injection respects valid ranges") {
    const auto t = quiet_trace(30);
    const auto noisy = inject_noise(t, GaussianNoise{500.0, 1}, builtin_catalog());
    for (std::size_t j = 0; j < noisy.n_metrics(); ++j) {
        const auto [lo, hi] = builtin_catalog().at(noisy.metrics()[j]).valid_range();
        for (double v : noisy.column(j)) {
            CHECK(v >= lo);
            CHECK(v <= hi);
        }
    }
}

TEST_CASE("property: injection preserves shape") {
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 40; ++trial) {
        auto t = simulate(make_pixel_sweep_script(trial % 2 ? SceneType::AR : SceneType::VR, 10 + rng() % 50, rng()),
                          builtin_catalog())
                     .traces;
        NoiseStrategy s;
        if (rng() % 2)
            s = GaussianNoise{std::uniform_real_distribution<double>(0, 10)(rng), rng()};
        else
            s = DummyRender{std::uniform_real_distribution<double>(0, 3)(rng), 1 + static_cast<double>(rng() % 4), 2,
                            1, rng()};
        const auto out = inject_noise(t, s, builtin_catalog());
        CHECK(out.metrics() == t.metrics());
        CHECK(out.n_seconds() == t.n_seconds());
        CHECK(out.t0() == t.t0());
        CHECK(out.meta() == t.meta());
    }
}

TEST_CASE("property: gaussian perturbation grows with sigma") {
    const auto t = quiet_trace(30);
    const double sigmas[] = {0.0, 0.25, 0.5, 1.0, 2.0, 4.0};
    double previous = -1.0;
    for (double s : sigmas) {
        double acc = 0.0;
        for (std::uint64_t seed = 0; seed < 100; ++seed)
            acc += mean_sq_diff(inject_noise(t, GaussianNoise{s, seed}, builtin_catalog()), t);
        acc /= 100.0;
        CHECK(acc > previous);
        previous = acc;
    }
}

TEST_CASE("strategy JSON") {
    const NoiseStrategy g = GaussianNoise{2.5, 9};
    const NoiseStrategy d = DummyRender{0.3, 2, 3, 1.5, 4};
    CHECK(strategy_to_json(strategy_from_json(strategy_to_json(g))) == strategy_to_json(g));
    CHECK(strategy_to_json(strategy_from_json(strategy_to_json(d))) == strategy_to_json(d));
    CHECK_ERRC(strategy_from_json(nlohmann::json{{"type", "jam"}}), Errc::invalid_strategy);
    CHECK_ERRC(strategy_from_json(nlohmann::json{{"type", "gaussian"}, {"sigma", -1}}), Errc::invalid_strategy);
    CHECK_ERRC(strategy_from_json(nlohmann::json{{"sigma", 1}}), Errc::invalid_strategy);
    CHECK_ERRC(inject_noise(quiet_trace(5), GaussianNoise{-1, 0}, builtin_catalog()), Errc::invalid_strategy);
    CHECK_ERRC(inject_noise(quiet_trace(5), DummyRender{1, 0, 2, 1, 0}, builtin_catalog()), Errc::invalid_strategy);
}

TEST_CASE("countermeasure curve") {
    const auto corpus = generate_corpus(make_app_corpus_spec(4, 10, 5, builtin_catalog()), builtin_catalog());
    PipelineOptions opts;
    RfParams rf;
    rf.n_trees = 20;
    rf.seed = 1;
    opts.model = rf;
    CountermeasureSpec spec;
    spec.levels = {0, 1, 100};
    const auto curve = evaluate_countermeasure(corpus, opts, spec, 7, builtin_catalog());
    REQUIRE(curve.points.size() == 3);
    CHECK(curve.strategy == "gaussian");
    CHECK(curve.points[0].accuracy == curve.clean.accuracy);
    CHECK(curve.points[0].macro_f1 == curve.clean.macro_f1);
    CHECK(curve.reports[0].confusion == curve.clean.confusion);
    CHECK(curve.points[2].accuracy <= curve.points[0].accuracy - 0.10);
    CHECK(curve_to_csv(curve).rfind("level,accuracy,macro_f1\n0,", 0) == 0);

    spec.levels = {5};
    CHECK(evaluate_countermeasure(corpus, opts, spec, 7, builtin_catalog()).points.size() == 1);
    spec.levels = {};
    CHECK_ERRC(evaluate_countermeasure(corpus, opts, spec, 7, builtin_catalog()), Errc::precondition);
    spec.levels = {1, 1};
    CHECK_ERRC(evaluate_countermeasure(corpus, opts, spec, 7, builtin_catalog()), Errc::precondition);

    spec.strategy = DummyRender{};
    spec.levels = {0, 1};
    const auto dummy = evaluate_countermeasure(corpus, opts, spec, 7, builtin_catalog());
    CHECK(dummy.strategy == "dummy_render");
    CHECK(dummy.points[0].accuracy == dummy.clean.accuracy);
}

TEST_CASE("detector examples") {
    auto v = detect_profiler_access(periodic(60, 1.0));
    CHECK(v.flagged);
    REQUIRE(v.estimated_period_s);
    CHECK(*v.estimated_period_s == doctest::Approx(1.0));
    CHECK(v.n_events == 60);

    v = detect_profiler_access(periodic(5, 1.0));
    CHECK_FALSE(v.flagged);

    v = detect_profiler_access(AccessLog{});
    CHECK_FALSE(v.flagged);
    CHECK(v.n_events == 0);

    // regular but at the wrong period
    CHECK_FALSE(detect_profiler_access(periodic(60, 2.0)).flagged);

    int flagged = 0;
    std::mt19937_64 rng(123);
    for (int i = 0; i < 1000; ++i) {
        AccessLog log{testutil::uniform_vector(rng, 60, 0.0, 60.0)};
        std::sort(log.timestamps.begin(), log.timestamps.end());
        flagged += detect_profiler_access(log).flagged;
    }
    CHECK(flagged <= 50);
}

TEST_CASE("property: detector verdict is translation invariant") {
    std::mt19937_64 rng(72);
    std::uniform_real_distribution<double> jitter(-0.03, 0.03);
    for (int trial = 0; trial < 300; ++trial) {
        AccessLog log;
        const std::size_t n = rng() % 80;
        if (trial % 2) {
            log = periodic(n, std::uniform_real_distribution<double>(0.7, 1.3)(rng));
            for (auto &t : log.timestamps)
                t += jitter(rng);
            std::sort(log.timestamps.begin(), log.timestamps.end());
        } else {
            log.timestamps = testutil::uniform_vector(rng, n, 0, 60);
            std::sort(log.timestamps.begin(), log.timestamps.end());
        }
        // power-of-two shift keeps the differences exact
        const double shift = std::ldexp(1.0, static_cast<int>(rng() % 12));
        AccessLog moved = log;
        for (auto &t : moved.timestamps)
            t += shift;
        const auto a = detect_profiler_access(log), b = detect_profiler_access(moved);
        CHECK(a.flagged == b.flagged);
        CHECK(a.n_events == b.n_events);
        if (a.flagged)
            CHECK(a.n_events >= DetectorParams{}.min_events);
        CHECK(std::abs(a.cv - b.cv) < 1e-9);
    }
}

TEST_CASE("access log parsing") {
    testutil::TempDir dir("accesslog");
    testutil::write_text(dir / "ok.log", "0.5\n1.5\n\n2.5\n");
    CHECK(read_access_log(dir / "ok.log").timestamps == std::vector<double>{0.5, 1.5, 2.5});
    testutil::write_text(dir / "bad.log", "0.5\nabc\n");
    CHECK_ERRC(read_access_log(dir / "bad.log"), Errc::parse_error);
    testutil::write_text(dir / "dec.log", "2\n1\n");
    CHECK_ERRC(read_access_log(dir / "dec.log"), Errc::parse_error);
    testutil::write_text(dir / "neg.log", "-1\n");
    CHECK_ERRC(read_access_log(dir / "neg.log"), Errc::parse_error);
    CHECK_ERRC(read_access_log(dir / "missing.log"), Errc::io_error);
    const auto j = verdict_to_json(detect_profiler_access(periodic(30, 1.0)));
    CHECK(j.at("flagged") == true);
}
