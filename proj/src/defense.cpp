#include "counterscope/defense.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "counterscope/error.hpp"
#include "counterscope/rng.hpp"
#include "counterscope/stats.hpp"

namespace counterscope {

using nlohmann::json;

namespace {

[[noreturn]] void bad_strategy(const std::string &msg) { throw Error(Errc::invalid_strategy, msg); }

SceneType scene_of(const TraceSet &trace) {
    auto it = trace.meta().find("scene_type");
    if (it != trace.meta().end())
        if (auto s = parse_scene_type(it->second))
            return *s;
    return SceneType::VR;
}

void check(const NoiseStrategy &s) {
    if (const auto *g = std::get_if<GaussianNoise>(&s)) {
        if (!(g->sigma >= 0.0) || !std::isfinite(g->sigma))
            bad_strategy("gaussian sigma must be >= 0");
    } else {
        const auto &d = std::get<DummyRender>(s);
        if (!(d.rate_per_s >= 0.0) || !std::isfinite(d.rate_per_s))
            bad_strategy("dummy_render rate_per_s must be >= 0");
        if (!(d.size_s > 0.0) || !(d.depth_z > 0.0) || !(d.hold_s > 0.0))
            bad_strategy("dummy_render size_s, depth_z and hold_s must be > 0");
    }
}

} // namespace

json strategy_to_json(const NoiseStrategy &s) {
    if (const auto *g = std::get_if<GaussianNoise>(&s))
        return {{"type", "gaussian"}, {"sigma", g->sigma}, {"seed", g->seed}};
    const auto &d = std::get<DummyRender>(s);
    return {{"type", "dummy_render"}, {"rate_per_s", d.rate_per_s}, {"size_s", d.size_s},
            {"depth_z", d.depth_z},   {"hold_s", d.hold_s},         {"seed", d.seed}};
}

NoiseStrategy strategy_from_json(const json &j) {
    try {
        const auto type = j.at("type").get<std::string>();
        if (type == "gaussian") {
            GaussianNoise g;
            g.sigma = j.value("sigma", g.sigma);
            g.seed = j.value("seed", g.seed);
            check(g);
            return g;
        }
        if (type == "dummy_render") {
            DummyRender d;
            d.rate_per_s = j.value("rate_per_s", d.rate_per_s);
            d.size_s = j.value("size_s", d.size_s);
            d.depth_z = j.value("depth_z", d.depth_z);
            d.hold_s = j.value("hold_s", d.hold_s);
            d.seed = j.value("seed", d.seed);
            check(d);
            return d;
        }
        bad_strategy("unknown strategy type '" + type + "'");
    } catch (const json::exception &e) {
        bad_strategy(e.what());
    }
}

TraceSet inject_noise(const TraceSet &trace, const NoiseStrategy &strategy, const MetricCatalog &catalog,
                      const SimulationProfile &profile) {
    check(strategy);
    const std::size_t n = trace.n_seconds();
    const std::size_t k = trace.n_metrics();
    const SceneType scene = scene_of(trace);
    std::vector<double> values = trace.values();

    std::vector<double> lo(k, -std::numeric_limits<double>::infinity());
    std::vector<double> hi(k, std::numeric_limits<double>::infinity());
    std::vector<double> dir(k, 1.0);
    for (std::size_t j = 0; j < k; ++j)
        if (const auto *d = catalog.find(trace.metrics()[j])) {
            std::tie(lo[j], hi[j]) = d->valid_range();
            dir[j] = d->sign();
        }

    if (const auto *g = std::get_if<GaussianNoise>(&strategy)) {
        Rng rng(g->seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> scale(k);
        for (std::size_t j = 0; j < k; ++j)
            scale[j] = g->sigma * profile.noise_sigma(trace.metrics()[j], scene);
        for (std::size_t t = 0; t < n; ++t)
            for (std::size_t j = 0; j < k; ++j) {
                auto &v = values[t * k + j];
                v = std::clamp(v + scale[j] * normal(rng), lo[j], hi[j]);
            }
    } else {
        const auto &d = std::get<DummyRender>(strategy);
        std::vector<SceneEvent> decoys;
        if (d.rate_per_s > 0.0) {
            Rng rng(d.seed);
            std::exponential_distribution<double> gap(d.rate_per_s);
            for (double t = gap(rng); t < static_cast<double>(n); t += gap(rng))
                decoys.push_back(StaticObject{d.size_s, d.depth_z, t, t + d.hold_s});
        }
        const SceneScript defaults;
        for (std::size_t t = 0; t < n && !decoys.empty(); ++t) {
            const double load = screen_coverage(decoys, static_cast<double>(t) + 0.5, defaults.fov_width_w,
                                                defaults.coverage_kappa);
            if (load == 0.0)
                continue;
            for (std::size_t j = 0; j < k; ++j) {
                auto &v = values[t * k + j];
                v = std::clamp(v + dir[j] * profile.get(trace.metrics()[j]).g * load, lo[j], hi[j]);
            }
        }
    }
    return TraceSet(trace.metrics(), n, std::move(values), trace.t0(), trace.meta());
}

DegradationCurve evaluate_countermeasure(const LabeledCorpus &corpus, const PipelineOptions &options,
                                         const CountermeasureSpec &spec, std::uint64_t seed,
                                         const MetricCatalog &catalog, const SimulationProfile &profile) {
    if (spec.levels.empty())
        throw Error(Errc::precondition, "at least one noise level is required");
    for (std::size_t i = 0; i < spec.levels.size(); ++i) {
        if (!(spec.levels[i] >= 0.0))
            throw Error(Errc::precondition, "noise levels must be >= 0");
        if (i > 0 && !(spec.levels[i] > spec.levels[i - 1]))
            throw Error(Errc::precondition, "noise levels must be strictly increasing");
    }
    check(spec.strategy);

    DegradationCurve curve;
    curve.strategy = std::holds_alternative<GaussianNoise>(spec.strategy) ? "gaussian" : "dummy_render";
    auto split = split_evaluate(corpus, options, spec.train_fraction, seed);
    curve.clean = split.report;
    const auto test = corpus.subset(split.split.test);

    for (std::size_t li = 0; li < spec.levels.size(); ++li) {
        LabeledCorpus noisy = test;
        for (std::size_t i = 0; i < noisy.items.size(); ++i) {
            NoiseStrategy s = spec.strategy;
            const auto item_seed = derive_seed(seed, 0xDEF0 + li, i);
            if (auto *g = std::get_if<GaussianNoise>(&s)) {
                g->sigma = spec.levels[li];
                g->seed = item_seed;
            } else {
                auto &d = std::get<DummyRender>(s);
                d.rate_per_s = spec.levels[li];
                d.seed = item_seed;
            }
            noisy.items[i].trace = inject_noise(noisy.items[i].trace, s, catalog, profile);
        }
        auto rep = split.pipeline.evaluate(noisy);
        curve.points.push_back({spec.levels[li], rep.accuracy, rep.macro_f1});
        curve.reports.push_back(std::move(rep));
    }
    return curve;
}

std::string curve_to_csv(const DegradationCurve &c) {
    std::string s = "level,accuracy,macro_f1\n";
    for (const auto &p : c.points)
        s += format_value(p.level) + ',' + format_value(p.accuracy) + ',' + format_value(p.macro_f1) + '\n';
    return s;
}

AccessLog read_access_log(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io_error, "cannot read " + path.string());
    AccessLog log;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(line, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used == 0 || line.find_first_not_of(" \t", used) != std::string::npos || !std::isfinite(v))
            throw Error(Errc::parse_error, path.string() + ":" + std::to_string(lineno) + ": bad timestamp");
        if (v < 0.0 || (!log.timestamps.empty() && v < log.timestamps.back()))
            throw Error(Errc::parse_error,
                        path.string() + ":" + std::to_string(lineno) + ": timestamps must be non-negative and sorted");
        log.timestamps.push_back(v);
    }
    return log;
}

DetectionVerdict detect_profiler_access(const AccessLog &log, const DetectorParams &params) {
    DetectionVerdict v;
    v.n_events = log.timestamps.size();
    if (v.n_events < 2)
        return v;
    std::vector<double> gaps;
    gaps.reserve(v.n_events - 1);
    for (std::size_t i = 1; i < v.n_events; ++i)
        gaps.push_back(log.timestamps[i] - log.timestamps[i - 1]);
    const double mean = stats::mean(gaps);
    v.cv = mean > 0.0 ? stats::pop_stddev(gaps) / mean : 0.0;
    std::vector<double> sorted = gaps;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
    v.flagged = v.n_events >= params.min_events && mean > 0.0 && v.cv < params.cv_threshold &&
                std::abs(median - params.expected_period_s) <= params.period_tolerance;
    if (v.flagged)
        v.estimated_period_s = median;
    return v;
}

json verdict_to_json(const DetectionVerdict &v) {
    return {{"flagged", v.flagged},
            {"estimated_period_s", v.estimated_period_s ? json(*v.estimated_period_s) : json(nullptr)},
            {"cv", v.cv},
            {"n_events", v.n_events}};
}

} // namespace counterscope
