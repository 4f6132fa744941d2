#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "counterscope/catalog.hpp"
#include "counterscope/pipeline.hpp"
#include "counterscope/simulator.hpp"
#include "counterscope/traces.hpp"

namespace counterscope {

/// Adds Normal(0, sigma * sigma_i) to every sample, sigma_i being the
/// profile's noise sigma of metric i for the trace's scene type.
struct GaussianNoise {
    double sigma = 1.0;
    std::uint64_t seed = 0;
};

/// Renders decoy objects at screen center. Arrivals are Poisson with the
/// given rate; each decoy stays for hold_s seconds.
struct DummyRender {
    double rate_per_s = 0.2;
    double size_s = 2.0;
    double depth_z = 2.0;
    double hold_s = 1.0;
    std::uint64_t seed = 0;
};

using NoiseStrategy = std::variant<GaussianNoise, DummyRender>;

nlohmann::json strategy_to_json(const NoiseStrategy &s);
/// {"type": "gaussian", "sigma": ..., "seed": ...} or {"type": "dummy_render", ...}.
NoiseStrategy strategy_from_json(const nlohmann::json &j);

/// Same metrics and length; values clamped to each metric's valid range.
/// Throws Error(invalid_strategy).
TraceSet inject_noise(const TraceSet &trace, const NoiseStrategy &strategy, const MetricCatalog &catalog,
                      const SimulationProfile &profile = default_profile());

struct CurvePoint {
    double level = 0.0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

struct DegradationCurve {
    std::string strategy;
    std::vector<CurvePoint> points;
    /// Evaluation on the untouched test split.
    EvaluationReport clean;
    /// Full report for every level.
    std::vector<EvaluationReport> reports;
};

/// Which knob the levels drive: gaussian sigma or dummy_render rate.
struct CountermeasureSpec {
    /// Template; its sigma (gaussian) or rate_per_s (dummy_render) is replaced
    /// by each level and its seed by a per-item seed.
    NoiseStrategy strategy = GaussianNoise{};
    std::vector<double> levels;
    double train_fraction = 0.8;
};

/// Fits once on a clean stratified train split, then perturbs the test split
/// at every level. Levels must be non-empty, non-negative, strictly increasing.
DegradationCurve evaluate_countermeasure(const LabeledCorpus &corpus, const PipelineOptions &options,
                                         const CountermeasureSpec &spec, std::uint64_t seed,
                                         const MetricCatalog &catalog,
                                         const SimulationProfile &profile = default_profile());

/// CSV `level,accuracy,macro_f1`.
std::string curve_to_csv(const DegradationCurve &c);

struct AccessLog {
    std::vector<double> timestamps;
};

/// One decimal timestamp per line; blank lines are skipped. Throws
/// Error(parse_error) on bad lines or decreasing / negative timestamps.
AccessLog read_access_log(const std::filesystem::path &path);

struct DetectorParams {
    std::size_t min_events = 20;
    double cv_threshold = 0.1;
    double expected_period_s = 1.0;
    double period_tolerance = 0.25;
};

struct DetectionVerdict {
    bool flagged = false;
    std::optional<double> estimated_period_s;
    double cv = 0.0;
    std::size_t n_events = 0;
};

/// Flags a steady reader: enough events, inter-arrival coefficient of
/// variation below the threshold and median inter-arrival near the period.
DetectionVerdict detect_profiler_access(const AccessLog &log, const DetectorParams &params = {});

nlohmann::json verdict_to_json(const DetectionVerdict &v);

} // namespace counterscope
