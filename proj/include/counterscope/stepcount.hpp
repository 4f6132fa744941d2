#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "counterscope/catalog.hpp"
#include "counterscope/simulator.hpp"
#include "counterscope/traces.hpp"

namespace counterscope {

/// A level change at second index t; magnitude is post-mean minus pre-mean.
struct StepEvent {
    std::size_t t = 0;
    int sign = 0;
    double magnitude = 0.0;
    bool operator==(const StepEvent &) const = default;
};

/// Two-sided moving-mean detector. D(t) = mean[t, t+w) - mean[t-w, t) for
/// w <= t <= n - w; local maxima of |D| above min_jump are candidates and the
/// strongest one wins inside any min_gap neighbourhood. Throws
/// Error(too_short) when the series is shorter than 2w.
std::vector<StepEvent> detect_steps(std::span<const double> series, double min_jump, std::size_t window_w = 3,
                                    std::size_t min_gap = 3);

struct ParticipantCount {
    int count = 0;
    /// Metric id -> number of events whose sign matches the metric direction.
    std::map<std::string, int> per_metric;
};

/// Votes across every trace column that the catalog knows. Metrics without
/// an entry in `min_jumps` are skipped. Throws Error(no_known_metrics).
ParticipantCount count_participants(const TraceSet &trace, const MetricCatalog &catalog,
                                    const std::map<std::string, double> &min_jumps,
                                    std::size_t window_w = 3, std::size_t min_gap = 3);

/// 4 x the profile noise sigma for every catalog metric that carries a
/// per-avatar step in the profile.
std::map<std::string, double> default_min_jumps(const MetricCatalog &catalog, SceneType scene,
                                                const SimulationProfile &profile = default_profile(),
                                                double factor = 4.0);

/// Second index of the first detected step. Throws Error(no_step_found).
std::size_t find_anchor(const TraceSet &trace, const std::string &metric, double min_jump,
                        std::size_t window_w = 3, std::size_t min_gap = 3);

struct MetricStep {
    std::string metric;
    StepEvent event;
};

/// CSV with header `t,metric,sign,magnitude`.
std::string steps_to_csv(const std::vector<MetricStep> &steps);

} // namespace counterscope
