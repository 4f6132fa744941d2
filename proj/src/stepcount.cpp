#include "counterscope/stepcount.hpp"

#include <algorithm>
#include <cmath>

#include "counterscope/error.hpp"

namespace counterscope {

std::vector<StepEvent> detect_steps(std::span<const double> series, double min_jump, std::size_t window_w,
                                    std::size_t min_gap) {
    if (window_w < 1)
        throw Error(Errc::precondition, "window_w must be >= 1");
    if (!(min_jump >= 0.0))
        throw Error(Errc::precondition, "min_jump must be >= 0");
    const std::size_t n = series.size();
    if (n < 2 * window_w)
        throw Error(Errc::too_short, "series of length " + std::to_string(n) + " is shorter than 2 * window (" +
                                         std::to_string(2 * window_w) + ")");

    // Prefix sums keep each window mean O(1).
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        prefix[i + 1] = prefix[i] + series[i];
    const double w = static_cast<double>(window_w);
    std::vector<StepEvent> candidates;
    for (std::size_t t = window_w; t + window_w <= n; ++t) {
        const double post = (prefix[t + window_w] - prefix[t]) / w;
        const double pre = (prefix[t] - prefix[t - window_w]) / w;
        const double d = post - pre;
        if (std::abs(d) > min_jump)
            candidates.push_back({t, d > 0.0 ? 1 : -1, d});
    }

    std::stable_sort(candidates.begin(), candidates.end(), [](const StepEvent &a, const StepEvent &b) {
        return std::abs(a.magnitude) > std::abs(b.magnitude);
    });
    std::vector<StepEvent> kept;
    for (const auto &c : candidates) {
        const bool near = std::any_of(kept.begin(), kept.end(), [&](const StepEvent &k) {
            return (c.t > k.t ? c.t - k.t : k.t - c.t) < min_gap;
        });
        if (!near)
            kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end(), [](const StepEvent &a, const StepEvent &b) { return a.t < b.t; });
    return kept;
}

ParticipantCount count_participants(const TraceSet &trace, const MetricCatalog &catalog,
                                    const std::map<std::string, double> &min_jumps, std::size_t window_w,
                                    std::size_t min_gap) {
    ParticipantCount out;
    for (std::size_t j = 0; j < trace.n_metrics(); ++j) {
        const auto &id = trace.metrics()[j];
        const auto *desc = catalog.find(id);
        auto jump = min_jumps.find(id);
        if (!desc || jump == min_jumps.end())
            continue;
        const auto column = trace.column(j);
        const int want = static_cast<int>(desc->sign());
        const auto events = detect_steps(column, jump->second, window_w, min_gap);
        out.per_metric[id] = static_cast<int>(
            std::count_if(events.begin(), events.end(), [&](const StepEvent &e) { return e.sign == want; }));
    }
    if (out.per_metric.empty())
        throw Error(Errc::no_known_metrics, "trace has no catalog metric with a jump threshold");

    std::map<int, int> votes;
    for (const auto &[_, c] : out.per_metric)
        ++votes[c];
    int best_votes = 0;
    for (const auto &[count, v] : votes) // ascending count, so ties keep the smallest
        if (v > best_votes) {
            best_votes = v;
            out.count = count;
        }
    return out;
}

std::map<std::string, double> default_min_jumps(const MetricCatalog &catalog, SceneType scene,
                                                const SimulationProfile &profile, double factor) {
    std::map<std::string, double> out;
    for (const auto &e : catalog.entries())
        if (profile.get(e.id).delta != 0.0)
            out[e.id] = factor * profile.noise_sigma(e.id, scene);
    return out;
}

std::size_t find_anchor(const TraceSet &trace, const std::string &metric, double min_jump, std::size_t window_w,
                        std::size_t min_gap) {
    const auto events = detect_steps(trace.column(metric), min_jump, window_w, min_gap);
    if (events.empty())
        throw Error(Errc::no_step_found, "no step above " + format_value(min_jump) + " in '" + metric + "'");
    return events.front().t;
}

std::string steps_to_csv(const std::vector<MetricStep> &steps) {
    std::string s = "t,metric,sign,magnitude\n";
    for (const auto &m : steps)
        s += std::to_string(m.event.t) + ',' + m.metric + ',' + std::to_string(m.event.sign) + ',' +
             format_value(m.event.magnitude) + '\n';
    return s;
}

} // namespace counterscope
