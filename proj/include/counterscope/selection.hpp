#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "counterscope/models.hpp"
#include "counterscope/traces.hpp"

namespace counterscope {

struct DroppedMetric {
    std::string kept;
    std::string dropped;
    double r = 0.0;
    bool operator==(const DroppedMetric &) const = default;
};

struct PruneReport {
    std::vector<std::string> retained;
    std::vector<DroppedMetric> dropped;
};

nlohmann::json prune_report_to_json(const PruneReport &r);

struct PruneOptions {
    /// Z-score every item's columns before concatenating. Off by default:
    /// correlations are taken on the raw series.
    bool per_item_normalize = false;
};

/// Greedy pairwise pruning. Each metric's series is the concatenation of its
/// column over all items; pairs (i, j), i < j, are scanned in the order of
/// `order` and j is dropped when both are still retained and |r| > threshold.
PruneReport correlation_prune(const LabeledCorpus &reference, const std::vector<std::string> &order,
                              double threshold, const PruneOptions &options = {});

struct ScreenResult {
    std::string metric;
    double accuracy = 0.0;
};

/// Trains one classifier per metric on its (mean, stddev, max, min) features
/// with a stratified 80/20 split and keeps metrics whose held-out accuracy
/// exceeds `threshold_acc`, best first (stable in `order` on ties).
std::vector<ScreenResult> accuracy_screen(const LabeledCorpus &corpus, const std::vector<std::string> &order,
                                          const Trainer &trainer, double threshold_acc, std::uint64_t split_seed,
                                          double train_fraction = 0.8);

struct CappedIds {
    std::vector<std::string> ids;
    /// Non-empty when the list was truncated.
    std::string warning;
};

/// The profiler should not be asked for more than `cap` live counters.
CappedIds enforce_cap(const std::vector<std::string> &ids, std::size_t cap = 30);

/// Elements of `a` that also occur in `b`, in the order of `a`.
std::vector<std::string> intersect_ordered(const std::vector<std::string> &a, const std::vector<std::string> &b);

} // namespace counterscope
