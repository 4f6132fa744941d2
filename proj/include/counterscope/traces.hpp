#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace counterscope {

/// One counter sampled at 1 Hz: samples[k] is the value at second t0 + k.
struct MetricTrace {
    std::string metric;
    std::vector<double> samples;
    std::int64_t t0 = 0;

    bool operator==(const MetricTrace &) const = default;
};

/// Aligned multi-counter capture: n_seconds rows by n_metrics columns,
/// stored row-major (time-major). This is the fingerprint of one activity.
class TraceSet {
public:
    using Meta = std::map<std::string, std::string>;

    TraceSet() = default;
    /// `values` is row-major, size n_seconds * metrics.size(). Throws on
    /// shape mismatch, duplicate ids, non-finite values or zero length.
    TraceSet(std::vector<std::string> metrics, std::size_t n_seconds, std::vector<double> values,
             std::int64_t t0 = 0, Meta meta = {});

    const std::vector<std::string> &metrics() const noexcept { return metrics_; }
    std::size_t n_seconds() const noexcept { return n_seconds_; }
    std::size_t n_metrics() const noexcept { return metrics_.size(); }
    std::int64_t t0() const noexcept { return t0_; }
    const Meta &meta() const noexcept { return meta_; }
    Meta &meta() noexcept { return meta_; }

    double at(std::size_t t, std::size_t j) const { return values_[t * metrics_.size() + j]; }
    double &at(std::size_t t, std::size_t j) { return values_[t * metrics_.size() + j]; }
    std::span<const double> row(std::size_t t) const {
        return {values_.data() + t * metrics_.size(), metrics_.size()};
    }
    const std::vector<double> &values() const noexcept { return values_; }

    std::optional<std::size_t> metric_index(const std::string &id) const noexcept;
    /// Throws Error(unknown_metric).
    std::size_t require_metric(const std::string &id) const;
    std::vector<double> column(std::size_t j) const;
    std::vector<double> column(const std::string &id) const { return column(require_metric(id)); }
    MetricTrace trace(const std::string &id) const;

    /// Contiguous rows [start, start + length) as a new set; t0 shifts accordingly.
    TraceSet slice(std::size_t start, std::size_t length) const;
    /// Keeps only `ids`, in the given order.
    TraceSet select(const std::vector<std::string> &ids) const;

    bool operator==(const TraceSet &) const = default;

private:
    std::vector<std::string> metrics_;
    std::size_t n_seconds_ = 0;
    std::vector<double> values_;
    std::int64_t t0_ = 0;
    Meta meta_;
};

struct CorpusItem {
    TraceSet trace;
    std::string label;
    std::string group;

    bool operator==(const CorpusItem &) const = default;
};

struct LabeledCorpus {
    std::vector<CorpusItem> items;

    bool empty() const noexcept { return items.empty(); }
    std::size_t size() const noexcept { return items.size(); }
    /// Metric list shared by all items (empty for an empty corpus).
    const std::vector<std::string> &metrics() const;
    std::vector<std::string> labels() const;
    std::vector<std::string> groups() const;
    /// Sorted distinct labels.
    std::vector<std::string> distinct_labels() const;
    /// Throws Error(inconsistent_metrics) if item metric lists differ.
    void check_consistent() const;
    LabeledCorpus subset(std::span<const std::size_t> indices) const;

    bool operator==(const LabeledCorpus &) const = default;
};

/// Shortest decimal string that parses back to exactly `v`.
std::string format_value(double v);

TraceSet read_wide_csv(const std::filesystem::path &path);
void write_wide_csv(const TraceSet &trace, const std::filesystem::path &path);

/// Reads a JSON-lines manifest; trace paths are relative to the manifest's directory.
LabeledCorpus read_manifest(const std::filesystem::path &path);
/// Writes every item as `traces/trace_NNNN.csv` under `dir` plus `dir/manifest.jsonl`.
/// Returns the manifest path.
std::filesystem::path write_manifest(const LabeledCorpus &corpus, const std::filesystem::path &dir);

/// Prefix-truncates every trace to exactly n seconds.
LabeledCorpus truncate_align(const LabeledCorpus &corpus, std::size_t n);

} // namespace counterscope
