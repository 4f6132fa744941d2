#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "counterscope/matrix.hpp"
#include "counterscope/traces.hpp"

namespace counterscope {

enum class Layout { stat4, stat2, sequence };

std::string_view to_string(Layout l) noexcept;
std::optional<Layout> parse_layout(std::string_view s) noexcept;

/// Per-metric mean and population stddev fitted on training data.
struct NormalizationStats {
    std::vector<std::string> metrics;
    std::vector<double> mean;
    std::vector<double> stddev;

    double apply(std::size_t j, double v) const noexcept {
        return stddev[j] > 0.0 ? (v - mean[j]) / stddev[j] : 0.0;
    }
    bool operator==(const NormalizationStats &) const = default;
};

nlohmann::json normalizer_to_json(const NormalizationStats &n);
NormalizationStats normalizer_from_json(const nlohmann::json &j);

struct FeatureMatrix {
    Layout layout = Layout::stat4;
    std::vector<std::string> col_names;
    Matrix values;

    std::size_t rows() const noexcept { return values.rows; }
    std::size_t cols() const noexcept { return values.cols; }
};

/// Mean / stddev per metric over the concatenation of all training samples.
NormalizationStats fit_normalizer(const LabeledCorpus &train, const std::vector<std::string> &metrics);

/// Normalizes each item with `norm`, then summarizes every metric as
/// (mean, stddev, max, min) for stat4 or (mean, stddev) for stat2.
/// Columns are grouped per metric in the order of `norm.metrics`.
FeatureMatrix build_stat_features(const LabeledCorpus &corpus, const NormalizationStats &norm,
                                  Layout layout = Layout::stat4);

/// Normalized time-major sequences flattened per item and padded at the tail
/// with `pad_value` to `min_length` or the longest item, whichever is larger.
FeatureMatrix build_sequences(const LabeledCorpus &corpus, const NormalizationStats &norm,
                              double pad_value = 0.0, std::size_t min_length = 0);

/// Dispatches on layout. For sequences, `seq_length` fixes the padded length
/// (items longer than it are truncated) so train and test widths agree.
FeatureMatrix build_features(const LabeledCorpus &corpus, const NormalizationStats &norm,
                             Layout layout, std::size_t seq_length = 0);

/// Sub-trace [t_start, t_start + length) (sample offsets). Adds a
/// "window" annotation to the inherited metadata.
TraceSet extract_window(const TraceSet &trace, std::size_t t_start, std::size_t length = 10);

/// CSV with header == col_names plus a trailing `label` column.
void write_feature_csv(const FeatureMatrix &features, const std::vector<std::string> &labels,
                       const std::filesystem::path &path);

} // namespace counterscope
