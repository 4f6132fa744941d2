#include "counterscope/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "counterscope/error.hpp"
#include "counterscope/stats.hpp"

namespace counterscope {

std::string_view to_string(Layout l) noexcept {
    switch (l) {
    case Layout::stat4: return "stat4";
    case Layout::stat2: return "stat2";
    case Layout::sequence: return "sequence";
    }
    return "?";
}

std::optional<Layout> parse_layout(std::string_view s) noexcept {
    if (s == "stat4")
        return Layout::stat4;
    if (s == "stat2")
        return Layout::stat2;
    if (s == "sequence")
        return Layout::sequence;
    return std::nullopt;
}

nlohmann::json normalizer_to_json(const NormalizationStats &n) {
    return {{"metrics", n.metrics}, {"mean", n.mean}, {"stddev", n.stddev}};
}

NormalizationStats normalizer_from_json(const nlohmann::json &j) {
    NormalizationStats n;
    try {
        n.metrics = j.at("metrics").get<std::vector<std::string>>();
        n.mean = j.at("mean").get<std::vector<double>>();
        n.stddev = j.at("stddev").get<std::vector<double>>();
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::invalid_model, std::string("normalizer: ") + e.what());
    }
    if (n.mean.size() != n.metrics.size() || n.stddev.size() != n.metrics.size())
        throw Error(Errc::invalid_model, "normalizer arrays differ in length");
    return n;
}

namespace {

std::vector<std::size_t> resolve_columns(const TraceSet &trace, const std::vector<std::string> &metrics) {
    std::vector<std::size_t> cols;
    cols.reserve(metrics.size());
    for (const auto &m : metrics)
        cols.push_back(trace.require_metric(m));
    return cols;
}

} // namespace

NormalizationStats fit_normalizer(const LabeledCorpus &train, const std::vector<std::string> &metrics) {
    if (train.empty())
        throw Error(Errc::empty_corpus, "cannot fit a normalizer on an empty corpus");
    NormalizationStats n;
    n.metrics = metrics;
    n.mean.resize(metrics.size());
    n.stddev.resize(metrics.size());
    std::vector<std::vector<std::size_t>> cols;
    cols.reserve(train.items.size());
    for (const auto &item : train.items)
        cols.push_back(resolve_columns(item.trace, metrics));
    std::vector<double> series;
    for (std::size_t j = 0; j < metrics.size(); ++j) {
        series.clear();
        for (std::size_t i = 0; i < train.items.size(); ++i) {
            const auto &tr = train.items[i].trace;
            for (std::size_t t = 0; t < tr.n_seconds(); ++t)
                series.push_back(tr.at(t, cols[i][j]));
        }
        n.mean[j] = stats::mean(series);
        n.stddev[j] = stats::pop_stddev(series);
    }
    return n;
}

FeatureMatrix build_stat_features(const LabeledCorpus &corpus, const NormalizationStats &norm, Layout layout) {
    if (layout == Layout::sequence)
        throw Error(Errc::precondition, "build_stat_features needs a stat layout");
    const std::size_t per = layout == Layout::stat4 ? 4 : 2;
    const std::size_t k = norm.metrics.size();
    FeatureMatrix fm;
    fm.layout = layout;
    static constexpr const char *kSuffix[] = {"mean", "std", "max", "min"};
    for (const auto &m : norm.metrics)
        for (std::size_t s = 0; s < per; ++s)
            fm.col_names.push_back(m + "__" + kSuffix[s]);
    fm.values = Matrix(corpus.size(), per * k);
    std::vector<double> series;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto &tr = corpus.items[i].trace;
        const auto cols = resolve_columns(tr, norm.metrics);
        auto row = fm.values.row(i);
        for (std::size_t j = 0; j < k; ++j) {
            series.resize(tr.n_seconds());
            for (std::size_t t = 0; t < tr.n_seconds(); ++t)
                series[t] = norm.apply(j, tr.at(t, cols[j]));
            const auto s = stats::summarize(series);
            row[per * j] = s.mean;
            row[per * j + 1] = s.stddev;
            if (per == 4) {
                row[per * j + 2] = s.max;
                row[per * j + 3] = s.min;
            }
        }
    }
    return fm;
}

namespace {

FeatureMatrix sequence_features(const LabeledCorpus &corpus, const NormalizationStats &norm,
                                double pad_value, std::size_t length) {
    const std::size_t k = norm.metrics.size();
    FeatureMatrix fm;
    fm.layout = Layout::sequence;
    fm.col_names.reserve(length * k);
    for (std::size_t t = 0; t < length; ++t)
        for (const auto &m : norm.metrics)
            fm.col_names.push_back("t" + std::to_string(t) + ":" + m);
    fm.values = Matrix(corpus.size(), length * k, pad_value);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto &tr = corpus.items[i].trace;
        const auto cols = resolve_columns(tr, norm.metrics);
        auto row = fm.values.row(i);
        const std::size_t n = std::min(length, tr.n_seconds());
        for (std::size_t t = 0; t < n; ++t)
            for (std::size_t j = 0; j < k; ++j)
                row[t * k + j] = norm.apply(j, tr.at(t, cols[j]));
    }
    return fm;
}

std::size_t longest(const LabeledCorpus &corpus) {
    std::size_t n = 0;
    for (const auto &item : corpus.items)
        n = std::max(n, item.trace.n_seconds());
    return n;
}

} // namespace

FeatureMatrix build_sequences(const LabeledCorpus &corpus, const NormalizationStats &norm,
                              double pad_value, std::size_t min_length) {
    return sequence_features(corpus, norm, pad_value, std::max(min_length, longest(corpus)));
}

FeatureMatrix build_features(const LabeledCorpus &corpus, const NormalizationStats &norm, Layout layout,
                             std::size_t seq_length) {
    if (layout != Layout::sequence)
        return build_stat_features(corpus, norm, layout);
    return sequence_features(corpus, norm, 0.0, seq_length ? seq_length : longest(corpus));
}

TraceSet extract_window(const TraceSet &trace, std::size_t t_start, std::size_t length) {
    if (length == 0 || t_start + length > trace.n_seconds())
        throw Error(Errc::out_of_range, "window [" + std::to_string(t_start) + ", " +
                                            std::to_string(t_start + length) + ") exceeds " +
                                            std::to_string(trace.n_seconds()) + "-second trace");
    auto w = trace.slice(t_start, length);
    w.meta()["window"] = std::to_string(t_start) + "+" + std::to_string(length);
    return w;
}

void write_feature_csv(const FeatureMatrix &features, const std::vector<std::string> &labels,
                       const std::filesystem::path &path) {
    if (labels.size() != features.rows())
        throw Error(Errc::length_mismatch, "labels vs feature rows");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(Errc::io_error, "cannot write " + path.string());
    std::string buf;
    for (const auto &c : features.col_names) {
        buf += c;
        buf += ',';
    }
    buf += "label\n";
    for (std::size_t i = 0; i < features.rows(); ++i) {
        for (double v : features.values.row(i)) {
            buf += format_value(v);
            buf += ',';
        }
        buf += labels[i];
        buf += '\n';
    }
    out << buf;
}

} // namespace counterscope
