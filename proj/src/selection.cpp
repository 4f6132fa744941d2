#include "counterscope/selection.hpp"

#include <algorithm>
#include <set>

#include "counterscope/error.hpp"
#include "counterscope/features.hpp"
#include "counterscope/stats.hpp"

namespace counterscope {

nlohmann::json prune_report_to_json(const PruneReport &r) {
    auto dropped = nlohmann::json::array();
    for (const auto &d : r.dropped)
        dropped.push_back({{"kept", d.kept}, {"dropped", d.dropped}, {"r", d.r}});
    return {{"retained", r.retained}, {"dropped", std::move(dropped)}};
}

PruneReport correlation_prune(const LabeledCorpus &reference, const std::vector<std::string> &order,
                              double threshold, const PruneOptions &options) {
    if (reference.empty())
        throw Error(Errc::empty_corpus, "reference corpus is empty");
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw Error(Errc::precondition, "threshold must be in (0, 1]");
    reference.check_consistent();

    const std::size_t k = order.size();
    std::vector<std::vector<double>> series(k);
    for (const auto &item : reference.items) {
        for (std::size_t m = 0; m < k; ++m) {
            auto col = item.trace.column(order[m]);
            if (options.per_item_normalize)
                col = stats::zscore_fit_apply(col, col).values;
            series[m].insert(series[m].end(), col.begin(), col.end());
        }
    }

    PruneReport report;
    std::vector<bool> retained(k, true);
    for (std::size_t i = 0; i < k; ++i) {
        if (!retained[i])
            continue;
        for (std::size_t j = i + 1; j < k; ++j) {
            if (!retained[j])
                continue;
            const double r = stats::pearson(series[i], series[j]);
            if (std::abs(r) > threshold) {
                retained[j] = false;
                report.dropped.push_back({order[i], order[j], r});
            }
        }
    }
    for (std::size_t m = 0; m < k; ++m)
        if (retained[m])
            report.retained.push_back(order[m]);
    return report;
}

std::vector<ScreenResult> accuracy_screen(const LabeledCorpus &corpus, const std::vector<std::string> &order,
                                          const Trainer &trainer, double threshold_acc, std::uint64_t split_seed,
                                          double train_fraction) {
    if (corpus.distinct_labels().size() < 2)
        throw Error(Errc::insufficient_labels, "screening needs at least 2 labels");
    if (!(threshold_acc > 0.0 && threshold_acc <= 1.0))
        throw Error(Errc::precondition, "threshold_acc must be in (0, 1]");
    corpus.check_consistent();
    const auto labels = corpus.labels();
    const auto split = stratified_split(labels, train_fraction, split_seed);
    const auto train = corpus.subset(split.train);
    const auto test = corpus.subset(split.test);
    std::vector<std::string> train_labels = train.labels(), test_labels = test.labels();

    std::vector<ScreenResult> passed;
    for (const auto &id : order) {
        const auto norm = fit_normalizer(train, {id});
        const auto xtr = build_stat_features(train, norm, Layout::stat4);
        const auto xte = build_stat_features(test, norm, Layout::stat4);
        const auto model = trainer(xtr.values, train_labels);
        const double acc = evaluate(*model, xte.values, test_labels).accuracy;
        if (acc > threshold_acc)
            passed.push_back({id, acc});
    }
    std::stable_sort(passed.begin(), passed.end(),
                     [](const ScreenResult &a, const ScreenResult &b) { return a.accuracy > b.accuracy; });
    return passed;
}

CappedIds enforce_cap(const std::vector<std::string> &ids, std::size_t cap) {
    CappedIds out;
    if (ids.size() <= cap) {
        out.ids = ids;
        return out;
    }
    out.ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(cap));
    out.warning = "requested " + std::to_string(ids.size()) + " metrics; keeping the first " + std::to_string(cap);
    return out;
}

std::vector<std::string> intersect_ordered(const std::vector<std::string> &a, const std::vector<std::string> &b) {
    const std::set<std::string> keep(b.begin(), b.end());
    std::vector<std::string> out;
    for (const auto &id : a)
        if (keep.count(id))
            out.push_back(id);
    return out;
}

} // namespace counterscope
