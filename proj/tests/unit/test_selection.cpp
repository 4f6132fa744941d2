#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "appendix_corpus.hpp"
#include "counterscope/selection.hpp"
#include "counterscope/stats.hpp"
#include "test_util.hpp"

using namespace counterscope;

namespace {

std::vector<double> concat(const LabeledCorpus &c, const std::string &id) {
    std::vector<double> out;
    for (const auto &it : c.items) {
        const auto col = it.trace.column(id);
        out.insert(out.end(), col.begin(), col.end());
    }
    return out;
}

/// Metrics built as random mixtures of a few shared factors, so that a
/// random subset of pairs ends up highly correlated.
LabeledCorpus factor_corpus(std::mt19937_64 &rng, std::size_t k, std::size_t items, std::size_t seconds) {
    const std::size_t factors = 1 + rng() % 4;
    const std::size_t n = items * seconds;
    std::vector<std::vector<double>> f;
    for (std::size_t i = 0; i < factors; ++i)
        f.push_back(testutil::normal_vector(rng, n));
    std::vector<std::string> ids;
    std::vector<std::vector<double>> cols;
    std::uniform_real_distribution<double> u(-1, 1);
    for (std::size_t j = 0; j < k; ++j) {
        ids.push_back("m" + std::to_string(j));
        const double own = std::abs(u(rng)) * (rng() % 3 ? 0.2 : 1.5);
        std::vector<double> c = testutil::normal_vector(rng, n, 0, own);
        for (std::size_t i = 0; i < factors; ++i) {
            const double w = u(rng);
            for (std::size_t t = 0; t < n; ++t)
                c[t] += w * f[i][t];
        }
        cols.push_back(std::move(c));
    }
    LabeledCorpus corpus;
    for (std::size_t it = 0; it < items; ++it) {
        std::vector<double> values(seconds * k);
        for (std::size_t t = 0; t < seconds; ++t)
            for (std::size_t j = 0; j < k; ++j)
                values[t * k + j] = cols[j][it * seconds + t];
        corpus.items.push_back({TraceSet(ids, seconds, std::move(values)), "x", "g"});
    }
    return corpus;
}

/// Three-class corpus: `signal` metrics have a class-dependent level, the
/// rest are pure noise.
LabeledCorpus screening_corpus(const std::vector<std::string> &ids, const std::set<std::string> &signal,
                               std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0, 1);
    LabeledCorpus c;
    for (int cls = 0; cls < 3; ++cls)
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<double> values(30 * ids.size());
            for (std::size_t t = 0; t < 30; ++t)
                for (std::size_t j = 0; j < ids.size(); ++j) {
                    double v = 50 + 3 * nd(rng);
                    if (signal.count(ids[j]))
                        v += 10.0 * cls;
                    values[t * ids.size() + j] = v;
                }
            c.items.push_back({TraceSet(ids, 30, std::move(values)), "app" + std::to_string(cls), "g"});
        }
    return c;
}

/// Copies column `from` into column `to` for every item.
void duplicate_column(LabeledCorpus &c, std::size_t from, std::size_t to) {
    for (auto &it : c.items)
        for (std::size_t t = 0; t < it.trace.n_seconds(); ++t)
            it.trace.at(t, to) = it.trace.at(t, from);
}

Trainer rf_trainer() {
    RfParams p;
    p.n_trees = 25;
    p.seed = 3;
    return make_trainer(p);
}

} // namespace

TEST_CASE("appendix corpus reproduces the pruning table") {
    const auto corpus = fixture::appendix_corpus();
    const auto order = corpus.metrics();
    const auto report = correlation_prune(corpus, order, 0.90);
    std::vector<DroppedMetric> expected;
    std::set<std::string> dropped_ids;
    for (const auto &row : fixture::appendix_rows())
        for (const auto &p : row.dropped) {
            dropped_ids.insert(p.id);
            const auto it = std::find_if(report.dropped.begin(), report.dropped.end(),
                                         [&](const DroppedMetric &d) { return d.dropped == p.id; });
            REQUIRE(it != report.dropped.end());
            CHECK(it->kept == row.kept);
            CHECK(it->r == doctest::Approx(p.r).epsilon(1e-9));
        }
    CHECK(report.dropped.size() == dropped_ids.size());
    CHECK(std::find(report.retained.begin(), report.retained.end(), "prims_clipped") == report.retained.end());
    CHECK(report.retained.size() == 11);
    std::set<std::string> all(report.retained.begin(), report.retained.end());
    all.insert(dropped_ids.begin(), dropped_ids.end());
    CHECK(all == std::set<std::string>(order.begin(), order.end()));
}

TEST_CASE("independent metrics are all retained") {
    std::mt19937_64 rng(2);
    LabeledCorpus c;
    for (int i = 0; i < 5; ++i)
        c.items.push_back({testutil::random_trace(rng, 40, 6), "a", "g"});
    const auto r = correlation_prune(c, c.metrics(), 0.9);
    CHECK(r.retained == c.metrics());
    CHECK(r.dropped.empty());
}

TEST_CASE("pruning preconditions") {
    CHECK_ERRC(correlation_prune(LabeledCorpus{}, {"a"}, 0.9), Errc::empty_corpus);
    std::mt19937_64 rng(3);
    LabeledCorpus c;
    c.items.push_back({testutil::random_trace(rng, 10, 2), "a", "g"});
    CHECK_ERRC(correlation_prune(c, {"m0", "zz"}, 0.9), Errc::unknown_metric);
    CHECK_ERRC(correlation_prune(c, c.metrics(), 0.0), Errc::precondition);
    CHECK_ERRC(correlation_prune(c, c.metrics(), 1.5), Errc::precondition);
    CHECK(correlation_prune(c, c.metrics(), 1.0).retained.size() == 2);
}

TEST_CASE("property: no retained pair exceeds the threshold") {
    std::mt19937_64 rng(91);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t k = 3 + rng() % 12;
        const auto corpus = factor_corpus(rng, k, 1 + rng() % 4, 10 + rng() % 30);
        const double threshold = std::uniform_real_distribution<double>(0.5, 0.98)(rng);
        auto order = corpus.metrics();
        std::shuffle(order.begin(), order.end(), rng);
        const auto report = correlation_prune(corpus, order, threshold);

        for (std::size_t a = 0; a < report.retained.size(); ++a)
            for (std::size_t b = a + 1; b < report.retained.size(); ++b)
                CHECK(std::abs(stats::pearson(concat(corpus, report.retained[a]),
                                              concat(corpus, report.retained[b]))) <= threshold);
        std::set<std::string> seen(report.retained.begin(), report.retained.end());
        for (const auto &d : report.dropped) {
            CHECK(seen.insert(d.dropped).second);
            CHECK(std::abs(d.r) > threshold);
            // the keeper comes earlier in the scan order
            CHECK(std::find(order.begin(), order.end(), d.kept) < std::find(order.begin(), order.end(), d.dropped));
        }
        CHECK(seen == std::set<std::string>(order.begin(), order.end()));
        // retained keeps scan order
        std::vector<std::string> in_order;
        for (const auto &id : order)
            if (std::count(report.retained.begin(), report.retained.end(), id))
                in_order.push_back(id);
        CHECK(in_order == report.retained);
        const auto again = correlation_prune(corpus, order, threshold);
        CHECK(again.retained == report.retained);
        CHECK(again.dropped == report.dropped);
    }
}

TEST_CASE("per-item normalisation option") {
    // two metrics that share item means but not within-item shape
    std::mt19937_64 rng(7);
    LabeledCorpus c;
    for (int i = 0; i < 6; ++i) {
        std::vector<double> values(40);
        for (std::size_t t = 0; t < 20; ++t) {
            values[2 * t] = 100.0 * i + testutil::normal_vector(rng, 1)[0];
            values[2 * t + 1] = 100.0 * i + testutil::normal_vector(rng, 1)[0];
        }
        c.items.push_back({TraceSet({"a", "b"}, 20, values), "x", "g"});
    }
    CHECK(correlation_prune(c, {"a", "b"}, 0.9).dropped.size() == 1);
    CHECK(correlation_prune(c, {"a", "b"}, 0.9, {true}).dropped.empty());
    CHECK(prune_report_to_json(correlation_prune(c, {"a", "b"}, 0.9)).at("dropped")[0].at("kept") == "a");
}

TEST_CASE("accuracy screen keeps the informative metric") {
    const std::vector<std::string> ids{"m0", "m1", "m2", "m3"};
    const auto c = screening_corpus(ids, {"m2"}, 4);
    const auto passed = accuracy_screen(c, ids, rf_trainer(), 0.6, 1);
    REQUIRE(passed.size() == 1);
    CHECK(passed[0].metric == "m2");
    CHECK(passed[0].accuracy > 0.9);
}

TEST_CASE("accuracy screen edge cases") {
    const std::vector<std::string> ids{"m0", "m1", "m2", "m3"};
    auto noisy = screening_corpus(ids, {"m1"}, 5);
    // replace the signal with noise again so nothing is perfectly separable
    for (auto &it : noisy.items)
        for (std::size_t t = 0; t < 30; ++t)
            it.trace.at(t, 1) -= 10.0 * (it.label.back() - '0');
    CHECK(accuracy_screen(noisy, ids, rf_trainer(), 1.0, 1).empty());

    auto twins = screening_corpus(ids, {"m1"}, 6);
    duplicate_column(twins, 1, 3);
    const auto passed = accuracy_screen(twins, ids, rf_trainer(), 0.6, 1);
    REQUIRE(passed.size() == 2);
    CHECK(passed[0].metric == "m1");
    CHECK(passed[1].metric == "m3");
    CHECK(passed[0].accuracy == passed[1].accuracy);

    LabeledCorpus one;
    for (int i = 0; i < 4; ++i)
        one.items.push_back(noisy.items[static_cast<std::size_t>(i)]);
    CHECK_ERRC(accuracy_screen(one, ids, rf_trainer(), 0.6, 1), Errc::insufficient_labels);
}

TEST_CASE("enforce_cap examples") {
    std::vector<std::string> ids;
    for (int i = 0; i < 35; ++i)
        ids.push_back("m" + std::to_string(i));
    auto capped = enforce_cap(ids);
    CHECK(capped.ids.size() == 30);
    CHECK(capped.ids.back() == "m29");
    CHECK_FALSE(capped.warning.empty());
    ids.resize(10);
    capped = enforce_cap(ids);
    CHECK(capped.ids == ids);
    CHECK(capped.warning.empty());
    CHECK(enforce_cap({}).ids.empty());
}

TEST_CASE("intersect_ordered") {
    const std::vector<std::string> a{"gpu_frequency", "prims_clipped", "texture_l2_miss"};
    CHECK(intersect_ordered(a, a) == a);
    CHECK(intersect_ordered(a, {}).empty());
    CHECK(intersect_ordered({}, a).empty());
    CHECK(intersect_ordered(a, {"texture_l2_miss", "gpu_frequency", "x"}) ==
          std::vector<std::string>{"gpu_frequency", "texture_l2_miss"});
}
