#include <doctest.h>

#include "counterscope/pipeline.hpp"
#include "counterscope/simulator.hpp"
#include "test_util.hpp"

using namespace counterscope;

namespace {

const LabeledCorpus &demo_corpus() {
    static const LabeledCorpus c = [] {
        auto spec = make_app_corpus_spec(4, 10, 11, builtin_catalog());
        spec.groups = 3;
        return generate_corpus(spec, builtin_catalog());
    }();
    return c;
}

PipelineOptions small_rf() {
    PipelineOptions o;
    RfParams p;
    p.n_trees = 15;
    p.seed = 2;
    o.model = p;
    return o;
}

} // namespace

TEST_CASE("fit and evaluate on a hold-out split") {
    const auto &c = demo_corpus();
    const auto r = split_evaluate(c, small_rf(), 0.8, 42);
    CHECK(r.split.test.size() == 8);
    CHECK(r.report.accuracy >= 0.9);
    CHECK(r.pipeline.metrics() == c.metrics());
    CHECK(r.pipeline.norm == fit_normalizer(c.subset(r.split.train), c.metrics()));
    const auto again = split_evaluate(c, small_rf(), 0.8, 42);
    CHECK(report_to_json(again.report) == report_to_json(r.report));
}

TEST_CASE("metric subset and layouts") {
    const auto &c = demo_corpus();
    for (auto layout : {Layout::stat4, Layout::stat2, Layout::sequence}) {
        auto o = small_rf();
        o.metrics = {"gpu_bus_busy", "texture_l2_miss", "sp_memory_read"};
        o.layout = layout;
        const auto p = fit_pipeline(c, o);
        const std::size_t width = layout == Layout::stat4 ? 12 : layout == Layout::stat2 ? 6 : 3 * 30;
        CHECK(p.features(c).cols() == width);
        CHECK(p.classifier->n_features() == width);
    }
    auto o = small_rf();
    o.metrics = {"nope"};
    CHECK_ERRC(fit_pipeline(c, o), Errc::unknown_metric);
    CHECK_ERRC(fit_pipeline(LabeledCorpus{}, small_rf()), Errc::empty_corpus);
}

TEST_CASE("sequence pipelines truncate or pad to the training length") {
    const auto &c = demo_corpus();
    auto o = small_rf();
    o.layout = Layout::sequence;
    o.metrics = {"gpu_bus_busy"};
    const auto p = fit_pipeline(c, o);
    CHECK(p.seq_length == 30);
    const auto shorter = truncate_align(c, 20);
    CHECK(p.features(shorter).cols() == 30);
    CHECK(p.predict(shorter).size() == c.size());
}

TEST_CASE("pipeline save/load round trip") {
    testutil::TempDir dir("pipeline");
    const auto &c = demo_corpus();
    for (const ModelConfig &m : std::vector<ModelConfig>{RfParams{10, {}, 2, {}, 1, 1}, SvmParams{}, KnnParams{3},
                                                         MlpParams{8, 0.05, 20, 8, 1}}) {
        auto o = small_rf();
        o.model = m;
        const auto p = fit_pipeline(c, o);
        save_pipeline(p, dir / "p.json");
        const auto back = load_pipeline(dir / "p.json");
        CHECK(back.predict(c) == p.predict(c));
        CHECK(back.to_json() == p.to_json());
    }
    testutil::write_text(dir / "bad.json", R"({"format": "something-else"})");
    CHECK_ERRC(load_pipeline(dir / "bad.json"), Errc::invalid_model);
    testutil::write_text(dir / "broken.json", "{");
    CHECK_ERRC(load_pipeline(dir / "broken.json"), Errc::invalid_model);
    CHECK_ERRC(load_pipeline(dir / "missing.json"), Errc::io_error);
}

TEST_CASE("corpus k-fold refits the normaliser inside each fold") {
    const auto &c = demo_corpus();
    const auto o = small_rf();
    const auto r = corpus_kfold_cv(c, o, 5, 3);
    REQUIRE(r.folds.size() == 5);
    const auto folds = stratified_kfold(c.labels(), 5, 3);
    for (std::size_t f = 0; f < 5; ++f) {
        const auto p = fit_pipeline(c.subset(folds[f].train), o);
        const auto rep = p.evaluate(c.subset(folds[f].test));
        CHECK(rep.confusion == r.folds[f].confusion);
    }
    CHECK(*r.fold_accuracy_mean >= 0.9);
    CHECK(report_to_json(corpus_kfold_cv(c, o, 5, 3)) == report_to_json(r));
}

TEST_CASE("corpus LOPO and grid search") {
    const auto &c = demo_corpus();
    const auto lopo = corpus_lopo_cv(c, small_rf());
    CHECK(lopo.folds.size() == 3);
    CHECK(lopo.fold_names == std::vector<std::string>{"p0", "p1", "p2"});

    const std::vector<ModelConfig> grid{KnnParams{24}, RfParams{15, {}, 2, {}, 2, 1}};
    const auto g = corpus_grid_search(c, small_rf(), grid, 5, 1);
    CHECK(g.best_index == 1);
    CHECK(g.mean_accuracy.size() == 2);
    CHECK(g.mean_accuracy[0] < g.mean_accuracy[1]);
    CHECK_ERRC(corpus_grid_search(c, small_rf(), {}, 5, 1), Errc::empty_grid);
}
