#include "counterscope/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include "counterscope/error.hpp"

namespace counterscope {

namespace {

constexpr const char *kPipelineFormat = "counterscope-pipeline";

std::size_t longest(const LabeledCorpus &c) {
    std::size_t n = 0;
    for (const auto &item : c.items)
        n = std::max(n, item.trace.n_seconds());
    return n;
}

FoldPredictor corpus_predictor(const LabeledCorpus &corpus, const PipelineOptions &options) {
    return [&corpus, &options](const Split &s) {
        const auto p = fit_pipeline(corpus.subset(s.train), options);
        return p.predict(corpus.subset(s.test));
    };
}

} // namespace

FeatureMatrix FittedPipeline::features(const LabeledCorpus &corpus) const {
    return build_features(corpus, norm, layout, seq_length);
}

std::vector<std::string> FittedPipeline::predict(const LabeledCorpus &corpus) const {
    return classifier->predict(features(corpus).values);
}

EvaluationReport FittedPipeline::evaluate(const LabeledCorpus &corpus) const {
    return counterscope::evaluate(*classifier, features(corpus).values, corpus.labels());
}

nlohmann::json FittedPipeline::to_json() const {
    return {{"format", kPipelineFormat},
            {"version", 1},
            {"layout", to_string(layout)},
            {"normalizer", normalizer_to_json(norm)},
            {"seq_length", seq_length},
            {"model", classifier->to_json()}};
}

FittedPipeline FittedPipeline::from_json(const nlohmann::json &j) {
    if (!j.is_object() || j.value("format", std::string{}) != kPipelineFormat || j.value("version", 0) != 1)
        throw Error(Errc::invalid_model, "not a counterscope pipeline file");
    try {
        FittedPipeline p;
        auto layout = parse_layout(j.at("layout").get<std::string>());
        if (!layout)
            throw Error(Errc::invalid_model, "unknown layout");
        p.layout = *layout;
        p.norm = normalizer_from_json(j.at("normalizer"));
        p.seq_length = j.at("seq_length").get<std::size_t>();
        p.classifier = classifier_from_json(j.at("model"));
        return p;
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::invalid_model, e.what());
    }
}

FittedPipeline fit_pipeline(const LabeledCorpus &train, const PipelineOptions &options) {
    if (train.empty())
        throw Error(Errc::empty_corpus, "training corpus is empty");
    train.check_consistent();
    FittedPipeline p;
    p.layout = options.layout;
    p.norm = fit_normalizer(train, options.metrics.empty() ? train.metrics() : options.metrics);
    p.seq_length = options.layout == Layout::sequence ? longest(train) : 0;
    const auto x = p.features(train);
    p.classifier = make_trainer(options.model)(x.values, train.labels());
    return p;
}

void save_pipeline(const FittedPipeline &p, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(Errc::io_error, "cannot write " + path.string());
    out << p.to_json().dump(1) << '\n';
}

FittedPipeline load_pipeline(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::io_error, "cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw Error(Errc::invalid_model, path.string() + ": " + e.what());
    }
    return FittedPipeline::from_json(j);
}

SplitEvaluation split_evaluate(const LabeledCorpus &corpus, const PipelineOptions &options, double train_fraction,
                               std::uint64_t seed) {
    SplitEvaluation out;
    out.split = stratified_split(corpus.labels(), train_fraction, seed);
    out.pipeline = fit_pipeline(corpus.subset(out.split.train), options);
    out.report = out.pipeline.evaluate(corpus.subset(out.split.test));
    return out;
}

EvaluationReport corpus_kfold_cv(const LabeledCorpus &corpus, const PipelineOptions &options, std::size_t k,
                                 std::uint64_t seed) {
    const auto labels = corpus.labels();
    return cross_validate(labels, stratified_kfold(labels, k, seed), corpus_predictor(corpus, options));
}

EvaluationReport corpus_lopo_cv(const LabeledCorpus &corpus, const PipelineOptions &options) {
    const auto g = lopo_folds(corpus.groups());
    return cross_validate(corpus.labels(), g.folds, corpus_predictor(corpus, options), g.groups);
}

GridResult corpus_grid_search(const LabeledCorpus &corpus, const PipelineOptions &options,
                              const std::vector<ModelConfig> &grid, std::size_t k, std::uint64_t seed) {
    return select_best(grid, [&](const ModelConfig &c) {
        PipelineOptions o = options;
        o.model = c;
        return corpus_kfold_cv(corpus, o, k, seed);
    });
}

} // namespace counterscope
