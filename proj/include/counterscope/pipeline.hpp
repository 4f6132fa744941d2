#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "counterscope/features.hpp"
#include "counterscope/models.hpp"
#include "counterscope/traces.hpp"

namespace counterscope {

struct PipelineOptions {
    /// Metrics to use, in this order; empty means every corpus metric.
    std::vector<std::string> metrics;
    Layout layout = Layout::stat4;
    ModelConfig model = RfParams{};
};

/// Normalizer + feature layout + classifier, fitted on one training corpus
/// and applied unchanged to anything else.
struct FittedPipeline {
    Layout layout = Layout::stat4;
    NormalizationStats norm;
    /// Padded length for the sequence layout (0 otherwise).
    std::size_t seq_length = 0;
    std::unique_ptr<Classifier> classifier;

    const std::vector<std::string> &metrics() const noexcept { return norm.metrics; }
    FeatureMatrix features(const LabeledCorpus &corpus) const;
    std::vector<std::string> predict(const LabeledCorpus &corpus) const;
    EvaluationReport evaluate(const LabeledCorpus &corpus) const;

    nlohmann::json to_json() const;
    static FittedPipeline from_json(const nlohmann::json &j);
};

FittedPipeline fit_pipeline(const LabeledCorpus &train, const PipelineOptions &options);
void save_pipeline(const FittedPipeline &p, const std::filesystem::path &path);
FittedPipeline load_pipeline(const std::filesystem::path &path);

struct SplitEvaluation {
    Split split;
    FittedPipeline pipeline;
    EvaluationReport report;
};

/// Stratified hold-out: fit on the train part, report on the test part.
SplitEvaluation split_evaluate(const LabeledCorpus &corpus, const PipelineOptions &options,
                               double train_fraction, std::uint64_t seed);

/// Cross-validation at corpus level: the normalizer is refitted inside every
/// training fold so no test statistics leak into the features.
EvaluationReport corpus_kfold_cv(const LabeledCorpus &corpus, const PipelineOptions &options, std::size_t k,
                                 std::uint64_t seed);
EvaluationReport corpus_lopo_cv(const LabeledCorpus &corpus, const PipelineOptions &options);
GridResult corpus_grid_search(const LabeledCorpus &corpus, const PipelineOptions &options,
                              const std::vector<ModelConfig> &grid, std::size_t k, std::uint64_t seed);

} // namespace counterscope
