#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "counterscope/matrix.hpp"

namespace counterscope {

enum class ModelKind { rf, svm, knn, mlp };

std::string_view to_string(ModelKind k) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view s) noexcept;

struct RfParams {
    std::size_t n_trees = 100;
    std::optional<std::size_t> max_depth;
    std::size_t min_samples_split = 2;
    /// Candidate features per split; defaults to ceil(sqrt(d)).
    std::optional<std::size_t> feature_subsample;
    std::uint64_t seed = 0;
    /// Worker threads for tree growing. Output does not depend on it.
    std::size_t n_threads = 1;
};

struct SvmParams {
    double lr = 0.01;
    std::size_t epochs = 100;
    double reg_lambda = 1e-3;
    std::uint64_t seed = 0;
};

struct KnnParams {
    std::size_t k = 1;
};

struct MlpParams {
    std::size_t hidden = 32;
    double learning_rate = 0.05;
    std::size_t epochs = 200;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
};

using ModelConfig = std::variant<RfParams, SvmParams, KnnParams, MlpParams>;

ModelKind kind_of(const ModelConfig &c) noexcept;
nlohmann::json model_config_to_json(const ModelConfig &c);
/// Accepts {"model": "rf"|"svm"|"knn"|"mlp", <param>: value, ...}.
ModelConfig model_config_from_json(const nlohmann::json &j);
/// Replaces the seed of seeded configs (k-NN has none).
ModelConfig with_seed(ModelConfig c, std::uint64_t seed);

/// Common interface of the trained classifiers. Labels are strings at the
/// boundary; internally classes are indexed in sorted label order and every
/// argmax tie resolves to the lowest class index.
class Classifier {
public:
    virtual ~Classifier() = default;

    virtual ModelKind kind() const noexcept = 0;
    /// One score per class; larger is more likely.
    virtual std::vector<double> scores(std::span<const double> x) const = 0;
    virtual nlohmann::json to_json() const = 0;

    const std::vector<std::string> &classes() const noexcept { return classes_; }
    std::size_t n_features() const noexcept { return n_features_; }

    std::size_t predict_index(std::span<const double> x) const;
    std::string predict(std::span<const double> x) const { return classes_[predict_index(x)]; }
    std::vector<std::string> predict(const Matrix &x) const;

protected:
    std::vector<std::string> classes_;
    std::size_t n_features_ = 0;
};

/// Decision tree stored as a flat node array; node 0 is the root.
/// A split remembers the training values on either side of its cut: points
/// at or below `threshold` go left, points at or above `upper` go right and
/// points strictly between them are shared equally by both children. Routing
/// therefore depends only on the order of feature values.
struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    double upper = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> distribution; // leaf class probabilities
};

struct DecisionTree {
    std::vector<TreeNode> nodes;
    /// Adds weight * (class distribution reached by x) to `out`.
    void accumulate(std::span<const double> x, double weight, std::vector<double> &out) const;
};

class RandomForestModel final : public Classifier {
public:
    ModelKind kind() const noexcept override { return ModelKind::rf; }
    /// Mean of the leaf class distributions reached in every tree.
    std::vector<double> scores(std::span<const double> x) const override;
    nlohmann::json to_json() const override;

    const RfParams &params() const noexcept { return params_; }
    const std::vector<DecisionTree> &trees() const noexcept { return trees_; }

    static RandomForestModel from_json(const nlohmann::json &j);
    friend RandomForestModel train_rf(const Matrix &, const std::vector<std::string> &, const RfParams &);

private:
    RfParams params_;
    std::vector<DecisionTree> trees_;
};

class LinearSvmModel final : public Classifier {
public:
    ModelKind kind() const noexcept override { return ModelKind::svm; }
    std::vector<double> scores(std::span<const double> x) const override;
    nlohmann::json to_json() const override;

    static LinearSvmModel from_json(const nlohmann::json &j);
    friend LinearSvmModel train_linear_svm(const Matrix &, const std::vector<std::string> &,
                                           const SvmParams &);

private:
    Matrix weights_; // classes x features
    std::vector<double> bias_;
};

class KnnModel final : public Classifier {
public:
    ModelKind kind() const noexcept override { return ModelKind::knn; }
    /// Neighbour vote counts per class.
    std::vector<double> scores(std::span<const double> x) const override;
    nlohmann::json to_json() const override;

    static KnnModel from_json(const nlohmann::json &j);
    friend KnnModel train_knn(const Matrix &, const std::vector<std::string> &, const KnnParams &);

private:
    std::size_t k_ = 1;
    Matrix points_;
    std::vector<std::size_t> targets_;
};

/// One-hidden-layer perceptron: rectifier hidden layer, softmax output,
/// trained by mini-batch gradient descent on mean cross-entropy.
class MlpModel final : public Classifier {
public:
    ModelKind kind() const noexcept override { return ModelKind::mlp; }
    /// Class probabilities (sum to 1).
    std::vector<double> scores(std::span<const double> x) const override;
    nlohmann::json to_json() const override;

    /// Randomly initialised (He) network for d inputs and the given classes.
    MlpModel(std::size_t d, std::vector<std::string> classes, const MlpParams &params);

    std::size_t n_parameters() const noexcept;
    /// Flattened [W1 (h x d), b1 (h), W2 (c x h), b2 (c)].
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> p);
    /// Mean cross-entropy over the rows of `x`; fills `grad` (same layout as
    /// parameters()) when non-null.
    double loss_and_gradient(const Matrix &x, std::span<const std::size_t> targets,
                             std::vector<double> *grad) const;

    const MlpParams &params() const noexcept { return params_; }
    static MlpModel from_json(const nlohmann::json &j);
    friend MlpModel train_mlp(const Matrix &, const std::vector<std::string> &, const MlpParams &);

private:
    MlpModel() = default;
    MlpParams params_;
    std::size_t hidden_ = 0;
    std::vector<double> w1_, b1_, w2_, b2_;
};

RandomForestModel train_rf(const Matrix &x, const std::vector<std::string> &labels, const RfParams &params = {});
LinearSvmModel train_linear_svm(const Matrix &x, const std::vector<std::string> &labels,
                                const SvmParams &params = {});
KnnModel train_knn(const Matrix &x, const std::vector<std::string> &labels, const KnnParams &params = {});
MlpModel train_mlp(const Matrix &x, const std::vector<std::string> &labels, const MlpParams &params = {});

using Trainer =
    std::function<std::unique_ptr<Classifier>(const Matrix &, const std::vector<std::string> &)>;

Trainer make_trainer(const ModelConfig &config);

/// Versioned model JSON: {"format": "counterscope-model", "version": 1, "kind": ...}.
std::unique_ptr<Classifier> classifier_from_json(const nlohmann::json &j);

struct ClassMetrics {
    std::string label;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct EvaluationReport {
    std::vector<std::string> classes;
    /// Rows are true classes, columns predicted classes.
    std::vector<std::vector<std::size_t>> confusion;
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::vector<EvaluationReport> folds;
    std::vector<std::string> fold_names;
    std::optional<double> fold_accuracy_mean;
    std::optional<double> fold_accuracy_std;
};

/// Derives every scalar from the confusion matrix. Macro averages cover the
/// classes that occur as a true or a predicted label.
EvaluationReport report_from_confusion(std::vector<std::string> classes,
                                       std::vector<std::vector<std::size_t>> confusion);
EvaluationReport score_predictions(const std::vector<std::string> &classes,
                                   const std::vector<std::string> &truth,
                                   const std::vector<std::string> &predicted);
/// Throws Error(unknown_label) if a true label is outside the model's classes.
EvaluationReport evaluate(const Classifier &model, const Matrix &x, const std::vector<std::string> &labels);

nlohmann::json report_to_json(const EvaluationReport &r);
/// Per-class rows followed by macro and accuracy rows (and per-fold accuracy rows).
std::string report_to_csv(const EvaluationReport &r);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per-label proportional split; indices come back sorted. Every label needs
/// at least 2 items so both sides get one.
Split stratified_split(const std::vector<std::string> &labels, double train_fraction, std::uint64_t seed);

/// Stratified folds: each label's shuffled items are dealt round-robin, labels
/// in sorted order. k == n gives leave-one-out.
std::vector<Split> stratified_kfold(const std::vector<std::string> &labels, std::size_t k, std::uint64_t seed);

struct GroupFolds {
    std::vector<std::string> groups; // sorted
    std::vector<Split> folds;        // fold g tests on groups[g]
};
GroupFolds lopo_folds(const std::vector<std::string> &groups);

/// Runs `predict_fold` on every split and aggregates: the top-level confusion
/// is the sum over folds and fold accuracies are summarized as mean and
/// population stddev.
using FoldPredictor = std::function<std::vector<std::string>(const Split &)>;
EvaluationReport cross_validate(const std::vector<std::string> &labels, const std::vector<Split> &folds,
                                const FoldPredictor &predict_fold,
                                const std::vector<std::string> &fold_names = {});

EvaluationReport kfold_cv(const Matrix &x, const std::vector<std::string> &labels, std::size_t k,
                          const Trainer &trainer, std::uint64_t seed);
EvaluationReport lopo_cv(const Matrix &x, const std::vector<std::string> &labels,
                         const std::vector<std::string> &groups, const Trainer &trainer);

struct GridResult {
    std::size_t best_index = 0;
    ModelConfig best;
    EvaluationReport report;
    std::vector<double> mean_accuracy; // one per grid entry
};

/// Exhaustive k-fold search; highest mean fold accuracy wins, earlier entries
/// win ties.
GridResult grid_search(const Matrix &x, const std::vector<std::string> &labels,
                       const std::vector<ModelConfig> &grid, std::size_t k, std::uint64_t seed);

/// Shared by the matrix-level and corpus-level searches.
GridResult select_best(const std::vector<ModelConfig> &grid,
                       const std::function<EvaluationReport(const ModelConfig &)> &run_cv);

} // namespace counterscope
