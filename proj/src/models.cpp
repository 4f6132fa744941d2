#include "counterscope/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "counterscope/error.hpp"
#include "counterscope/rng.hpp"
#include "counterscope/traces.hpp"

namespace counterscope {

using nlohmann::json;

namespace {

constexpr const char *kModelFormat = "counterscope-model";
constexpr int kModelVersion = 1;

struct Encoded {
    std::vector<std::string> classes;
    std::vector<std::size_t> y;
};

Encoded encode_labels(const Matrix &x, const std::vector<std::string> &labels) {
    if (x.rows == 0 || x.cols == 0)
        throw Error(Errc::degenerate_input, "empty feature matrix");
    if (labels.size() != x.rows)
        throw Error(Errc::degenerate_input, "labels (" + std::to_string(labels.size()) +
                                                ") do not match rows (" + std::to_string(x.rows) + ")");
    for (double v : x.data)
        if (!std::isfinite(v))
            throw Error(Errc::degenerate_input, "non-finite feature value");
    Encoded e;
    std::set<std::string> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2)
        throw Error(Errc::degenerate_input, "training needs at least 2 classes");
    e.classes.assign(distinct.begin(), distinct.end());
    e.y.reserve(labels.size());
    for (const auto &l : labels)
        e.y.push_back(static_cast<std::size_t>(
            std::lower_bound(e.classes.begin(), e.classes.end(), l) - e.classes.begin()));
    return e;
}

std::size_t argmax(const std::vector<double> &v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best])
            best = i;
    return best;
}

json model_header(const Classifier &m) {
    return {{"format", kModelFormat},
            {"version", kModelVersion},
            {"kind", to_string(m.kind())},
            {"classes", m.classes()},
            {"n_features", m.n_features()}};
}

void check_header(const json &j, ModelKind expected) {
    if (!j.is_object() || j.value("format", std::string{}) != kModelFormat)
        throw Error(Errc::invalid_model, "not a counterscope model");
    if (j.value("version", 0) != kModelVersion)
        throw Error(Errc::invalid_model, "unsupported model version");
    if (j.value("kind", std::string{}) != to_string(expected))
        throw Error(Errc::invalid_model, "model kind mismatch");
}

json matrix_to_json(const Matrix &m) { return {{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}}; }

Matrix matrix_from_json(const json &j) {
    Matrix m;
    m.rows = j.at("rows").get<std::size_t>();
    m.cols = j.at("cols").get<std::size_t>();
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols)
        throw Error(Errc::invalid_model, "matrix data size mismatch");
    return m;
}

template <typename F> auto guarded(F &&f) {
    try {
        return f();
    } catch (const json::exception &e) {
        throw Error(Errc::invalid_model, e.what());
    }
}

// ---------------------------------------------------------------- random forest

class TreeBuilder {
public:
    TreeBuilder(const Matrix &x, const std::vector<std::size_t> &y, std::size_t n_classes,
                const RfParams &params, std::size_t n_candidates, std::uint64_t seed)
        : x_(x), y_(y), n_classes_(n_classes), params_(params), n_candidates_(n_candidates), rng_(seed) {}

    DecisionTree grow() {
        const std::size_t n = x_.rows;
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<std::size_t> sample(n);
        for (auto &s : sample)
            s = pick(rng_);
        build(sample, 0);
        return std::move(tree_);
    }

private:
    int make_leaf(std::size_t node, const std::vector<std::size_t> &counts, std::size_t total) {
        auto &leaf = tree_.nodes[node];
        leaf.distribution.resize(n_classes_);
        for (std::size_t c = 0; c < n_classes_; ++c)
            leaf.distribution[c] = static_cast<double>(counts[c]) / static_cast<double>(total);
        return static_cast<int>(node);
    }

    int build(std::vector<std::size_t> &idx, std::size_t depth) {
        const std::size_t node = tree_.nodes.size();
        tree_.nodes.emplace_back();
        std::vector<std::size_t> counts(n_classes_, 0);
        for (auto i : idx)
            ++counts[y_[i]];
        const std::size_t n = idx.size();
        const bool pure = *std::max_element(counts.begin(), counts.end()) == n;
        const bool depth_limited = params_.max_depth && depth >= *params_.max_depth;
        if (pure || n < params_.min_samples_split || n < 2 || depth_limited)
            return make_leaf(node, counts, n);

        // Sample candidate features without replacement, then scan them in
        // ascending index order so equal-gain ties go to the lowest feature.
        std::vector<std::size_t> features(x_.cols);
        std::iota(features.begin(), features.end(), 0);
        for (std::size_t i = 0; i < n_candidates_; ++i) {
            std::uniform_int_distribution<std::size_t> d(i, features.size() - 1);
            std::swap(features[i], features[d(rng_)]);
        }
        features.resize(n_candidates_);
        std::sort(features.begin(), features.end());

        bool found = false;
        double best_score = 0.0;
        std::size_t best_feature = 0;
        double best_threshold = 0.0, best_upper = 0.0;
        std::vector<std::size_t> order = idx;
        std::vector<std::size_t> left(n_classes_);
        for (auto f : features) {
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return x_(a, f) < x_(b, f); });
            std::fill(left.begin(), left.end(), 0);
            for (std::size_t pos = 0; pos + 1 < n; ++pos) {
                ++left[y_[order[pos]]];
                const double here = x_(order[pos], f);
                const double next = x_(order[pos + 1], f);
                if (here == next)
                    continue;
                const double nl = static_cast<double>(pos + 1);
                const double nr = static_cast<double>(n - pos - 1);
                // Maximizing sum(l^2)/nl + sum(r^2)/nr minimizes weighted Gini.
                double sl = 0.0, sr = 0.0;
                for (std::size_t c = 0; c < n_classes_; ++c) {
                    const double l = static_cast<double>(left[c]);
                    const double r = static_cast<double>(counts[c] - left[c]);
                    sl += l * l;
                    sr += r * r;
                }
                const double score = sl / nl + sr / nr;
                if (!found || score > best_score) {
                    found = true;
                    best_score = score;
                    best_feature = f;
                    best_threshold = here;
                    best_upper = next;
                }
            }
        }
        if (!found)
            return make_leaf(node, counts, n);

        std::vector<std::size_t> lo, hi;
        for (auto i : idx)
            (x_(i, best_feature) <= best_threshold ? lo : hi).push_back(i);
        idx.clear();
        idx.shrink_to_fit();
        const int l = build(lo, depth + 1);
        const int r = build(hi, depth + 1);
        auto &nd = tree_.nodes[node];
        nd.feature = static_cast<int>(best_feature);
        nd.threshold = best_threshold;
        nd.upper = best_upper;
        nd.left = l;
        nd.right = r;
        return static_cast<int>(node);
    }

    const Matrix &x_;
    const std::vector<std::size_t> &y_;
    std::size_t n_classes_;
    const RfParams &params_;
    std::size_t n_candidates_;
    Rng rng_;
    DecisionTree tree_;
};

json tree_node_to_json(const DecisionTree &t, int i) {
    const auto &n = t.nodes[static_cast<std::size_t>(i)];
    if (n.feature < 0)
        return {{"distribution", n.distribution}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"upper", n.upper},
            {"left", tree_node_to_json(t, n.left)},
            {"right", tree_node_to_json(t, n.right)}};
}

int tree_node_from_json(DecisionTree &t, const json &j, std::size_t n_classes, std::size_t n_features) {
    const auto node = t.nodes.size();
    t.nodes.emplace_back();
    if (j.contains("distribution")) {
        auto d = j.at("distribution").get<std::vector<double>>();
        if (d.size() != n_classes)
            throw Error(Errc::invalid_model, "leaf distribution size mismatch");
        t.nodes[node].distribution = std::move(d);
        return static_cast<int>(node);
    }
    const int f = j.at("feature").get<int>();
    if (f < 0 || static_cast<std::size_t>(f) >= n_features)
        throw Error(Errc::invalid_model, "split feature out of range");
    const double thr = j.at("threshold").get<double>();
    const double upper = j.at("upper").get<double>();
    if (!(thr < upper))
        throw Error(Errc::invalid_model, "split needs threshold < upper");
    const int l = tree_node_from_json(t, j.at("left"), n_classes, n_features);
    const int r = tree_node_from_json(t, j.at("right"), n_classes, n_features);
    auto &nd = t.nodes[node];
    nd.feature = f;
    nd.threshold = thr;
    nd.upper = upper;
    nd.left = l;
    nd.right = r;
    return static_cast<int>(node);
}

json optional_to_json(const std::optional<std::size_t> &v) { return v ? json(*v) : json(nullptr); }

std::optional<std::size_t> optional_from_json(const json &j, const char *key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null())
        return std::nullopt;
    return it->get<std::size_t>();
}

} // namespace

std::string_view to_string(ModelKind k) noexcept {
    switch (k) {
    case ModelKind::rf: return "rf";
    case ModelKind::svm: return "svm";
    case ModelKind::knn: return "knn";
    case ModelKind::mlp: return "mlp";
    }
    return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) noexcept {
    if (s == "rf")
        return ModelKind::rf;
    if (s == "svm")
        return ModelKind::svm;
    if (s == "knn")
        return ModelKind::knn;
    if (s == "mlp")
        return ModelKind::mlp;
    return std::nullopt;
}

ModelKind kind_of(const ModelConfig &c) noexcept { return static_cast<ModelKind>(c.index()); }

json model_config_to_json(const ModelConfig &c) {
    return std::visit(
        [](const auto &p) -> json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, RfParams>)
                return {{"model", "rf"},
                        {"n_trees", p.n_trees},
                        {"max_depth", optional_to_json(p.max_depth)},
                        {"min_samples_split", p.min_samples_split},
                        {"feature_subsample", optional_to_json(p.feature_subsample)},
                        {"seed", p.seed}};
            else if constexpr (std::is_same_v<T, SvmParams>)
                return {{"model", "svm"}, {"lr", p.lr}, {"epochs", p.epochs},
                        {"reg_lambda", p.reg_lambda}, {"seed", p.seed}};
            else if constexpr (std::is_same_v<T, KnnParams>)
                return {{"model", "knn"}, {"k", p.k}};
            else
                return {{"model", "mlp"},        {"hidden", p.hidden},         {"learning_rate", p.learning_rate},
                        {"epochs", p.epochs},    {"batch_size", p.batch_size}, {"seed", p.seed}};
        },
        c);
}

ModelConfig model_config_from_json(const json &j) {
    return guarded([&]() -> ModelConfig {
        auto kind = parse_model_kind(j.at("model").get<std::string>());
        if (!kind)
            throw Error(Errc::invalid_model, "unknown model '" + j.at("model").get<std::string>() + "'");
        switch (*kind) {
        case ModelKind::rf: {
            RfParams p;
            p.n_trees = j.value("n_trees", p.n_trees);
            p.max_depth = optional_from_json(j, "max_depth");
            p.min_samples_split = j.value("min_samples_split", p.min_samples_split);
            p.feature_subsample = optional_from_json(j, "feature_subsample");
            p.seed = j.value("seed", p.seed);
            return p;
        }
        case ModelKind::svm: {
            SvmParams p;
            p.lr = j.value("lr", p.lr);
            p.epochs = j.value("epochs", p.epochs);
            p.reg_lambda = j.value("reg_lambda", p.reg_lambda);
            p.seed = j.value("seed", p.seed);
            return p;
        }
        case ModelKind::knn: {
            KnnParams p;
            p.k = j.value("k", p.k);
            return p;
        }
        case ModelKind::mlp: {
            MlpParams p;
            p.hidden = j.value("hidden", p.hidden);
            p.learning_rate = j.value("learning_rate", p.learning_rate);
            p.epochs = j.value("epochs", p.epochs);
            p.batch_size = j.value("batch_size", p.batch_size);
            p.seed = j.value("seed", p.seed);
            return p;
        }
        }
        throw Error(Errc::invalid_model, "unreachable");
    });
}

ModelConfig with_seed(ModelConfig c, std::uint64_t seed) {
    std::visit(
        [seed](auto &p) {
            if constexpr (requires { p.seed; })
                p.seed = seed;
        },
        c);
    return c;
}

std::size_t Classifier::predict_index(std::span<const double> x) const {
    if (x.size() != n_features_)
        throw Error(Errc::degenerate_input, "expected " + std::to_string(n_features_) + " features, got " +
                                                std::to_string(x.size()));
    return argmax(scores(x));
}

std::vector<std::string> Classifier::predict(const Matrix &x) const {
    std::vector<std::string> out;
    out.reserve(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        out.push_back(classes_[predict_index(x.row(i))]);
    return out;
}

namespace {
void descend(const DecisionTree &t, std::size_t i, std::span<const double> x, double w, std::vector<double> &out) {
    while (t.nodes[i].feature >= 0) {
        const auto &n = t.nodes[i];
        const double v = x[static_cast<std::size_t>(n.feature)];
        if (v <= n.threshold) {
            i = static_cast<std::size_t>(n.left);
        } else if (v >= n.upper) {
            i = static_cast<std::size_t>(n.right);
        } else {
            w *= 0.5;
            descend(t, static_cast<std::size_t>(n.left), x, w, out);
            i = static_cast<std::size_t>(n.right);
        }
    }
    const auto &d = t.nodes[i].distribution;
    for (std::size_t c = 0; c < out.size(); ++c)
        out[c] += w * d[c];
}
} // namespace

void DecisionTree::accumulate(std::span<const double> x, double weight, std::vector<double> &out) const {
    descend(*this, 0, x, weight, out);
}

std::vector<double> RandomForestModel::scores(std::span<const double> x) const {
    std::vector<double> acc(classes_.size(), 0.0);
    for (const auto &t : trees_)
        t.accumulate(x, 1.0, acc);
    for (auto &v : acc)
        v /= static_cast<double>(trees_.size());
    return acc;
}

json RandomForestModel::to_json() const {
    json j = model_header(*this);
    j["params"] = model_config_to_json(params_);
    auto trees = json::array();
    for (const auto &t : trees_)
        trees.push_back(tree_node_to_json(t, 0));
    j["trees"] = std::move(trees);
    return j;
}

RandomForestModel RandomForestModel::from_json(const json &j) {
    check_header(j, ModelKind::rf);
    return guarded([&] {
        RandomForestModel m;
        m.classes_ = j.at("classes").get<std::vector<std::string>>();
        m.n_features_ = j.at("n_features").get<std::size_t>();
        m.params_ = std::get<RfParams>(model_config_from_json(j.at("params")));
        for (const auto &t : j.at("trees")) {
            DecisionTree tree;
            tree_node_from_json(tree, t, m.classes_.size(), m.n_features_);
            m.trees_.push_back(std::move(tree));
        }
        if (m.trees_.empty())
            throw Error(Errc::invalid_model, "forest has no trees");
        return m;
    });
}

RandomForestModel train_rf(const Matrix &x, const std::vector<std::string> &labels, const RfParams &params) {
    auto enc = encode_labels(x, labels);
    if (params.n_trees < 1)
        throw Error(Errc::degenerate_input, "n_trees must be >= 1");
    const std::size_t d = x.cols;
    std::size_t m = params.feature_subsample.value_or(
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d)))));
    m = std::clamp<std::size_t>(m, 1, d);

    RandomForestModel model;
    model.classes_ = enc.classes;
    model.n_features_ = d;
    model.params_ = params;
    model.params_.feature_subsample = m;
    model.trees_.resize(params.n_trees);

    auto grow = [&](std::size_t t) {
        TreeBuilder b(x, enc.y, enc.classes.size(), model.params_, m, derive_seed(params.seed, t));
        model.trees_[t] = b.grow();
    };
    const std::size_t threads = std::clamp<std::size_t>(params.n_threads, 1, params.n_trees);
    if (threads == 1) {
        for (std::size_t t = 0; t < params.n_trees; ++t)
            grow(t);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t t = w; t < params.n_trees; t += threads)
                    grow(t);
            });
        for (auto &th : pool)
            th.join();
    }
    model.params_.n_threads = 1;
    return model;
}

// ---------------------------------------------------------------- linear SVM

std::vector<double> LinearSvmModel::scores(std::span<const double> x) const {
    std::vector<double> s(classes_.size());
    for (std::size_t c = 0; c < s.size(); ++c) {
        auto w = weights_.row(c);
        s[c] = std::inner_product(w.begin(), w.end(), x.begin(), bias_[c]);
    }
    return s;
}

json LinearSvmModel::to_json() const {
    json j = model_header(*this);
    j["weights"] = matrix_to_json(weights_);
    j["bias"] = bias_;
    return j;
}

LinearSvmModel LinearSvmModel::from_json(const json &j) {
    check_header(j, ModelKind::svm);
    return guarded([&] {
        LinearSvmModel m;
        m.classes_ = j.at("classes").get<std::vector<std::string>>();
        m.n_features_ = j.at("n_features").get<std::size_t>();
        m.weights_ = matrix_from_json(j.at("weights"));
        m.bias_ = j.at("bias").get<std::vector<double>>();
        if (m.weights_.rows != m.classes_.size() || m.weights_.cols != m.n_features_ ||
            m.bias_.size() != m.classes_.size())
            throw Error(Errc::invalid_model, "svm weight shape mismatch");
        return m;
    });
}

LinearSvmModel train_linear_svm(const Matrix &x, const std::vector<std::string> &labels, const SvmParams &params) {
    auto enc = encode_labels(x, labels);
    if (!(params.lr > 0.0) || !(params.reg_lambda >= 0.0))
        throw Error(Errc::degenerate_input, "svm needs lr > 0 and reg_lambda >= 0");
    const std::size_t c = enc.classes.size();
    const std::size_t d = x.cols;
    LinearSvmModel m;
    m.classes_ = enc.classes;
    m.n_features_ = d;
    m.weights_ = Matrix(c, d);
    m.bias_.assign(c, 0.0);
    Rng rng(params.seed);
    std::vector<std::size_t> order(x.rows);
    std::iota(order.begin(), order.end(), 0);
    const double shrink = 1.0 - params.lr * params.reg_lambda;
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (auto i : order) {
            auto xi = x.row(i);
            for (std::size_t k = 0; k < c; ++k) {
                const double target = enc.y[i] == k ? 1.0 : -1.0;
                auto w = m.weights_.row(k);
                const double margin = target * std::inner_product(w.begin(), w.end(), xi.begin(), m.bias_[k]);
                for (auto &v : w)
                    v *= shrink;
                if (margin < 1.0) {
                    for (std::size_t j = 0; j < d; ++j)
                        w[j] += params.lr * target * xi[j];
                    m.bias_[k] += params.lr * target;
                }
            }
        }
    }
    return m;
}

// ---------------------------------------------------------------- k-NN

std::vector<double> KnnModel::scores(std::span<const double> x) const {
    std::vector<std::pair<double, std::size_t>> dist(points_.rows);
    for (std::size_t i = 0; i < points_.rows; ++i) {
        auto p = points_.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j)
            s += (p[j] - x[j]) * (p[j] - x[j]);
        dist[i] = {s, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
    std::vector<double> votes(classes_.size(), 0.0);
    for (std::size_t i = 0; i < k_; ++i)
        votes[targets_[dist[i].second]] += 1.0;
    return votes;
}

json KnnModel::to_json() const {
    json j = model_header(*this);
    j["k"] = k_;
    j["points"] = matrix_to_json(points_);
    j["targets"] = targets_;
    return j;
}

KnnModel KnnModel::from_json(const json &j) {
    check_header(j, ModelKind::knn);
    return guarded([&] {
        KnnModel m;
        m.classes_ = j.at("classes").get<std::vector<std::string>>();
        m.n_features_ = j.at("n_features").get<std::size_t>();
        m.k_ = j.at("k").get<std::size_t>();
        m.points_ = matrix_from_json(j.at("points"));
        m.targets_ = j.at("targets").get<std::vector<std::size_t>>();
        if (m.points_.rows != m.targets_.size() || m.k_ < 1 || m.k_ > m.points_.rows)
            throw Error(Errc::invalid_model, "knn shape mismatch");
        for (auto t : m.targets_)
            if (t >= m.classes_.size())
                throw Error(Errc::invalid_model, "knn target out of range");
        return m;
    });
}

KnnModel train_knn(const Matrix &x, const std::vector<std::string> &labels, const KnnParams &params) {
    auto enc = encode_labels(x, labels);
    if (params.k < 1 || params.k > x.rows)
        throw Error(Errc::degenerate_input, "k must be in [1, n] (k=" + std::to_string(params.k) +
                                                ", n=" + std::to_string(x.rows) + ")");
    KnnModel m;
    m.classes_ = enc.classes;
    m.n_features_ = x.cols;
    m.k_ = params.k;
    m.points_ = x;
    m.targets_ = enc.y;
    return m;
}

// ---------------------------------------------------------------- MLP

MlpModel::MlpModel(std::size_t d, std::vector<std::string> classes, const MlpParams &params)
    : params_(params), hidden_(params.hidden) {
    classes_ = std::move(classes);
    n_features_ = d;
    const std::size_t c = classes_.size();
    if (d == 0 || hidden_ == 0 || c < 2)
        throw Error(Errc::degenerate_input, "mlp needs d > 0, hidden > 0 and >= 2 classes");
    Rng rng(params.seed);
    std::normal_distribution<double> n1(0.0, std::sqrt(2.0 / static_cast<double>(d)));
    std::normal_distribution<double> n2(0.0, std::sqrt(2.0 / static_cast<double>(hidden_)));
    w1_.resize(hidden_ * d);
    for (auto &w : w1_)
        w = n1(rng);
    b1_.assign(hidden_, 0.0);
    w2_.resize(c * hidden_);
    for (auto &w : w2_)
        w = n2(rng);
    b2_.assign(c, 0.0);
}

std::size_t MlpModel::n_parameters() const noexcept {
    return w1_.size() + b1_.size() + w2_.size() + b2_.size();
}

std::vector<double> MlpModel::parameters() const {
    std::vector<double> p;
    p.reserve(n_parameters());
    for (const auto *v : {&w1_, &b1_, &w2_, &b2_})
        p.insert(p.end(), v->begin(), v->end());
    return p;
}

void MlpModel::set_parameters(std::span<const double> p) {
    if (p.size() != n_parameters())
        throw Error(Errc::length_mismatch, "mlp parameter vector size");
    auto it = p.begin();
    for (auto *v : {&w1_, &b1_, &w2_, &b2_}) {
        std::copy(it, it + static_cast<std::ptrdiff_t>(v->size()), v->begin());
        it += static_cast<std::ptrdiff_t>(v->size());
    }
}

namespace {
void softmax_inplace(std::vector<double> &z) {
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto &v : z) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto &v : z)
        v /= sum;
}
} // namespace

std::vector<double> MlpModel::scores(std::span<const double> x) const {
    const std::size_t d = n_features_;
    std::vector<double> a1(hidden_);
    for (std::size_t h = 0; h < hidden_; ++h) {
        double z = b1_[h];
        for (std::size_t j = 0; j < d; ++j)
            z += w1_[h * d + j] * x[j];
        a1[h] = std::max(0.0, z);
    }
    std::vector<double> z2(b2_);
    for (std::size_t c = 0; c < z2.size(); ++c)
        for (std::size_t h = 0; h < hidden_; ++h)
            z2[c] += w2_[c * hidden_ + h] * a1[h];
    softmax_inplace(z2);
    return z2;
}

double MlpModel::loss_and_gradient(const Matrix &x, std::span<const std::size_t> targets,
                                   std::vector<double> *grad) const {
    const std::size_t d = n_features_;
    const std::size_t c = classes_.size();
    if (x.cols != d || x.rows != targets.size() || x.rows == 0)
        throw Error(Errc::length_mismatch, "mlp batch shape");
    std::vector<double> gw1, gb1, gw2, gb2;
    if (grad) {
        gw1.assign(w1_.size(), 0.0);
        gb1.assign(b1_.size(), 0.0);
        gw2.assign(w2_.size(), 0.0);
        gb2.assign(b2_.size(), 0.0);
    }
    double loss = 0.0;
    std::vector<double> z1(hidden_), a1(hidden_), p(c), da1(hidden_);
    for (std::size_t i = 0; i < x.rows; ++i) {
        auto xi = x.row(i);
        for (std::size_t h = 0; h < hidden_; ++h) {
            double z = b1_[h];
            for (std::size_t j = 0; j < d; ++j)
                z += w1_[h * d + j] * xi[j];
            z1[h] = z;
            a1[h] = std::max(0.0, z);
        }
        for (std::size_t k = 0; k < c; ++k) {
            double z = b2_[k];
            for (std::size_t h = 0; h < hidden_; ++h)
                z += w2_[k * hidden_ + h] * a1[h];
            p[k] = z;
        }
        softmax_inplace(p);
        const std::size_t y = targets[i];
        if (y >= c)
            throw Error(Errc::length_mismatch, "mlp target out of range");
        loss -= std::log(std::max(p[y], 1e-300));
        if (!grad)
            continue;
        std::fill(da1.begin(), da1.end(), 0.0);
        for (std::size_t k = 0; k < c; ++k) {
            const double dz = p[k] - (k == y ? 1.0 : 0.0);
            gb2[k] += dz;
            for (std::size_t h = 0; h < hidden_; ++h) {
                gw2[k * hidden_ + h] += dz * a1[h];
                da1[h] += w2_[k * hidden_ + h] * dz;
            }
        }
        for (std::size_t h = 0; h < hidden_; ++h) {
            if (z1[h] <= 0.0)
                continue;
            gb1[h] += da1[h];
            for (std::size_t j = 0; j < d; ++j)
                gw1[h * d + j] += da1[h] * xi[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(x.rows);
    if (grad) {
        grad->clear();
        grad->reserve(n_parameters());
        for (auto *v : {&gw1, &gb1, &gw2, &gb2})
            for (double g : *v)
                grad->push_back(g * inv);
    }
    return loss * inv;
}

json MlpModel::to_json() const {
    json j = model_header(*this);
    j["params"] = model_config_to_json(params_);
    j["hidden"] = hidden_;
    j["w1"] = w1_;
    j["b1"] = b1_;
    j["w2"] = w2_;
    j["b2"] = b2_;
    return j;
}

MlpModel MlpModel::from_json(const json &j) {
    check_header(j, ModelKind::mlp);
    return guarded([&] {
        MlpModel m;
        m.classes_ = j.at("classes").get<std::vector<std::string>>();
        m.n_features_ = j.at("n_features").get<std::size_t>();
        m.params_ = std::get<MlpParams>(model_config_from_json(j.at("params")));
        m.hidden_ = j.at("hidden").get<std::size_t>();
        m.w1_ = j.at("w1").get<std::vector<double>>();
        m.b1_ = j.at("b1").get<std::vector<double>>();
        m.w2_ = j.at("w2").get<std::vector<double>>();
        m.b2_ = j.at("b2").get<std::vector<double>>();
        const auto c = m.classes_.size();
        if (m.w1_.size() != m.hidden_ * m.n_features_ || m.b1_.size() != m.hidden_ ||
            m.w2_.size() != c * m.hidden_ || m.b2_.size() != c)
            throw Error(Errc::invalid_model, "mlp weight shape mismatch");
        return m;
    });
}

MlpModel train_mlp(const Matrix &x, const std::vector<std::string> &labels, const MlpParams &params) {
    auto enc = encode_labels(x, labels);
    if (params.batch_size < 1 || !(params.learning_rate > 0.0))
        throw Error(Errc::degenerate_input, "mlp needs batch_size >= 1 and learning_rate > 0");
    MlpModel m(x.cols, enc.classes, params);
    Rng rng(derive_seed(params.seed, 1));
    std::vector<std::size_t> order(x.rows);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> p = m.parameters();
    std::vector<double> grad;
    std::vector<std::size_t> batch_targets;
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += params.batch_size) {
            const std::size_t end = std::min(order.size(), start + params.batch_size);
            std::span<const std::size_t> ids(order.data() + start, end - start);
            Matrix batch = x.select_rows(ids);
            batch_targets.clear();
            for (auto i : ids)
                batch_targets.push_back(enc.y[i]);
            m.loss_and_gradient(batch, batch_targets, &grad);
            for (std::size_t q = 0; q < p.size(); ++q)
                p[q] -= params.learning_rate * grad[q];
            m.set_parameters(p);
        }
    }
    return m;
}

// ---------------------------------------------------------------- factory / IO

Trainer make_trainer(const ModelConfig &config) {
    return std::visit(
        [](const auto &p) -> Trainer {
            using T = std::decay_t<decltype(p)>;
            return [p](const Matrix &x, const std::vector<std::string> &y) -> std::unique_ptr<Classifier> {
                if constexpr (std::is_same_v<T, RfParams>)
                    return std::make_unique<RandomForestModel>(train_rf(x, y, p));
                else if constexpr (std::is_same_v<T, SvmParams>)
                    return std::make_unique<LinearSvmModel>(train_linear_svm(x, y, p));
                else if constexpr (std::is_same_v<T, KnnParams>)
                    return std::make_unique<KnnModel>(train_knn(x, y, p));
                else
                    return std::make_unique<MlpModel>(train_mlp(x, y, p));
            };
        },
        config);
}

std::unique_ptr<Classifier> classifier_from_json(const json &j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw Error(Errc::invalid_model, "model JSON lacks 'kind'");
    auto kind = parse_model_kind(j["kind"].get<std::string>());
    if (!kind)
        throw Error(Errc::invalid_model, "unknown model kind");
    switch (*kind) {
    case ModelKind::rf: return std::make_unique<RandomForestModel>(RandomForestModel::from_json(j));
    case ModelKind::svm: return std::make_unique<LinearSvmModel>(LinearSvmModel::from_json(j));
    case ModelKind::knn: return std::make_unique<KnnModel>(KnnModel::from_json(j));
    case ModelKind::mlp: return std::make_unique<MlpModel>(MlpModel::from_json(j));
    }
    throw Error(Errc::invalid_model, "unreachable");
}

// ---------------------------------------------------------------- evaluation

EvaluationReport report_from_confusion(std::vector<std::string> classes,
                                       std::vector<std::vector<std::size_t>> confusion) {
    const std::size_t c = classes.size();
    if (confusion.size() != c)
        throw Error(Errc::length_mismatch, "confusion rows vs classes");
    EvaluationReport r;
    std::size_t total = 0, correct = 0;
    std::vector<std::size_t> predicted(c, 0);
    for (std::size_t i = 0; i < c; ++i) {
        if (confusion[i].size() != c)
            throw Error(Errc::length_mismatch, "confusion matrix must be square");
        for (std::size_t j = 0; j < c; ++j) {
            total += confusion[i][j];
            predicted[j] += confusion[i][j];
        }
        correct += confusion[i][i];
    }
    r.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    std::size_t active = 0;
    for (std::size_t i = 0; i < c; ++i) {
        ClassMetrics m;
        m.label = classes[i];
        m.support = std::accumulate(confusion[i].begin(), confusion[i].end(), std::size_t{0});
        const double tp = static_cast<double>(confusion[i][i]);
        m.precision = predicted[i] ? tp / static_cast<double>(predicted[i]) : 0.0;
        m.recall = m.support ? tp / static_cast<double>(m.support) : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        if (m.support > 0 || predicted[i] > 0) {
            ++active;
            r.macro_precision += m.precision;
            r.macro_recall += m.recall;
            r.macro_f1 += m.f1;
        }
        r.per_class.push_back(std::move(m));
    }
    if (active) {
        r.macro_precision /= static_cast<double>(active);
        r.macro_recall /= static_cast<double>(active);
        r.macro_f1 /= static_cast<double>(active);
    }
    r.classes = std::move(classes);
    r.confusion = std::move(confusion);
    return r;
}

EvaluationReport score_predictions(const std::vector<std::string> &classes, const std::vector<std::string> &truth,
                                   const std::vector<std::string> &predicted) {
    if (truth.size() != predicted.size())
        throw Error(Errc::length_mismatch, "truth vs predictions");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < classes.size(); ++i)
        index.emplace(classes[i], i);
    std::vector<std::vector<std::size_t>> conf(classes.size(), std::vector<std::size_t>(classes.size(), 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        auto t = index.find(truth[i]);
        if (t == index.end())
            throw Error(Errc::unknown_label, "'" + truth[i] + "' is not a known class");
        auto p = index.find(predicted[i]);
        if (p == index.end())
            throw Error(Errc::unknown_label, "prediction '" + predicted[i] + "' is not a known class");
        ++conf[t->second][p->second];
    }
    return report_from_confusion(classes, std::move(conf));
}

EvaluationReport evaluate(const Classifier &model, const Matrix &x, const std::vector<std::string> &labels) {
    if (labels.size() != x.rows)
        throw Error(Errc::length_mismatch, "labels vs rows");
    return score_predictions(model.classes(), labels, model.predict(x));
}

json report_to_json(const EvaluationReport &r) {
    json per_class = json::array();
    for (const auto &m : r.per_class)
        per_class.push_back({{"label", m.label},
                             {"precision", m.precision},
                             {"recall", m.recall},
                             {"f1", m.f1},
                             {"support", m.support}});
    json j = {{"accuracy", r.accuracy},
              {"macro_precision", r.macro_precision},
              {"macro_recall", r.macro_recall},
              {"macro_f1", r.macro_f1},
              {"classes", r.classes},
              {"confusion", r.confusion},
              {"per_class", std::move(per_class)}};
    if (!r.folds.empty()) {
        json folds = json::array();
        for (const auto &f : r.folds)
            folds.push_back(report_to_json(f));
        j["folds"] = std::move(folds);
        j["fold_names"] = r.fold_names;
    }
    if (r.fold_accuracy_mean)
        j["fold_accuracy_mean"] = *r.fold_accuracy_mean;
    if (r.fold_accuracy_std)
        j["fold_accuracy_std"] = *r.fold_accuracy_std;
    return j;
}

std::string report_to_csv(const EvaluationReport &r) {
    std::string s = "kind,label,precision,recall,f1,support,accuracy\n";
    auto row = [&](const std::string &kind, const std::string &label, double p, double rc, double f1,
                   std::size_t support, const std::string &acc) {
        s += kind + ',' + label + ',' + format_value(p) + ',' + format_value(rc) + ',' + format_value(f1) + ',' +
             std::to_string(support) + ',' + acc + '\n';
    };
    std::size_t total = 0;
    for (const auto &m : r.per_class) {
        row("class", m.label, m.precision, m.recall, m.f1, m.support, "");
        total += m.support;
    }
    row("macro", "", r.macro_precision, r.macro_recall, r.macro_f1, total, format_value(r.accuracy));
    for (std::size_t f = 0; f < r.folds.size(); ++f) {
        const auto &fr = r.folds[f];
        std::size_t n = 0;
        for (const auto &m : fr.per_class)
            n += m.support;
        row("fold", f < r.fold_names.size() ? r.fold_names[f] : std::to_string(f), fr.macro_precision,
            fr.macro_recall, fr.macro_f1, n, format_value(fr.accuracy));
    }
    return s;
}

// ---------------------------------------------------------------- protocols

namespace {
std::map<std::string, std::vector<std::size_t>> by_label(const std::vector<std::string> &labels) {
    std::map<std::string, std::vector<std::size_t>> m;
    for (std::size_t i = 0; i < labels.size(); ++i)
        m[labels[i]].push_back(i);
    return m;
}

Split complement(std::vector<std::size_t> test, std::size_t n) {
    std::sort(test.begin(), test.end());
    Split s;
    std::vector<bool> in_test(n, false);
    for (auto i : test)
        in_test[i] = true;
    for (std::size_t i = 0; i < n; ++i)
        if (!in_test[i])
            s.train.push_back(i);
    s.test = std::move(test);
    return s;
}

std::vector<std::string> pick(const std::vector<std::string> &v, const std::vector<std::size_t> &idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (auto i : idx)
        out.push_back(v[i]);
    return out;
}
} // namespace

Split stratified_split(const std::vector<std::string> &labels, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw Error(Errc::precondition, "train_fraction must be in (0, 1)");
    Split s;
    std::size_t li = 0;
    for (auto &[label, idx] : by_label(labels)) {
        if (idx.size() < 2)
            throw Error(Errc::label_too_small, "label '" + label + "' has fewer than 2 items");
        Rng rng(derive_seed(seed, li++));
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n = idx.size();
        auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
        n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
        s.train.insert(s.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        s.test.insert(s.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

std::vector<Split> stratified_kfold(const std::vector<std::string> &labels, std::size_t k, std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (k < 2 || k > n)
        throw Error(Errc::precondition, "k must be in [2, n] (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
    auto groups = by_label(labels);
    if (k < n)
        for (const auto &[label, idx] : groups)
            if (idx.size() < k)
                throw Error(Errc::class_too_small, "label '" + label + "' has " + std::to_string(idx.size()) +
                                                       " items, fewer than k=" + std::to_string(k));
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> members(k);
    std::size_t pos = 0;
    for (auto &[label, idx] : groups) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (auto i : idx)
            members[pos++ % k].push_back(i);
    }
    std::vector<Split> folds;
    folds.reserve(k);
    for (auto &m : members)
        folds.push_back(complement(std::move(m), n));
    return folds;
}

GroupFolds lopo_folds(const std::vector<std::string> &groups) {
    std::map<std::string, std::vector<std::size_t>> m;
    for (std::size_t i = 0; i < groups.size(); ++i)
        m[groups[i]].push_back(i);
    if (m.size() < 2)
        throw Error(Errc::single_group, "leave-one-group-out needs at least 2 groups");
    GroupFolds g;
    for (auto &[name, idx] : m) {
        g.groups.push_back(name);
        g.folds.push_back(complement(std::move(idx), groups.size()));
    }
    return g;
}

EvaluationReport cross_validate(const std::vector<std::string> &labels, const std::vector<Split> &folds,
                                const FoldPredictor &predict_fold, const std::vector<std::string> &fold_names) {
    std::set<std::string> distinct(labels.begin(), labels.end());
    const std::vector<std::string> classes(distinct.begin(), distinct.end());
    std::vector<std::vector<std::size_t>> total(classes.size(), std::vector<std::size_t>(classes.size(), 0));
    std::vector<EvaluationReport> reports;
    reports.reserve(folds.size());
    for (const auto &split : folds) {
        auto pred = predict_fold(split);
        auto rep = score_predictions(classes, pick(labels, split.test), pred);
        for (std::size_t i = 0; i < classes.size(); ++i)
            for (std::size_t j = 0; j < classes.size(); ++j)
                total[i][j] += rep.confusion[i][j];
        reports.push_back(std::move(rep));
    }
    auto out = report_from_confusion(classes, std::move(total));
    double mean = 0.0;
    for (const auto &r : reports)
        mean += r.accuracy;
    mean /= static_cast<double>(std::max<std::size_t>(reports.size(), 1));
    double var = 0.0;
    for (const auto &r : reports)
        var += (r.accuracy - mean) * (r.accuracy - mean);
    var /= static_cast<double>(std::max<std::size_t>(reports.size(), 1));
    out.fold_accuracy_mean = mean;
    out.fold_accuracy_std = std::sqrt(var);
    out.folds = std::move(reports);
    out.fold_names = fold_names;
    if (out.fold_names.empty())
        for (std::size_t f = 0; f < folds.size(); ++f)
            out.fold_names.push_back(std::to_string(f));
    return out;
}

namespace {
FoldPredictor matrix_predictor(const Matrix &x, const std::vector<std::string> &labels, const Trainer &trainer) {
    return [&](const Split &s) {
        auto model = trainer(x.select_rows(s.train), pick(labels, s.train));
        return model->predict(x.select_rows(s.test));
    };
}
} // namespace

EvaluationReport kfold_cv(const Matrix &x, const std::vector<std::string> &labels, std::size_t k,
                          const Trainer &trainer, std::uint64_t seed) {
    if (labels.size() != x.rows)
        throw Error(Errc::length_mismatch, "labels vs rows");
    return cross_validate(labels, stratified_kfold(labels, k, seed), matrix_predictor(x, labels, trainer));
}

EvaluationReport lopo_cv(const Matrix &x, const std::vector<std::string> &labels,
                         const std::vector<std::string> &groups, const Trainer &trainer) {
    if (labels.size() != x.rows || groups.size() != x.rows)
        throw Error(Errc::length_mismatch, "labels/groups vs rows");
    auto g = lopo_folds(groups);
    return cross_validate(labels, g.folds, matrix_predictor(x, labels, trainer), g.groups);
}

GridResult select_best(const std::vector<ModelConfig> &grid,
                       const std::function<EvaluationReport(const ModelConfig &)> &run_cv) {
    if (grid.empty())
        throw Error(Errc::empty_grid, "grid search needs at least one configuration");
    GridResult out;
    double best = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto rep = run_cv(grid[i]);
        const double acc = rep.fold_accuracy_mean.value_or(rep.accuracy);
        out.mean_accuracy.push_back(acc);
        if (acc > best) {
            best = acc;
            out.best_index = i;
            out.best = grid[i];
            out.report = std::move(rep);
        }
    }
    return out;
}

GridResult grid_search(const Matrix &x, const std::vector<std::string> &labels,
                       const std::vector<ModelConfig> &grid, std::size_t k, std::uint64_t seed) {
    return select_best(grid, [&](const ModelConfig &c) { return kfold_cv(x, labels, k, make_trainer(c), seed); });
}

} // namespace counterscope
