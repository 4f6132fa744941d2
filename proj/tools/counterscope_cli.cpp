// counterscope: command-line front end for simulation, the attack pipeline
// and the countermeasures.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "counterscope/catalog.hpp"
#include "counterscope/defense.hpp"
#include "counterscope/error.hpp"
#include "counterscope/features.hpp"
#include "counterscope/models.hpp"
#include "counterscope/pipeline.hpp"
#include "counterscope/selection.hpp"
#include "counterscope/simulator.hpp"
#include "counterscope/stats.hpp"
#include "counterscope/stepcount.hpp"
#include "counterscope/svg.hpp"
#include "counterscope/traces.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace counterscope;

std::uint64_t default_seed() {
    if (const char *env = std::getenv("COUNTERSCOPE_SEED")) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size())
                return v;
        } catch (const std::exception &) {
        }
        throw CLI::ValidationError("COUNTERSCOPE_SEED", std::string("not an unsigned integer: ") + env);
    }
    return 42;
}

void write_text(const fs::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(Errc::io_error, "cannot write " + path.string());
    out << text;
}

void write_json(const fs::path &path, const json &j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::io_error, "cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw Error(Errc::parse_error, path.string() + ": " + e.what());
    }
}

std::string join(const std::vector<std::string> &v, char sep = ',') {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? std::string(1, sep) : std::string{}) + v[i];
    return s;
}

std::vector<std::string> split_list(const std::string &s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

/// Rewrites a path option to its absolute form so that outputs and the
/// echoed config do not depend on the working directory.
const CLI::Validator resolve_path(
    [](std::string &s) {
        s = fs::absolute(s).lexically_normal().string();
        return std::string{};
    },
    "", "resolve_path");

/// Options shared by every subcommand.
struct Common {
    std::string out = "out";
    std::string catalog;
    std::string profile;
    std::uint64_t seed = 0;

    fs::path out_dir() const {
        fs::create_directories(out);
        return out;
    }
    MetricCatalog load_cat() const { return catalog.empty() ? builtin_catalog() : load_catalog(catalog); }
    SimulationProfile load_prof() const { return profile.empty() ? default_profile() : load_profile(profile); }
};

void add_common(CLI::App *sub, Common &c, bool with_seed = true) {
    sub->add_option("--out,-o", c.out, "Output directory")->transform(resolve_path);
    sub->add_option("--catalog", c.catalog, "Metric catalog JSON (default: built-in 30 counters)")
        ->transform(resolve_path);
    sub->add_option("--profile", c.profile, "Simulator profile JSON (default: built-in)")->transform(resolve_path);
    if (with_seed) {
        c.seed = default_seed();
        sub->add_option("--seed", c.seed, "Seed (env COUNTERSCOPE_SEED overrides the default)");
    }
}

/// Echoes every option of `sub` with its resolved value.
void write_effective_config(const CLI::App *sub, const fs::path &dir) {
    json options = json::object();
    for (const auto *opt : sub->get_options()) {
        const auto name = opt->get_single_name();
        if (name.empty() || name == "help")
            continue;
        std::string value;
        if (opt->count() > 0)
            value = join(opt->results());
        else
            value = opt->get_default_str();
        if (name == "out" && opt->count() == 0)
            value = fs::absolute(value).lexically_normal().string();
        options[name] = value;
    }
    std::string path;
    for (const auto *a = sub; a; a = a->get_parent())
        path = a->get_name() + (path.empty() ? "" : " " + path);
    write_json(dir / "effective_config.json", {{"command", path}, {"options", options}});
}

/// Accepts "a,b,c" or "@file.json" holding a list of ids, a prune report
/// (its "retained" list) or screening output ("metrics" or [{"metric": ...}]).
std::vector<std::string> parse_metrics(const std::string &spec) {
    if (spec.empty())
        return {};
    if (spec.front() != '@')
        return split_list(spec);
    const json j = read_json(spec.substr(1));
    auto ids_of = [](const json &a) {
        std::vector<std::string> out;
        for (const auto &e : a)
            out.push_back(e.is_string() ? e.get<std::string>() : e.at("metric").get<std::string>());
        return out;
    };
    try {
        if (j.is_array())
            return ids_of(j);
        if (j.contains("retained"))
            return j.at("retained").get<std::vector<std::string>>();
        if (j.contains("metrics"))
            return ids_of(j.at("metrics"));
    } catch (const json::exception &e) {
        throw Error(Errc::schema_error, spec.substr(1) + ": " + e.what());
    }
    throw Error(Errc::schema_error, spec.substr(1) + ": no metric list found");
}

struct ModelOpts {
    std::string kind = "rf";
    std::string config_file;
    std::size_t trees = 100;
    std::size_t max_depth = 0;
    std::size_t threads = 1;
    std::size_t neighbors = 1;
    std::size_t epochs = 0;
    double lr = 0.0;
    double reg_lambda = 1e-3;
    std::size_t hidden = 32;
    std::size_t batch = 16;

    ModelConfig build(std::uint64_t seed) const {
        if (!config_file.empty())
            return with_seed(model_config_from_json(read_json(config_file)), seed);
        switch (*parse_model_kind(kind)) {
        case ModelKind::rf: {
            RfParams p;
            p.n_trees = trees;
            if (max_depth)
                p.max_depth = max_depth;
            p.n_threads = threads;
            p.seed = seed;
            return p;
        }
        case ModelKind::svm: {
            SvmParams p;
            if (epochs)
                p.epochs = epochs;
            if (lr > 0)
                p.lr = lr;
            p.reg_lambda = reg_lambda;
            p.seed = seed;
            return p;
        }
        case ModelKind::knn: return KnnParams{neighbors};
        case ModelKind::mlp: {
            MlpParams p;
            if (epochs)
                p.epochs = epochs;
            if (lr > 0)
                p.learning_rate = lr;
            p.hidden = hidden;
            p.batch_size = batch;
            p.seed = seed;
            return p;
        }
        }
        throw Error(Errc::invalid_model, kind);
    }
};

void add_model_opts(CLI::App *sub, ModelOpts &m) {
    sub->add_option("--model", m.kind, "Classifier")->check(CLI::IsMember({"rf", "svm", "knn", "mlp"}));
    sub->add_option("--model-config", m.config_file, "JSON model config (overrides --model and its knobs)")
        ->transform(resolve_path);
    sub->add_option("--trees", m.trees, "Random forest size")->check(CLI::PositiveNumber);
    sub->add_option("--max-depth", m.max_depth, "Random forest depth limit (0 = none)");
    sub->add_option("--threads", m.threads, "Random forest worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--neighbors", m.neighbors, "k for k-NN")->check(CLI::PositiveNumber);
    sub->add_option("--epochs", m.epochs, "SVM / MLP epochs (0 = model default)");
    sub->add_option("--lr", m.lr, "SVM / MLP learning rate (0 = model default)");
    sub->add_option("--reg-lambda", m.reg_lambda, "SVM L2 strength");
    sub->add_option("--hidden", m.hidden, "MLP hidden units")->check(CLI::PositiveNumber);
    sub->add_option("--batch-size", m.batch, "MLP mini-batch size")->check(CLI::PositiveNumber);
}

struct PipeOpts {
    std::string manifest;
    std::string layout = "stat4";
    std::string metrics;
    ModelOpts model;

    PipelineOptions build(std::uint64_t seed) const {
        PipelineOptions o;
        o.layout = *parse_layout(layout);
        o.metrics = parse_metrics(metrics);
        o.model = model.build(seed);
        return o;
    }
};

void add_pipe_opts(CLI::App *sub, PipeOpts &p) {
    sub->add_option("--manifest,-m", p.manifest, "Corpus manifest (JSON lines)")->required()->check(CLI::ExistingFile)
        ->transform(resolve_path);
    sub->add_option("--layout", p.layout, "Feature layout")->check(CLI::IsMember({"stat4", "stat2", "sequence"}));
    sub->add_option("--metrics", p.metrics, "Metric subset: a,b,c or @file.json");
    add_model_opts(sub, p.model);
}

void write_report(const EvaluationReport &r, const fs::path &dir, const std::string &title) {
    write_json(dir / "report.json", report_to_json(r));
    write_text(dir / "report.csv", report_to_csv(r));
    write_text(dir / "confusion.svg", svg::heatmap(title, r.classes, r.confusion));
}

void print_report(const EvaluationReport &r) {
    std::cout << "accuracy " << format_value(r.accuracy) << "  macro_f1 " << format_value(r.macro_f1);
    if (r.fold_accuracy_mean)
        std::cout << "  folds " << r.folds.size() << "  fold_accuracy " << format_value(*r.fold_accuracy_mean)
                  << " +/- " << format_value(r.fold_accuracy_std.value_or(0.0));
    std::cout << '\n';
}

svg::Series column_series(const TraceSet &t, const std::string &id) {
    svg::Series s{id, {}, t.column(id)};
    for (std::size_t i = 0; i < t.n_seconds(); ++i)
        s.x.push_back(static_cast<double>(t.t0()) + static_cast<double>(i));
    return s;
}

std::string pixels_csv(const std::vector<double> &pixels) {
    std::string s = "t_s,pixels\n";
    for (std::size_t t = 0; t < pixels.size(); ++t)
        s += std::to_string(t) + ',' + format_value(pixels[t]) + '\n';
    return s;
}

std::vector<double> read_pixels(const fs::path &path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io_error, "cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<double> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto comma = line.rfind(',');
        try {
            std::size_t used = 0;
            const auto cell = line.substr(comma == std::string::npos ? 0 : comma + 1);
            out.push_back(std::stod(cell, &used));
            if (used != cell.size())
                throw std::invalid_argument(cell);
        } catch (const std::exception &) {
            throw Error(Errc::parse_error, path.string() + ": row " + std::to_string(row));
        }
    }
    return out;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"counterscope: GPU-counter side-channel toolkit (simulate, fingerprint, count, defend)"};
    app.name("counterscope");
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
    app.require_subcommand(1);

    // simulate ---------------------------------------------------------------
    Common sim_c;
    std::string sim_scene;
    auto *sim = app.add_subcommand("simulate", "Render a scene script into a trace CSV and pixel coverage");
    add_common(sim, sim_c, false);
    sim->add_option("scene", sim_scene, "Scene script JSON")->required()->check(CLI::ExistingFile)
        ->transform(resolve_path);
    sim->callback([&] {
        const auto dir = sim_c.out_dir();
        const auto out = simulate(load_scene(sim_scene), sim_c.load_cat(), sim_c.load_prof());
        write_wide_csv(out.traces, dir / "trace.csv");
        write_text(dir / "pixels.csv", pixels_csv(out.ground_truth_pixels));
        json events = json::array();
        for (const auto &e : out.event_log)
            events.push_back({{"kind", e.kind}, {"label", e.label}, {"t_begin", e.t_begin}, {"t_end", e.t_end}});
        write_json(dir / "events.json", events);
        std::vector<svg::Series> plot;
        for (const char *id : {"non_base_level_textures", "gpu_utilization", "prims_trivially_rejected"})
            if (out.traces.metric_index(id))
                plot.push_back(column_series(out.traces, id));
        write_text(dir / "fingerprint.svg", svg::line_chart("Simulated counters", "t (s)", "value", plot));
        write_effective_config(sim, dir);
        std::cout << "wrote " << out.traces.n_seconds() << " s x " << out.traces.n_metrics() << " metrics to "
                  << (dir / "trace.csv").string() << '\n';
    });

    // make-scene -------------------------------------------------------------
    Common ms_c;
    std::string ms_kind = "pixel-sweep", ms_scene = "VR";
    std::size_t ms_seconds = 1000;
    int ms_participants = 4, ms_hold = 5;
    auto *ms = app.add_subcommand("make-scene", "Write a generated scene script (pixel sweep or avatar staircase)");
    add_common(ms, ms_c);
    ms->add_option("--kind", ms_kind, "Scene generator")->check(CLI::IsMember({"pixel-sweep", "staircase"}));
    ms->add_option("--scene", ms_scene, "Scene type")->check(CLI::IsMember({"AR", "VR"}));
    ms->add_option("--seconds", ms_seconds, "Pixel sweep length")->check(CLI::PositiveNumber);
    ms->add_option("--participants", ms_participants, "Avatars joining the staircase")->check(CLI::NonNegativeNumber);
    ms->add_option("--hold", ms_hold, "Seconds between avatar joins")->check(CLI::PositiveNumber);
    ms->callback([&] {
        const auto scene = *parse_scene_type(ms_scene);
        const auto script = ms_kind == "pixel-sweep"
                                ? make_pixel_sweep_script(scene, ms_seconds, ms_c.seed)
                                : staircase_script(ms_participants, ms_hold, {scene, ms_c.seed, false});
        const auto dir = ms_c.out_dir();
        write_json(dir / "scene.json", scene_to_json(script));
        write_effective_config(ms, dir);
        std::cout << "wrote " << (dir / "scene.json").string() << '\n';
    });

    // gen-corpus -------------------------------------------------------------
    Common gen_c;
    std::string gen_spec;
    std::size_t gen_apps = 0, gen_reps = 20, gen_duration = 30;
    auto *gen = app.add_subcommand("gen-corpus", "Generate a labeled corpus from a corpus spec");
    add_common(gen, gen_c);
    gen->add_option("spec", gen_spec, "Corpus spec JSON")->check(CLI::ExistingFile)->transform(resolve_path);
    gen->add_option("--apps", gen_apps, "Instead of a spec: demo app corpus with this many classes");
    gen->add_option("--reps", gen_reps, "Repetitions per class for --apps")->check(CLI::PositiveNumber);
    gen->add_option("--duration", gen_duration, "Capture length in seconds for --apps");
    gen->callback([&] {
        const auto cat = gen_c.load_cat();
        CorpusSpec spec;
        if (!gen_spec.empty()) {
            spec = load_corpus_spec(gen_spec);
            if (gen->count("--seed"))
                spec.seed = gen_c.seed;
        } else if (gen_apps > 0) {
            spec = make_app_corpus_spec(gen_apps, gen_reps, gen_c.seed, cat, gen_duration);
        } else {
            throw CLI::ValidationError("gen-corpus", "give a spec file or --apps N");
        }
        const auto dir = gen_c.out_dir();
        const auto corpus = generate_corpus(spec, cat, gen_c.load_prof());
        const auto manifest = write_manifest(corpus, dir);
        write_json(dir / "corpus_spec.json", corpus_spec_to_json(spec));
        write_effective_config(gen, dir);
        std::cout << "wrote " << corpus.size() << " traces, manifest " << manifest.string() << '\n';
    });

    // prune ------------------------------------------------------------------
    Common pr_c;
    std::string pr_manifest, pr_metrics;
    double pr_threshold = 0.90;
    bool pr_normalize = false;
    auto *pr = app.add_subcommand("prune", "Drop the second metric of every pair with |r| above the threshold");
    add_common(pr, pr_c, false);
    pr->add_option("--manifest,-m", pr_manifest, "Reference corpus manifest")->required()->check(CLI::ExistingFile)
        ->transform(resolve_path);
    pr->add_option("--threshold", pr_threshold, "Absolute Pearson threshold")->check(CLI::Range(0.0, 1.0));
    pr->add_option("--metrics", pr_metrics, "Candidate metrics (default: all, catalog order)");
    pr->add_flag("--per-item-normalize", pr_normalize, "Z-score each item before concatenation");
    pr->callback([&] {
        const auto corpus = read_manifest(pr_manifest);
        const auto cat = pr_c.load_cat();
        auto ids = parse_metrics(pr_metrics);
        if (ids.empty())
            ids = corpus.metrics();
        // Catalog order first; ids unknown to the catalog keep their order at the end.
        std::vector<std::string> known, extra;
        for (const auto &id : ids)
            (cat.find(id) ? known : extra).push_back(id);
        auto order = cat.in_catalog_order(known);
        order.insert(order.end(), extra.begin(), extra.end());
        const auto report = correlation_prune(corpus, order, pr_threshold, {pr_normalize});
        const auto dir = pr_c.out_dir();
        write_json(dir / "prune_report.json", prune_report_to_json(report));
        write_effective_config(pr, dir);
        std::cout << "retained " << report.retained.size() << ", dropped " << report.dropped.size() << '\n';
        for (const auto &d : report.dropped)
            std::cout << "  drop " << d.dropped << " (kept " << d.kept << ", r = " << format_value(d.r) << ")\n";
    });

    // screen -----------------------------------------------------------------
    Common sc_c;
    PipeOpts sc_p;
    double sc_threshold = 0.60;
    std::size_t sc_cap = 30;
    auto *sc = app.add_subcommand("screen", "Keep metrics that classify the corpus on their own");
    add_common(sc, sc_c);
    add_pipe_opts(sc, sc_p);
    sc->add_option("--threshold-acc", sc_threshold, "Minimum held-out accuracy")->check(CLI::Range(0.0, 1.0));
    sc->add_option("--cap", sc_cap, "Maximum number of metrics requested from the profiler");
    sc->callback([&] {
        const auto corpus = read_manifest(sc_p.manifest);
        auto ids = parse_metrics(sc_p.metrics);
        if (ids.empty())
            ids = corpus.metrics();
        const auto passed = accuracy_screen(corpus, ids, make_trainer(sc_p.model.build(sc_c.seed)), sc_threshold,
                                            sc_c.seed);
        json metrics = json::array();
        std::vector<std::string> names;
        for (const auto &r : passed) {
            metrics.push_back({{"metric", r.metric}, {"accuracy", r.accuracy}});
            names.push_back(r.metric);
        }
        const auto capped = enforce_cap(names, sc_cap);
        json out = {{"metrics", metrics}, {"selected", capped.ids}};
        if (!capped.warning.empty()) {
            out["warning"] = capped.warning;
            std::cerr << "warning: " << capped.warning << '\n';
        }
        const auto dir = sc_c.out_dir();
        write_json(dir / "screened_metrics.json", out);
        write_effective_config(sc, dir);
        std::cout << passed.size() << " of " << ids.size() << " metrics above " << format_value(sc_threshold)
                  << '\n';
    });

    // train / eval -----------------------------------------------------------
    Common tr_c;
    PipeOpts tr_p;
    double tr_fraction = 0.8;
    auto *tr = app.add_subcommand("train", "Fit normalizer + features + classifier on the train split");
    add_common(tr, tr_c);
    add_pipe_opts(tr, tr_p);
    tr->add_option("--train-fraction", tr_fraction, "Stratified train share")->check(CLI::Range(0.0, 1.0));
    tr->callback([&] {
        const auto corpus = read_manifest(tr_p.manifest);
        const auto split = stratified_split(corpus.labels(), tr_fraction, tr_c.seed);
        const auto train = corpus.subset(split.train);
        const auto p = fit_pipeline(train, tr_p.build(tr_c.seed));
        const auto dir = tr_c.out_dir();
        save_pipeline(p, dir / "model.json");
        write_effective_config(tr, dir);
        std::cout << "trained " << to_string(p.classifier->kind()) << " on " << train.size() << " items ("
                  << p.metrics().size() << " metrics, " << to_string(p.layout) << ")\n";
    });

    Common ev_c;
    std::string ev_manifest, ev_model;
    double ev_fraction = 0.8;
    bool ev_all = false;
    auto *ev = app.add_subcommand("eval", "Evaluate a trained model on the held-out split");
    add_common(ev, ev_c);
    ev->add_option("--manifest,-m", ev_manifest, "Corpus manifest")->required()->check(CLI::ExistingFile)
        ->transform(resolve_path);
    ev->add_option("--model-file", ev_model, "model.json written by train")->required()->check(CLI::ExistingFile)
        ->transform(resolve_path);
    ev->add_option("--train-fraction", ev_fraction, "Must match the value used for train")
        ->check(CLI::Range(0.0, 1.0));
    ev->add_flag("--all", ev_all, "Evaluate every item instead of the held-out split");
    ev->callback([&] {
        const auto corpus = read_manifest(ev_manifest);
        const auto p = load_pipeline(ev_model);
        const auto test =
            ev_all ? corpus : corpus.subset(stratified_split(corpus.labels(), ev_fraction, ev_c.seed).test);
        const auto report = p.evaluate(test);
        const auto dir = ev_c.out_dir();
        write_report(report, dir, "Confusion matrix");
        write_effective_config(ev, dir);
        print_report(report);
    });

    // cv / lopo / grid -------------------------------------------------------
    Common cv_c;
    PipeOpts cv_p;
    std::size_t cv_k = 5;
    auto *cv = app.add_subcommand("cv", "Stratified k-fold cross-validation");
    add_common(cv, cv_c);
    add_pipe_opts(cv, cv_p);
    cv->add_option("--k,-k", cv_k, "Number of folds")->check(CLI::Range(2, 1000000));
    cv->callback([&] {
        const auto corpus = read_manifest(cv_p.manifest);
        const auto report = corpus_kfold_cv(corpus, cv_p.build(cv_c.seed), cv_k, cv_c.seed);
        const auto dir = cv_c.out_dir();
        write_report(report, dir, std::to_string(cv_k) + "-fold confusion");
        write_effective_config(cv, dir);
        print_report(report);
    });

    Common lo_c;
    PipeOpts lo_p;
    auto *lo = app.add_subcommand("lopo", "Leave-one-group-out cross-validation");
    add_common(lo, lo_c);
    add_pipe_opts(lo, lo_p);
    lo->callback([&] {
        const auto corpus = read_manifest(lo_p.manifest);
        const auto report = corpus_lopo_cv(corpus, lo_p.build(lo_c.seed));
        const auto dir = lo_c.out_dir();
        write_report(report, dir, "Leave-one-group-out confusion");
        write_effective_config(lo, dir);
        print_report(report);
    });

    Common gr_c;
    PipeOpts gr_p;
    std::string gr_grid;
    std::size_t gr_k = 5;
    auto *gr = app.add_subcommand("grid", "Grid search with k-fold cross-validation");
    add_common(gr, gr_c);
    add_pipe_opts(gr, gr_p);
    gr->add_option("--grid", gr_grid, "JSON array of model configs")->required()->check(CLI::ExistingFile)
        ->transform(resolve_path);
    gr->add_option("--k,-k", gr_k, "Number of folds")->check(CLI::Range(2, 1000000));
    gr->callback([&] {
        const auto corpus = read_manifest(gr_p.manifest);
        const auto gj = read_json(gr_grid);
        if (!gj.is_array())
            throw Error(Errc::schema_error, gr_grid + ": expected a JSON array of model configs");
        std::vector<ModelConfig> grid;
        for (const auto &c : gj)
            grid.push_back(with_seed(model_config_from_json(c), gr_c.seed));
        const auto result = corpus_grid_search(corpus, gr_p.build(gr_c.seed), grid, gr_k, gr_c.seed);
        json entries = json::array();
        for (std::size_t i = 0; i < grid.size(); ++i)
            entries.push_back({{"config", model_config_to_json(grid[i])}, {"mean_accuracy", result.mean_accuracy[i]}});
        const auto dir = gr_c.out_dir();
        write_json(dir / "grid_report.json", {{"best_index", result.best_index},
                                              {"best", model_config_to_json(result.best)},
                                              {"entries", entries}});
        write_report(result.report, dir, "Best configuration, k-fold confusion");
        write_effective_config(gr, dir);
        std::cout << "best #" << result.best_index << ' ' << model_config_to_json(result.best).dump() << '\n';
        print_report(result.report);
    });

    // count ------------------------------------------------------------------
    Common co_c;
    std::string co_trace, co_scene = "VR";
    std::vector<std::string> co_jumps;
    double co_factor = 4.0;
    std::size_t co_window = 3, co_gap = 3;
    auto *co = app.add_subcommand("count", "Count participants from avatar step responses");
    add_common(co, co_c, false);
    co->add_option("--trace,-t", co_trace, "Wide trace CSV")->required()->check(CLI::ExistingFile)
        ->transform(resolve_path);
    co->add_option("--min-jump", co_jumps, "Per-metric threshold id=value (repeatable)");
    co->add_option("--min-jump-factor", co_factor, "Default threshold as a multiple of the profile sigma");
    co->add_option("--scene", co_scene, "Scene type for default thresholds")->check(CLI::IsMember({"AR", "VR"}));
    co->add_option("--window", co_window, "Detector half-window (s)")->check(CLI::PositiveNumber);
    co->add_option("--min-gap", co_gap, "Minimum spacing between events (s)");
    co->callback([&] {
        const auto trace = read_wide_csv(co_trace);
        const auto cat = co_c.load_cat();
        auto jumps = default_min_jumps(cat, *parse_scene_type(co_scene), co_c.load_prof(), co_factor);
        for (const auto &kv : co_jumps) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw CLI::ValidationError("--min-jump", "expected id=value, got " + kv);
            try {
                jumps[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
            } catch (const std::exception &) {
                throw CLI::ValidationError("--min-jump", "bad number in " + kv);
            }
        }
        const auto result = count_participants(trace, cat, jumps, co_window, co_gap);
        std::vector<MetricStep> steps;
        for (const auto &[id, _] : result.per_metric)
            for (const auto &e : detect_steps(trace.column(id), jumps.at(id), co_window, co_gap))
                steps.push_back({id, e});
        std::stable_sort(steps.begin(), steps.end(),
                         [](const MetricStep &a, const MetricStep &b) { return a.event.t < b.event.t; });
        const auto dir = co_c.out_dir();
        write_json(dir / "count.json", {{"count", result.count}, {"per_metric", result.per_metric}});
        write_text(dir / "steps.csv", steps_to_csv(steps));
        write_effective_config(co, dir);
        std::cout << "participants " << result.count << '\n';
    });

    // correlate --------------------------------------------------------------
    Common cr_c;
    std::string cr_pixels, cr_trace, cr_metric = "non_base_level_textures";
    auto *cr = app.add_subcommand("correlate", "Regress a metric on ground-truth pixel coverage");
    add_common(cr, cr_c, false);
    cr->add_option("--pixels", cr_pixels, "Pixel CSV (t_s,pixels)")->required()->check(CLI::ExistingFile)
        ->transform(resolve_path);
    cr->add_option("--trace,-t", cr_trace, "Wide trace CSV")->required()->check(CLI::ExistingFile)
        ->transform(resolve_path);
    cr->add_option("--metric", cr_metric, "Metric id");
    cr->callback([&] {
        const auto pixels = read_pixels(cr_pixels);
        const auto metric = read_wide_csv(cr_trace).column(cr_metric);
        const auto fit = stats::linreg(pixels, metric);
        const double r = stats::pearson(pixels, metric);
        const json out = {{"metric", cr_metric},   {"n", pixels.size()},           {"slope", fit.slope},
                          {"intercept", fit.intercept}, {"r_squared", fit.r_squared}, {"pearson", r}};
        const auto dir = cr_c.out_dir();
        write_json(dir / "correlation.json", out);
        write_effective_config(cr, dir);
        std::cout << "pearson " << format_value(r) << "  r_squared " << format_value(fit.r_squared) << '\n';
    });

    // defend -----------------------------------------------------------------
    auto *df = app.add_subcommand("defend", "Countermeasures: noise injection and access detection");
    df->require_subcommand(1);

    struct StrategyOpts {
        std::string kind = "gaussian";
        double sigma = 1.0, rate = 0.2, size = 2.0, depth = 2.0, hold = 1.0;
        NoiseStrategy build(std::uint64_t seed) const {
            if (kind == "gaussian")
                return GaussianNoise{sigma, seed};
            return DummyRender{rate, size, depth, hold, seed};
        }
    };
    auto add_strategy = [](CLI::App *sub, StrategyOpts &s) {
        sub->add_option("--strategy", s.kind, "Noise strategy")->check(CLI::IsMember({"gaussian", "dummy_render"}));
        sub->add_option("--sigma", s.sigma, "Gaussian scale, in multiples of each metric's sigma");
        sub->add_option("--rate", s.rate, "Decoy arrivals per second");
        sub->add_option("--size", s.size, "Decoy size");
        sub->add_option("--depth", s.depth, "Decoy depth");
        sub->add_option("--hold", s.hold, "Decoy lifetime (s)");
    };

    Common di_c;
    StrategyOpts di_s;
    std::string di_trace;
    auto *di = df->add_subcommand("inject", "Perturb a trace");
    add_common(di, di_c);
    add_strategy(di, di_s);
    di->add_option("--trace,-t", di_trace, "Wide trace CSV")->required()->check(CLI::ExistingFile)
        ->transform(resolve_path);
    di->callback([&] {
        const auto trace = read_wide_csv(di_trace);
        const auto noisy = inject_noise(trace, di_s.build(di_c.seed), di_c.load_cat(), di_c.load_prof());
        const auto dir = di_c.out_dir();
        write_wide_csv(noisy, dir / "trace.csv");
        write_effective_config(di, dir);
        std::cout << "wrote " << (dir / "trace.csv").string() << '\n';
    });

    Common dd_c;
    std::string dd_log;
    DetectorParams dd_p;
    auto *dd = df->add_subcommand("detect", "Flag periodic profiler reads in an access log");
    add_common(dd, dd_c, false);
    dd->add_option("--log", dd_log, "One timestamp (s) per line")->required()->check(CLI::ExistingFile)
        ->transform(resolve_path);
    dd->add_option("--min-events", dd_p.min_events, "Minimum number of reads");
    dd->add_option("--cv-threshold", dd_p.cv_threshold, "Maximum inter-arrival coefficient of variation");
    dd->add_option("--period", dd_p.expected_period_s, "Expected sampling period (s)");
    dd->add_option("--period-tolerance", dd_p.period_tolerance, "Allowed period deviation (s)");
    dd->callback([&] {
        const auto v = detect_profiler_access(read_access_log(dd_log), dd_p);
        const auto dir = dd_c.out_dir();
        write_json(dir / "verdict.json", verdict_to_json(v));
        write_effective_config(dd, dir);
        std::cout << (v.flagged ? "FLAGGED" : "not flagged") << "  events " << v.n_events << "  cv "
                  << format_value(v.cv) << '\n';
    });

    Common dc_c;
    PipeOpts dc_p;
    StrategyOpts dc_s;
    std::string dc_levels = "0,1,5,25,100";
    double dc_fraction = 0.8;
    auto *dc = df->add_subcommand("curve", "Attack accuracy as the injected noise grows");
    add_common(dc, dc_c);
    add_pipe_opts(dc, dc_p);
    add_strategy(dc, dc_s);
    dc->add_option("--levels", dc_levels, "Comma-separated increasing levels (sigma or rate)");
    dc->add_option("--train-fraction", dc_fraction, "Stratified train share")->check(CLI::Range(0.0, 1.0));
    dc->callback([&] {
        const auto corpus = read_manifest(dc_p.manifest);
        CountermeasureSpec spec;
        spec.strategy = dc_s.build(dc_c.seed);
        spec.train_fraction = dc_fraction;
        for (const auto &s : split_list(dc_levels)) {
            try {
                spec.levels.push_back(std::stod(s));
            } catch (const std::exception &) {
                throw CLI::ValidationError("--levels", "bad number " + s);
            }
        }
        const auto curve =
            evaluate_countermeasure(corpus, dc_p.build(dc_c.seed), spec, dc_c.seed, dc_c.load_cat(), dc_c.load_prof());
        const auto dir = dc_c.out_dir();
        write_text(dir / "degradation.csv", curve_to_csv(curve));
        svg::Series acc{"accuracy", {}, {}}, f1{"macro F1", {}, {}};
        for (const auto &p : curve.points) {
            acc.x.push_back(p.level);
            acc.y.push_back(p.accuracy);
            f1.x.push_back(p.level);
            f1.y.push_back(p.macro_f1);
        }
        write_text(dir / "degradation.svg",
                   svg::line_chart("Attack accuracy under " + curve.strategy + " noise", "level", "score", {acc, f1}));
        write_effective_config(dc, dir);
        for (const auto &p : curve.points)
            std::cout << "level " << format_value(p.level) << "  accuracy " << format_value(p.accuracy)
                      << "  macro_f1 " << format_value(p.macro_f1) << '\n';
    });

    // catalog / profile dumps ------------------------------------------------
    Common ca_c;
    auto *ca = app.add_subcommand("catalog", "Write the metric catalog as JSON");
    add_common(ca, ca_c, false);
    ca->callback([&] {
        const auto dir = ca_c.out_dir();
        write_catalog(ca_c.load_cat(), dir / "catalog.json");
        std::cout << "wrote " << (dir / "catalog.json").string() << '\n';
    });
    Common pf_c;
    auto *pf = app.add_subcommand("profile", "Write the simulator profile as JSON");
    add_common(pf, pf_c, false);
    pf->callback([&] {
        const auto dir = pf_c.out_dir();
        write_profile(pf_c.load_prof(), dir / "profile.json");
        std::cout << "wrote " << (dir / "profile.json").string() << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
