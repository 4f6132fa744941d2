#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "counterscope/catalog.hpp"
#include "counterscope/defense.hpp"
#include "counterscope/error.hpp"
#include "counterscope/pipeline.hpp"
#include "counterscope/selection.hpp"
#include "counterscope/simulator.hpp"
#include "counterscope/stats.hpp"
#include "counterscope/stepcount.hpp"
#include "counterscope/traces.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using nlohmann::json;
using namespace counterscope;

namespace {

// Python objects cross the boundary as JSON text.
py::object to_py(const json &j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::object &o) {
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

MetricCatalog catalog_of(const py::object &o) {
    return o.is_none() ? builtin_catalog() : catalog_from_json(from_py(o));
}

SimulationProfile profile_of(const py::object &o) {
    return o.is_none() ? default_profile() : profile_from_json(from_py(o));
}

SceneType scene_of(const std::string &s) {
    if (auto t = parse_scene_type(s))
        return *t;
    throw Error(Errc::invalid_script, "scene type must be AR or VR, got " + s);
}

PipelineOptions pipeline_options(const py::object &model, const std::string &layout,
                                 const std::vector<std::string> &metrics, std::uint64_t seed) {
    PipelineOptions o;
    const auto l = parse_layout(layout);
    if (!l)
        throw Error(Errc::precondition, "unknown layout " + layout);
    o.layout = *l;
    o.metrics = metrics;
    o.model = model.is_none() ? ModelConfig{RfParams{}} : model_config_from_json(from_py(model));
    o.model = with_seed(o.model, seed);
    return o;
}

py::dict trace_dict(const TraceSet &t) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < t.n_seconds(); ++i) {
        const auto r = t.row(i);
        rows.emplace_back(r.begin(), r.end());
    }
    py::dict d;
    d["metrics"] = t.metrics();
    d["t0"] = t.t0();
    d["values"] = rows;
    d["meta"] = t.meta();
    return d;
}

TraceSet trace_of(const py::dict &d) {
    const auto rows = d["values"].cast<std::vector<std::vector<double>>>();
    std::vector<double> flat;
    for (const auto &r : rows)
        flat.insert(flat.end(), r.begin(), r.end());
    TraceSet::Meta meta;
    if (d.contains("meta"))
        meta = d["meta"].cast<TraceSet::Meta>();
    return TraceSet(d["metrics"].cast<std::vector<std::string>>(), rows.size(), std::move(flat),
                    d.contains("t0") ? d["t0"].cast<std::int64_t>() : 0, std::move(meta));
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "counterscope native core";

    static PyObject *exc_type = PyErr_NewException("counterscope._core.CounterscopeError", PyExc_ValueError, nullptr);
    m.attr("CounterscopeError") = py::handle(exc_type);
    // The error kind is exposed as `.code`.
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p)
                std::rethrow_exception(p);
        } catch (const Error &e) {
            py::object value = py::handle(exc_type)(e.what());
            value.attr("code") = errc_name(e.code());
            PyErr_SetObject(exc_type, value.ptr());
        }
    });

    m.def("builtin_catalog", [] { return to_py(catalog_to_json(builtin_catalog())); });
    m.def("default_profile", [] { return to_py(profile_to_json(default_profile())); });

    m.def("read_trace", [](const fs::path &p) { return trace_dict(read_wide_csv(p)); });
    m.def("write_trace", [](const py::dict &t, const fs::path &p) { write_wide_csv(trace_of(t), p); });

    m.def(
        "simulate",
        [](const py::object &scene, const py::object &catalog, const py::object &profile) {
            const auto out = simulate(scene_from_json(from_py(scene)), catalog_of(catalog), profile_of(profile));
            py::list events;
            for (const auto &e : out.event_log) {
                py::dict d;
                d["kind"] = e.kind;
                d["label"] = e.label;
                d["t_begin"] = e.t_begin;
                d["t_end"] = e.t_end;
                events.append(d);
            }
            py::dict d;
            d["trace"] = trace_dict(out.traces);
            d["pixels"] = out.ground_truth_pixels;
            d["events"] = events;
            return d;
        },
        py::arg("scene"), py::arg("catalog") = py::none(), py::arg("profile") = py::none());

    m.def(
        "pixel_sweep_scene",
        [](const std::string &scene, std::size_t seconds, std::uint64_t seed) {
            return to_py(scene_to_json(make_pixel_sweep_script(scene_of(scene), seconds, seed)));
        },
        py::arg("scene") = "VR", py::arg("seconds") = 1000, py::arg("seed") = 42);
    m.def(
        "staircase_scene",
        [](int n, int hold, const std::string &scene, std::uint64_t seed, bool noiseless) {
            return to_py(scene_to_json(staircase_script(n, hold, {scene_of(scene), seed, noiseless})));
        },
        py::arg("n"), py::arg("hold") = 5, py::arg("scene") = "VR", py::arg("seed") = 42,
        py::arg("noiseless") = false);
    m.def(
        "app_corpus_spec",
        [](std::size_t n_classes, std::size_t reps, std::uint64_t seed, std::size_t duration) {
            return to_py(corpus_spec_to_json(make_app_corpus_spec(n_classes, reps, seed, builtin_catalog(), duration)));
        },
        py::arg("n_classes"), py::arg("repetitions") = 20, py::arg("seed") = 42, py::arg("duration") = 30);
    m.def(
        "generate_corpus",
        [](const py::object &spec, const fs::path &out_dir, const py::object &catalog, const py::object &profile) {
            const auto corpus =
                generate_corpus(corpus_spec_from_json(from_py(spec)), catalog_of(catalog), profile_of(profile));
            return write_manifest(corpus, out_dir);
        },
        py::arg("spec"), py::arg("out_dir"), py::arg("catalog") = py::none(), py::arg("profile") = py::none());

    m.def(
        "prune",
        [](const fs::path &manifest, double threshold, std::vector<std::string> order, bool per_item_normalize) {
            const auto corpus = read_manifest(manifest);
            if (order.empty())
                order = corpus.metrics();
            return to_py(prune_report_to_json(correlation_prune(corpus, order, threshold, {per_item_normalize})));
        },
        py::arg("manifest"), py::arg("threshold") = 0.9, py::arg("order") = std::vector<std::string>{},
        py::arg("per_item_normalize") = false);
    m.def(
        "screen",
        [](const fs::path &manifest, double threshold_acc, const py::object &model, std::uint64_t seed) {
            const auto corpus = read_manifest(manifest);
            const auto opts = pipeline_options(model, "stat4", {}, seed);
            std::vector<std::pair<std::string, double>> out;
            for (const auto &r : accuracy_screen(corpus, corpus.metrics(), make_trainer(opts.model), threshold_acc, seed))
                out.emplace_back(r.metric, r.accuracy);
            return out;
        },
        py::arg("manifest"), py::arg("threshold_acc") = 0.6, py::arg("model") = py::none(), py::arg("seed") = 42);

    m.def(
        "cross_validate",
        [](const fs::path &manifest, std::size_t k, const py::object &model, const std::string &layout,
           const std::vector<std::string> &metrics, std::uint64_t seed) {
            const auto corpus = read_manifest(manifest);
            return to_py(report_to_json(corpus_kfold_cv(corpus, pipeline_options(model, layout, metrics, seed), k, seed)));
        },
        py::arg("manifest"), py::arg("k") = 5, py::arg("model") = py::none(), py::arg("layout") = "stat4",
        py::arg("metrics") = std::vector<std::string>{}, py::arg("seed") = 42);
    m.def(
        "lopo",
        [](const fs::path &manifest, const py::object &model, const std::string &layout,
           const std::vector<std::string> &metrics, std::uint64_t seed) {
            const auto corpus = read_manifest(manifest);
            return to_py(report_to_json(corpus_lopo_cv(corpus, pipeline_options(model, layout, metrics, seed))));
        },
        py::arg("manifest"), py::arg("model") = py::none(), py::arg("layout") = "stat4",
        py::arg("metrics") = std::vector<std::string>{}, py::arg("seed") = 42);
    m.def(
        "train",
        [](const fs::path &manifest, const fs::path &model_path, const py::object &model, const std::string &layout,
           const std::vector<std::string> &metrics, double train_fraction, std::uint64_t seed) {
            const auto corpus = read_manifest(manifest);
            const auto split = stratified_split(corpus.labels(), train_fraction, seed);
            save_pipeline(fit_pipeline(corpus.subset(split.train), pipeline_options(model, layout, metrics, seed)),
                          model_path);
        },
        py::arg("manifest"), py::arg("model_path"), py::arg("model") = py::none(), py::arg("layout") = "stat4",
        py::arg("metrics") = std::vector<std::string>{}, py::arg("train_fraction") = 0.8, py::arg("seed") = 42);
    m.def(
        "evaluate",
        [](const fs::path &manifest, const fs::path &model_path, double train_fraction, std::uint64_t seed,
           bool all) {
            const auto corpus = read_manifest(manifest);
            const auto p = load_pipeline(model_path);
            const auto test =
                all ? corpus : corpus.subset(stratified_split(corpus.labels(), train_fraction, seed).test);
            return to_py(report_to_json(p.evaluate(test)));
        },
        py::arg("manifest"), py::arg("model_path"), py::arg("train_fraction") = 0.8, py::arg("seed") = 42,
        py::arg("all") = false);

    m.def(
        "detect_steps",
        [](const std::vector<double> &series, double min_jump, std::size_t window, std::size_t min_gap) {
            std::vector<std::tuple<std::size_t, int, double>> out;
            for (const auto &e : detect_steps(series, min_jump, window, min_gap))
                out.emplace_back(e.t, e.sign, e.magnitude);
            return out;
        },
        py::arg("series"), py::arg("min_jump"), py::arg("window") = 3, py::arg("min_gap") = 3);
    m.def(
        "count_participants",
        [](const py::dict &trace, const std::string &scene, double factor, std::size_t window, std::size_t min_gap,
           const std::map<std::string, double> &min_jumps) {
            auto jumps = default_min_jumps(builtin_catalog(), scene_of(scene), default_profile(), factor);
            for (const auto &[k, v] : min_jumps)
                jumps[k] = v;
            const auto r = count_participants(trace_of(trace), builtin_catalog(), jumps, window, min_gap);
            return std::make_pair(r.count, r.per_metric);
        },
        py::arg("trace"), py::arg("scene") = "VR", py::arg("min_jump_factor") = 4.0, py::arg("window") = 3,
        py::arg("min_gap") = 3, py::arg("min_jumps") = std::map<std::string, double>{});

    m.def("pearson", [](const std::vector<double> &x, const std::vector<double> &y) { return stats::pearson(x, y); });
    m.def("linreg", [](const std::vector<double> &x, const std::vector<double> &y) {
        const auto f = stats::linreg(x, y);
        return std::make_tuple(f.slope, f.intercept, f.r_squared);
    });

    m.def(
        "inject_noise",
        [](const py::dict &trace, const py::object &strategy) {
            return trace_dict(inject_noise(trace_of(trace), strategy_from_json(from_py(strategy)), builtin_catalog()));
        },
        py::arg("trace"), py::arg("strategy"));
    m.def(
        "countermeasure_curve",
        [](const fs::path &manifest, const py::object &strategy, const std::vector<double> &levels,
           const py::object &model, std::uint64_t seed) {
            CountermeasureSpec spec;
            spec.strategy = strategy_from_json(from_py(strategy));
            spec.levels = levels;
            const auto curve = evaluate_countermeasure(read_manifest(manifest),
                                                       pipeline_options(model, "stat4", {}, seed), spec, seed,
                                                       builtin_catalog());
            std::vector<std::tuple<double, double, double>> out;
            for (const auto &p : curve.points)
                out.emplace_back(p.level, p.accuracy, p.macro_f1);
            return out;
        },
        py::arg("manifest"), py::arg("strategy"), py::arg("levels"), py::arg("model") = py::none(),
        py::arg("seed") = 42);
    m.def(
        "detect_access",
        [](const std::vector<double> &timestamps, std::size_t min_events, double cv_threshold, double period,
           double tolerance) {
            return to_py(verdict_to_json(
                detect_profiler_access({timestamps}, {min_events, cv_threshold, period, tolerance})));
        },
        py::arg("timestamps"), py::arg("min_events") = 20, py::arg("cv_threshold") = 0.1, py::arg("period") = 1.0,
        py::arg("tolerance") = 0.25);
}
