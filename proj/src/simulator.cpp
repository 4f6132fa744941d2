#include "counterscope/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "counterscope/error.hpp"
#include "counterscope/rng.hpp"

namespace counterscope {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(SceneType s) noexcept { return s == SceneType::AR ? "AR" : "VR"; }

std::optional<SceneType> parse_scene_type(std::string_view s) noexcept {
    if (s == "AR" || s == "ar")
        return SceneType::AR;
    if (s == "VR" || s == "vr")
        return SceneType::VR;
    return std::nullopt;
}

double ObjectSweep::t_end() const { return t_start + std::abs(x_end - x_start) / speed_v; }

double ObjectSweep::x_at(double t) const {
    const double dir = x_end >= x_start ? 1.0 : -1.0;
    return x_start + dir * speed_v * (t - t_start);
}

namespace {

[[noreturn]] void invalid(const std::string &why) { throw Error(Errc::invalid_script, why); }

void check_time(double t, std::size_t duration, const char *what) {
    if (!std::isfinite(t) || t < 0.0 || t > static_cast<double>(duration))
        invalid(std::string(what) + " outside [0, duration_s]");
}

struct Visitor {
    std::size_t duration;
    void operator()(const ObjectSweep &e) const {
        if (!(e.size_s > 0.0))
            invalid("object_sweep: size_s must be > 0");
        if (!(e.speed_v > 0.0))
            invalid("object_sweep: speed_v must be > 0");
        if (!(e.depth_z > 0.0))
            invalid("object_sweep: depth_z must be > 0");
        if (!std::isfinite(e.x_start) || !std::isfinite(e.x_end) || e.x_start == e.x_end)
            invalid("object_sweep: x_start and x_end must differ");
        check_time(e.t_start, duration, "object_sweep.t_start");
    }
    void operator()(const StaticObject &e) const {
        if (!(e.size_s > 0.0))
            invalid("static_object: size_s must be > 0");
        if (!(e.depth_z > 0.0))
            invalid("static_object: depth_z must be > 0");
        check_time(e.t_start, duration, "static_object.t_start");
        check_time(e.t_end, duration, "static_object.t_end");
        if (!(e.t_end > e.t_start))
            invalid("static_object: t_end must be > t_start");
    }
    void operator()(const AvatarJoin &e) const { check_time(e.t_join, duration, "avatar_join.t_join"); }
    void operator()(const AppSession &e) const {
        check_time(e.t_start, duration, "app_session.t_start");
        check_time(e.t_end, duration, "app_session.t_end");
        if (!(e.t_end > e.t_start))
            invalid("app_session: t_end must be > t_start");
        for (const auto &[id, v] : e.intensity)
            if (!(v >= 0.0 && v <= 1.0))
                invalid("app_session: intensity for '" + id + "' outside [0, 1]");
    }
};

double get_num(const json &o, const char *key, double fallback) {
    auto it = o.find(key);
    if (it == o.end())
        return fallback;
    if (!it->is_number())
        invalid(std::string("field '") + key + "' must be a number");
    return it->get<double>();
}

double require_num(const json &o, const char *key) {
    auto it = o.find(key);
    if (it == o.end() || !it->is_number())
        invalid(std::string("missing numeric field '") + key + "'");
    return it->get<double>();
}

json event_to_json(const SceneEvent &ev) {
    return std::visit(
        [](const auto &e) -> json {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, ObjectSweep>)
                return {{"type", "object_sweep"}, {"size_s", e.size_s},   {"speed_v", e.speed_v},
                        {"depth_z", e.depth_z},   {"x_start", e.x_start}, {"x_end", e.x_end},
                        {"t_start", e.t_start}};
            else if constexpr (std::is_same_v<T, StaticObject>)
                return {{"type", "static_object"}, {"size_s", e.size_s}, {"depth_z", e.depth_z},
                        {"t_start", e.t_start},    {"t_end", e.t_end}};
            else if constexpr (std::is_same_v<T, AvatarJoin>)
                return {{"type", "avatar_join"}, {"t_join", e.t_join}};
            else
                return {{"type", "app_session"}, {"app_id", e.app_id}, {"t_start", e.t_start},
                        {"t_end", e.t_end},      {"intensity", e.intensity}};
        },
        ev);
}

SceneEvent event_from_json(const json &o) {
    if (!o.is_object() || !o.contains("type") || !o["type"].is_string())
        invalid("event must be an object with a string 'type'");
    const auto type = o["type"].get<std::string>();
    if (type == "object_sweep") {
        ObjectSweep e;
        e.size_s = require_num(o, "size_s");
        e.speed_v = require_num(o, "speed_v");
        e.depth_z = require_num(o, "depth_z");
        e.x_start = get_num(o, "x_start", e.x_start);
        e.x_end = get_num(o, "x_end", e.x_end);
        e.t_start = get_num(o, "t_start", e.t_start);
        return e;
    }
    if (type == "static_object") {
        StaticObject e;
        e.size_s = require_num(o, "size_s");
        e.depth_z = require_num(o, "depth_z");
        e.t_start = require_num(o, "t_start");
        e.t_end = require_num(o, "t_end");
        return e;
    }
    if (type == "avatar_join")
        return AvatarJoin{require_num(o, "t_join")};
    if (type == "app_session") {
        AppSession e;
        e.app_id = o.value("app_id", std::string{});
        e.t_start = require_num(o, "t_start");
        e.t_end = require_num(o, "t_end");
        if (auto it = o.find("intensity"); it != o.end()) {
            if (!it->is_object())
                invalid("app_session.intensity must be an object of metric id -> gain");
            for (auto kv = it->begin(); kv != it->end(); ++kv) {
                if (!kv->is_number())
                    invalid("app_session.intensity values must be numbers");
                e.intensity[kv.key()] = kv->get<double>();
            }
        }
        return e;
    }
    invalid("unknown event type '" + type + "'");
}

json read_json_file(const fs::path &path, Errc parse_code) {
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io_error, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw Error(parse_code, path.string() + ": " + e.what());
    }
}

// Declared defaults (b_ar, b_vr, g, delta, sigma). Gains are large relative to
// sigma on the texture counter so pixel coverage dominates its variance; 22
// counters carry a per-avatar step of roughly 10 sigma, the rest none.
SimulationProfile make_default_profile() {
    auto p = [](double b_ar, double b_vr, double g, double delta, double sigma) {
        return MetricProfile{b_ar, b_vr, g, delta, sigma};
    };
    std::map<std::string, MetricProfile> m;
    m["gpu_frequency"] = p(5.25e8, 4.9e8, 5e7, 0, 2e6);
    m["gpu_bus_busy"] = p(28, 22, 40, 2.5, 0.25);
    m["preemptions_per_second"] = p(36, 30, 10, 0, 0.4);
    m["avg_preemption_delay"] = p(14, 12, 4, 0, 0.2);
    m["vertex_fetch_stall"] = p(4, 3, 6, 0.6, 0.05);
    m["texture_fetch_stall"] = p(10, 8, 15, 0, 0.15);
    m["texture_l2_miss"] = p(30, 25, 30, 2.0, 0.2);
    m["stalled_on_system_memory"] = p(2, 1.5, 3, 0, 0.05);
    m["vertex_memory_read"] = p(1.4e8, 1.2e8, 6e7, 6e6, 5e5);
    m["sp_memory_read"] = p(3.4e8, 3e8, 1.5e8, 1.2e7, 1.2e6);
    m["global_memory_load_instructions"] = p(4.6e4, 4e4, 2e4, 1.5e3, 120);
    m["global_buffer_data_read_request_bw"] = p(2.3e8, 2e8, 1e8, 8e6, 8e5);
    m["global_buffer_data_read_bw"] = p(2.1e8, 1.8e8, 9e7, 7e6, 7e5);
    m["global_buffer_read_l2_hit"] = p(66, 70, 15, 1.2, 0.12);
    m["global_image_uncompressed_data_read_bw"] = p(1.1e8, 9e7, 5e7, 4e6, 4e5);
    m["bytes_data_write_requested"] = p(7e7, 6e7, 3e7, 2.4e6, 2.4e5);
    m["bytes_data_actually_written"] = p(6.4e7, 5.5e7, 2.8e7, 2.2e6, 2.2e5);
    m["vertex_instructions_per_second"] = p(2.7e8, 2.4e8, 1.2e8, 9e6, 9e5);
    m["local_memory_store_instructions"] = p(1.8e4, 1.6e4, 8e3, 600, 50);
    m["avg_load_store_instructions_per_cycle"] = p(0.4, 0.35, 0.2, 0.015, 0.0015);
    m["avg_bytes_per_fragment"] = p(52, 48, 20, 1.6, 0.15);
    m["l1_texture_cache_miss_per_pixel"] = p(0.95, 0.8, 0.5, 0, 0.008);
    m["pre_clipped_polygons_per_second"] = p(1.7e6, 1.5e6, 8e5, 6e4, 6e3);
    m["prims_trivially_rejected"] = p(40, 45, 20, 2.5, 0.25);
    m["prims_clipped"] = p(16, 18, 10, 1.2, 0.1);
    m["average_vertices_per_polygon"] = p(3.1, 3.2, 0.4, 0.03, 0.003);
    m["average_polygon_area"] = p(150, 160, 80, 6, 0.6);
    m["nearest_filtered"] = p(38, 35, 10, 0, 0.12);
    m["anisotropic_filtered"] = p(14, 12, 8, 0, 0.1);
    m["non_base_level_textures"] = p(26, 18, 80, 4.0, 0.4);
    return SimulationProfile(std::move(m));
}

// Fraction of the second-long interval around t an app session is active:
// half during the rise second and the fall second.
double session_envelope(const AppSession &s, double tc) {
    if (tc < s.t_start || tc >= s.t_end + 1.0)
        return 0.0;
    if (tc < s.t_start + 1.0 || tc >= s.t_end)
        return 0.5;
    return 1.0;
}

} // namespace

void SceneScript::validate() const {
    if (duration_s < 1)
        invalid("duration_s must be >= 1");
    if (!(fov_width_w > 0.0))
        invalid("fov_width_w must be > 0");
    if (!(coverage_kappa >= 0.0))
        invalid("coverage_kappa must be >= 0");
    if (noise.global && !(*noise.global >= 0.0))
        invalid("noise_sigma must be >= 0");
    for (const auto &[id, s] : noise.per_metric)
        if (!(s >= 0.0))
            invalid("noise_sigma for '" + id + "' must be >= 0");
    for (const auto &ev : events)
        std::visit(Visitor{duration_s}, ev);
}

json scene_to_json(const SceneScript &s) {
    json j = {{"scene_type", to_string(s.scene_type)},
              {"duration_s", s.duration_s},
              {"seed", s.seed},
              {"fov_width_w", s.fov_width_w},
              {"coverage_kappa", s.coverage_kappa}};
    if (s.noise.global)
        j["noise_sigma"] = *s.noise.global;
    else if (!s.noise.per_metric.empty())
        j["noise_sigma"] = s.noise.per_metric;
    auto events = json::array();
    for (const auto &e : s.events)
        events.push_back(event_to_json(e));
    j["events"] = std::move(events);
    return j;
}

SceneScript scene_from_json(const json &j) {
    if (!j.is_object())
        invalid("scene script must be a JSON object");
    SceneScript s;
    if (auto it = j.find("scene_type"); it != j.end()) {
        auto st = it->is_string() ? parse_scene_type(it->get<std::string>()) : std::nullopt;
        if (!st)
            invalid("scene_type must be \"AR\" or \"VR\"");
        s.scene_type = *st;
    }
    if (auto it = j.find("duration_s"); it != j.end()) {
        if (!it->is_number_integer() || it->get<long long>() < 1)
            invalid("duration_s must be a positive integer");
        s.duration_s = it->get<std::size_t>();
    }
    if (auto it = j.find("seed"); it != j.end()) {
        if (!it->is_number_integer())
            invalid("seed must be an integer");
        s.seed = it->is_number_unsigned() ? it->get<std::uint64_t>()
                                          : static_cast<std::uint64_t>(it->get<std::int64_t>());
    }
    s.fov_width_w = get_num(j, "fov_width_w", s.fov_width_w);
    s.coverage_kappa = get_num(j, "coverage_kappa", s.coverage_kappa);
    if (auto it = j.find("noise_sigma"); it != j.end()) {
        if (it->is_number()) {
            s.noise.global = it->get<double>();
        } else if (it->is_object()) {
            for (auto kv = it->begin(); kv != it->end(); ++kv) {
                if (!kv->is_number())
                    invalid("noise_sigma values must be numbers");
                s.noise.per_metric[kv.key()] = kv->get<double>();
            }
        } else {
            invalid("noise_sigma must be a number or an object");
        }
    }
    if (auto it = j.find("events"); it != j.end()) {
        if (!it->is_array())
            invalid("events must be an array");
        for (const auto &e : *it)
            s.events.push_back(event_from_json(e));
    }
    s.validate();
    return s;
}

SceneScript load_scene(const fs::path &path) {
    return scene_from_json(read_json_file(path, Errc::invalid_script));
}

const MetricProfile &SimulationProfile::get(const std::string &id) const noexcept {
    static const MetricProfile generic{12.0, 10.0, 5.0, 0.5, 0.05};
    auto it = entries_.find(id);
    return it == entries_.end() ? generic : it->second;
}

double SimulationProfile::noise_sigma(const std::string &id, SceneType scene) const noexcept {
    const double s = get(id).sigma;
    return scene == SceneType::AR ? s * kArNoiseScale : s;
}

const SimulationProfile &default_profile() {
    static const SimulationProfile p = make_default_profile();
    return p;
}

json profile_to_json(const SimulationProfile &p) {
    json j = json::object();
    for (const auto &[id, e] : p.entries())
        j[id] = {{"b_ar", e.b_ar}, {"b_vr", e.b_vr}, {"g", e.g}, {"delta", e.delta}, {"sigma", e.sigma}};
    return j;
}

SimulationProfile profile_from_json(const json &j) {
    if (!j.is_object())
        throw Error(Errc::schema_error, "profile must be a JSON object");
    std::map<std::string, MetricProfile> m;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto &o = *it;
        auto num = [&](const char *key) {
            if (!o.is_object() || !o.contains(key) || !o[key].is_number())
                throw Error(Errc::schema_error, "profile '" + it.key() + "': missing number '" + key + "'");
            return o[key].get<double>();
        };
        MetricProfile e{num("b_ar"), num("b_vr"), num("g"), num("delta"), num("sigma")};
        if (e.sigma < 0.0)
            throw Error(Errc::schema_error, "profile '" + it.key() + "': sigma must be >= 0");
        m[it.key()] = e;
    }
    return SimulationProfile(std::move(m));
}

SimulationProfile load_profile(const fs::path &path) {
    return profile_from_json(read_json_file(path, Errc::schema_error));
}

void write_profile(const SimulationProfile &p, const fs::path &path) {
    std::ofstream out(path);
    if (!out)
        throw Error(Errc::io_error, "cannot write " + path.string());
    out << profile_to_json(p).dump(2) << '\n';
}

double screen_coverage(std::span<const SceneEvent> events, double t, double fov_width_w, double kappa) {
    double total = 0.0;
    for (const auto &ev : events) {
        if (const auto *o = std::get_if<ObjectSweep>(&ev)) {
            if (t < o->t_start || t >= o->t_end())
                continue;
            if (std::abs(o->x_at(t)) > fov_width_w * o->depth_z)
                continue;
            const double a = o->size_s / o->depth_z;
            total += kappa * a * a;
        } else if (const auto *s = std::get_if<StaticObject>(&ev)) {
            if (t < s->t_start || t >= s->t_end)
                continue;
            const double a = s->size_s / s->depth_z;
            total += kappa * a * a;
        }
    }
    return std::clamp(total, 0.0, 1.0);
}

SimulationOutput simulate(const SceneScript &script, const MetricCatalog &catalog,
                          const SimulationProfile &profile) {
    script.validate();
    if (catalog.empty())
        invalid("catalog is empty");
    for (const auto &ev : script.events)
        if (const auto *a = std::get_if<AppSession>(&ev))
            for (const auto &[id, _] : a->intensity)
                if (!catalog.find(id))
                    invalid("app_session intensity names unknown metric '" + id + "'");

    const std::size_t n = script.duration_s;
    const std::size_t k = catalog.size();
    const auto &entries = catalog.entries();

    std::vector<const MetricProfile *> prof(k);
    std::vector<double> sigma(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto &id = entries[i].id;
        prof[i] = &profile.get(id);
        if (script.noise.global)
            sigma[i] = *script.noise.global;
        else if (auto it = script.noise.per_metric.find(id); it != script.noise.per_metric.end())
            sigma[i] = it->second;
        else
            sigma[i] = profile.noise_sigma(id, script.scene_type);
    }

    std::vector<double> joins;
    std::vector<const AppSession *> sessions;
    SimulationOutput out;
    for (const auto &ev : script.events) {
        if (const auto *o = std::get_if<ObjectSweep>(&ev))
            out.event_log.push_back({"object_sweep", "", o->t_start, o->t_end()});
        else if (const auto *s = std::get_if<StaticObject>(&ev))
            out.event_log.push_back({"static_object", "", s->t_start, s->t_end});
        else if (const auto *a = std::get_if<AvatarJoin>(&ev)) {
            joins.push_back(a->t_join);
            out.event_log.push_back({"avatar_join", "", a->t_join, a->t_join});
        } else if (const auto *app = std::get_if<AppSession>(&ev)) {
            sessions.push_back(app);
            out.event_log.push_back({"app_session", app->app_id, app->t_start, app->t_end});
        }
    }

    Rng rng(script.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> values(n * k);
    out.ground_truth_pixels.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double tc = static_cast<double>(t) + 0.5;
        const double load = screen_coverage(script.events, tc, script.fov_width_w, script.coverage_kappa);
        out.ground_truth_pixels[t] = load;
        const auto joined = static_cast<double>(
            std::count_if(joins.begin(), joins.end(), [&](double tj) { return tj <= static_cast<double>(t); }));
        for (std::size_t i = 0; i < k; ++i) {
            const auto &d = entries[i];
            const auto &p = *prof[i];
            const double dir = d.sign();
            double v = p.baseline(script.scene_type) + dir * p.g * load + dir * p.delta * joined;
            for (const auto *s : sessions) {
                auto it = s->intensity.find(d.id);
                if (it != s->intensity.end())
                    v += it->second * p.g * session_envelope(*s, tc);
            }
            v += sigma[i] * normal(rng);
            auto [lo, hi] = d.valid_range();
            values[t * k + i] = std::clamp(v, lo, hi);
        }
    }
    TraceSet::Meta meta{{"scene_type", std::string(to_string(script.scene_type))},
                        {"seed", std::to_string(script.seed)}};
    out.traces = TraceSet(catalog.ids(), n, std::move(values), 0, std::move(meta));
    return out;
}

json corpus_spec_to_json(const CorpusSpec &spec) {
    auto classes = json::array();
    for (const auto &c : spec.classes)
        classes.push_back({{"label", c.label}, {"script", scene_to_json(c.script)}});
    return {{"seed", spec.seed},
            {"repetitions", spec.repetitions},
            {"groups", spec.groups},
            {"classes", std::move(classes)}};
}

CorpusSpec corpus_spec_from_json(const json &j) {
    auto bad = [](const std::string &why) { throw Error(Errc::invalid_spec, why); };
    if (!j.is_object())
        bad("corpus spec must be a JSON object");
    CorpusSpec spec;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer())
            bad("seed must be an integer");
        spec.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("repetitions")) {
        if (!j["repetitions"].is_number_integer() || j["repetitions"].get<long long>() < 1)
            bad("repetitions must be a positive integer");
        spec.repetitions = j["repetitions"].get<std::size_t>();
    }
    if (j.contains("groups")) {
        if (!j["groups"].is_number_integer() || j["groups"].get<long long>() < 1)
            bad("groups must be a positive integer");
        spec.groups = j["groups"].get<std::size_t>();
    }
    if (!j.contains("classes") || !j["classes"].is_array())
        bad("classes must be an array");
    for (const auto &c : j["classes"]) {
        if (!c.is_object() || !c.contains("label") || !c["label"].is_string() || !c.contains("script"))
            bad("each class needs a string 'label' and a 'script'");
        spec.classes.push_back({c["label"].get<std::string>(), scene_from_json(c["script"])});
    }
    return spec;
}

CorpusSpec load_corpus_spec(const fs::path &path) {
    return corpus_spec_from_json(read_json_file(path, Errc::invalid_spec));
}

LabeledCorpus generate_corpus(const CorpusSpec &spec, const MetricCatalog &catalog,
                              const SimulationProfile &profile) {
    if (spec.classes.size() < 2)
        throw Error(Errc::invalid_spec, "corpus needs at least 2 classes");
    if (spec.repetitions < 1)
        throw Error(Errc::invalid_spec, "repetitions must be >= 1");
    if (spec.groups < 1)
        throw Error(Errc::invalid_spec, "groups must be >= 1");
    LabeledCorpus corpus;
    corpus.items.reserve(spec.classes.size() * spec.repetitions);
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        for (std::size_t r = 0; r < spec.repetitions; ++r) {
            SceneScript script = spec.classes[c].script;
            script.seed = derive_seed(spec.seed, c, r);
            auto sim = simulate(script, catalog, profile);
            auto &meta = sim.traces.meta();
            meta["scenario"] = spec.classes[c].label;
            meta["repetition"] = std::to_string(r);
            corpus.items.push_back({std::move(sim.traces), spec.classes[c].label,
                                    "p" + std::to_string(r % spec.groups)});
        }
    }
    return corpus;
}

SceneScript staircase_script(int n, int hold_s, const StaircaseOptions &options) {
    if (n < 0)
        invalid("participant count must be >= 0");
    if (hold_s < 1)
        invalid("hold_s must be >= 1");
    SceneScript script;
    script.scene_type = options.scene_type;
    script.seed = options.seed;
    const auto lead = 2 * hold_s;
    script.duration_s = static_cast<std::size_t>(lead + n * hold_s);
    for (int i = 0; i < n; ++i)
        script.events.push_back(AvatarJoin{static_cast<double>(lead + i * hold_s)});
    if (options.noiseless)
        script.noise.global = 0.0;
    return script;
}

SimulationOutput avatar_staircase(int n, int hold_s, const MetricCatalog &catalog,
                                  const StaircaseOptions &options, const SimulationProfile &profile) {
    auto out = simulate(staircase_script(n, hold_s, options), catalog, profile);
    out.traces.meta()["participants"] = std::to_string(n);
    return out;
}

CorpusSpec make_app_corpus_spec(std::size_t n_classes, std::size_t repetitions, std::uint64_t seed,
                                const MetricCatalog &catalog, std::size_t duration_s) {
    if (duration_s < 6)
        throw Error(Errc::invalid_spec, "app corpus duration must be >= 6 s");
    CorpusSpec spec;
    spec.seed = seed;
    spec.repetitions = repetitions;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t c = 0; c < n_classes; ++c) {
        Rng rng(derive_seed(seed, 0xA99, c));
        char label[32];
        std::snprintf(label, sizeof(label), "app_%02zu", c);
        AppSession app;
        app.app_id = label;
        app.t_start = 2.0;
        app.t_end = static_cast<double>(duration_s) - 3.0;
        for (const auto &e : catalog.entries())
            app.intensity[e.id] = std::round(unit(rng) * 1e4) / 1e4;
        SceneScript script;
        script.scene_type = SceneType::VR;
        script.duration_s = duration_s;
        script.events.push_back(std::move(app));
        spec.classes.push_back({label, std::move(script)});
    }
    return spec;
}

SceneScript make_pixel_sweep_script(SceneType scene, std::size_t n_seconds, std::uint64_t seed) {
    SceneScript script;
    script.scene_type = scene;
    script.duration_s = n_seconds;
    script.seed = seed;
    Rng rng(derive_seed(seed, 0x5EE9));
    std::uniform_real_distribution<double> size(0.5, 6.0);
    std::uniform_real_distribution<double> depth(1.5, 3.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr std::size_t hold = 5;
    for (std::size_t t = 0; t + hold <= n_seconds; t += hold) {
        if (unit(rng) < 0.2)
            continue;
        StaticObject o;
        o.size_s = std::round(size(rng) * 100.0) / 100.0;
        o.depth_z = std::round(depth(rng) * 100.0) / 100.0;
        o.t_start = static_cast<double>(t);
        o.t_end = static_cast<double>(t + hold);
        script.events.push_back(o);
    }
    return script;
}

} // namespace counterscope
