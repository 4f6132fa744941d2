#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "counterscope/simulator.hpp"
#include "counterscope/stats.hpp"
#include "test_util.hpp"

using namespace counterscope;
namespace fs = std::filesystem;

namespace {

const fs::path data_dir = COUNTERSCOPE_DATA_DIR;

SceneScript sweep(double v, double size = 4.0, double z = 2.0) {
    SceneScript s;
    s.scene_type = SceneType::VR;
    s.duration_s = 60;
    s.seed = 1;
    s.noise.global = 0.0;
    ObjectSweep o;
    o.size_s = size;
    o.speed_v = v;
    o.depth_z = z;
    o.x_start = -15;
    o.x_end = 15;
    o.t_start = 5;
    s.events.push_back(o);
    return s;
}

SceneScript static_cube(double size, double z) {
    SceneScript s;
    s.duration_s = 20;
    s.noise.global = 0.0;
    s.events.push_back(StaticObject{size, z, 5, 15});
    return s;
}

std::vector<double> nblt(const SimulationOutput &o) { return o.traces.column("non_base_level_textures"); }

std::size_t above_baseline(const std::vector<double> &v) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](double x) { return x > v.front(); }));
}

std::size_t distinct_levels(const std::vector<double> &v) { return std::set<double>(v.begin(), v.end()).size(); }

std::size_t level_changes(const std::vector<double> &v, int sign) {
    std::size_t c = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if ((v[i] - v[i - 1]) * sign > 0)
            ++c;
    return c;
}

} // namespace

TEST_CASE("sweep width follows distance over speed") {
    const auto w1 = above_baseline(nblt(simulate(sweep(1), builtin_catalog())));
    const auto w2 = above_baseline(nblt(simulate(sweep(2), builtin_catalog())));
    CHECK(w1 >= 29);
    CHECK(w1 <= 31);
    CHECK(w2 >= 14);
    CHECK(w2 <= 16);
}

TEST_CASE("closer cube gives larger NBLT mean") {
    auto s2 = sweep(1, 4, 2), s3 = sweep(1, 4, 3);
    const double m2 = stats::mean(nblt(simulate(s2, builtin_catalog())));
    const double m3 = stats::mean(nblt(simulate(s3, builtin_catalog())));
    CHECK(m2 > m3);
    // the shipped depth scenes agree
    auto d2 = load_scene(data_dir / "scenes" / "cube_depth_z2.json");
    auto d3 = load_scene(data_dir / "scenes" / "cube_depth_z3.json");
    CHECK(stats::mean(nblt(simulate(d2, builtin_catalog()))) > stats::mean(nblt(simulate(d3, builtin_catalog()))));
}

TEST_CASE("property: noiseless NBLT monotone in size and depth") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> us(0.2, 6), uz(0.5, 8);
    for (int trial = 0; trial < 60; ++trial) {
        double a = us(rng), b = us(rng), z = uz(rng);
        if (a > b)
            std::swap(a, b);
        CHECK(stats::mean(nblt(simulate(static_cube(a, z), builtin_catalog()))) <=
              stats::mean(nblt(simulate(static_cube(b, z), builtin_catalog()))));
        double z1 = uz(rng), z2 = uz(rng), s = us(rng);
        if (z1 > z2)
            std::swap(z1, z2);
        CHECK(stats::mean(nblt(simulate(static_cube(s, z1), builtin_catalog()))) >=
              stats::mean(nblt(simulate(static_cube(s, z2), builtin_catalog()))));
    }
}

TEST_CASE("coverage formula and clamping") {
    std::vector<SceneEvent> ev{StaticObject{2, 2, 0, 10}};
    CHECK(screen_coverage(ev, 1, 10, 0.02) == doctest::Approx(0.02));
    ev.push_back(StaticObject{20, 1, 0, 10});
    CHECK(screen_coverage(ev, 1, 10, 0.02) == 1.0);
    CHECK(screen_coverage(ev, 10, 10, 0.02) == 0.0);
    // sweep outside the field of view contributes nothing
    std::vector<SceneEvent> sw{ObjectSweep{1, 1, 1, -30, 30, 0}};
    CHECK(screen_coverage(sw, 5, 10, 0.02) == 0.0);
    CHECK(screen_coverage(sw, 30, 10, 0.02) > 0.0);
}

TEST_CASE("pixels stay in [0, 1] and simulation is deterministic") {
    auto script = make_pixel_sweep_script(SceneType::VR, 300, 5);
    const auto a = simulate(script, builtin_catalog());
    const auto b = simulate(script, builtin_catalog());
    CHECK(a.traces == b.traces);
    CHECK(a.ground_truth_pixels == b.ground_truth_pixels);
    for (double p : a.ground_truth_pixels) {
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
    }
    script.seed = 6;
    CHECK_FALSE(simulate(script, builtin_catalog()).traces == a.traces);
}

TEST_CASE("pixel regression on the shipped sweeps") {
    for (const char *name : {"pixel_sweep_vr.json", "pixel_sweep_ar.json"}) {
        const auto out = simulate(load_scene(data_dir / "scenes" / name), builtin_catalog());
        CHECK(out.traces.n_seconds() == 1000);
        CHECK(stats::pearson(out.ground_truth_pixels, nblt(out)) >= 0.95);
    }
}

TEST_CASE("AR noise is larger than VR noise") {
    for (const auto &id : builtin_catalog().ids())
        CHECK(default_profile().noise_sigma(id, SceneType::AR) > default_profile().noise_sigma(id, SceneType::VR));
}

TEST_CASE("staircase examples") {
    const StaircaseOptions quiet{SceneType::VR, 0, true};
    const auto four = avatar_staircase(4, 5, builtin_catalog(), quiet);
    CHECK(level_changes(nblt(four), +1) == 4);
    CHECK(level_changes(nblt(four), -1) == 0);
    const auto ptr = four.traces.column("prims_trivially_rejected");
    CHECK(level_changes(ptr, -1) == 4);
    CHECK(level_changes(ptr, +1) == 0);
    CHECK(four.traces.meta().at("participants") == "4");

    const auto zero = avatar_staircase(0, 5, builtin_catalog(), quiet);
    for (const auto &id : zero.traces.metrics())
        CHECK(distinct_levels(zero.traces.column(id)) == 1);

    CHECK_ERRC(avatar_staircase(-1, 5, builtin_catalog()), Errc::invalid_script);
    CHECK(avatar_staircase(9, 5, builtin_catalog()).traces.n_seconds() == 55);
}

TEST_CASE("property: noiseless staircase has participants + 1 levels") {
    const StaircaseOptions quiet{SceneType::VR, 0, true};
    for (int n = 0; n <= 9; ++n)
        for (int hold : {3, 5, 8}) {
            const auto out = avatar_staircase(n, hold, builtin_catalog(), quiet);
            for (const auto &id : out.traces.metrics())
                if (default_profile().get(id).delta != 0.0)
                    CHECK(distinct_levels(out.traces.column(id)) == static_cast<std::size_t>(n + 1));
        }
}

TEST_CASE("app session rises and falls") {
    SceneScript s;
    s.duration_s = 20;
    s.noise.global = 0.0;
    s.events.push_back(AppSession{"demo", 5, 15, {{"gpu_bus_busy", 1.0}}});
    const auto col = simulate(s, builtin_catalog()).traces.column("gpu_bus_busy");
    CHECK(col[2] == col[0]);
    CHECK(col[10] > col[0]);
    CHECK(col[19] == col[0]);
    s.events.push_back(AppSession{"demo", 5, 15, {{"no_such_metric", 1.0}}});
    CHECK_ERRC(simulate(s, builtin_catalog()), Errc::invalid_script);
}

TEST_CASE("script validation") {
    SceneScript s;
    s.duration_s = 0;
    CHECK_ERRC(s.validate(), Errc::invalid_script);
    s.duration_s = 10;
    s.events.push_back(ObjectSweep{1, 0, 2});
    CHECK_ERRC(s.validate(), Errc::invalid_script);
    s.events = {ObjectSweep{1, 1, -2}};
    CHECK_ERRC(s.validate(), Errc::invalid_script);
    s.events = {StaticObject{1, 2, 5, 5}};
    CHECK_ERRC(s.validate(), Errc::invalid_script);
    s.events = {AvatarJoin{11}};
    CHECK_ERRC(s.validate(), Errc::invalid_script);
    s.events = {};
    s.noise.global = -1;
    CHECK_ERRC(s.validate(), Errc::invalid_script);
    CHECK_ERRC(scene_from_json(nlohmann::json{{"scene_type", "XR"}}), Errc::invalid_script);
}

TEST_CASE("scene JSON round trip") {
    auto s = make_pixel_sweep_script(SceneType::AR, 100, 3);
    s.events.push_back(AvatarJoin{4});
    s.events.push_back(AppSession{"x", 1, 3, {{"gpu_frequency", 0.5}}});
    s.events.push_back(ObjectSweep{1, 2, 3, -4, 5, 6});
    s.noise.per_metric["gpu_frequency"] = 0.5;
    const auto back = scene_from_json(scene_to_json(s));
    CHECK(scene_to_json(back) == scene_to_json(s));
    CHECK(simulate(back, builtin_catalog()).traces == simulate(s, builtin_catalog()).traces);
}

TEST_CASE("generate_corpus examples") {
    auto spec = make_app_corpus_spec(3, 20, 9, builtin_catalog());
    const auto c = generate_corpus(spec, builtin_catalog());
    CHECK(c.size() == 60);
    std::map<std::string, int> per;
    for (const auto &l : c.labels())
        ++per[l];
    CHECK(per.size() == 3);
    for (const auto &[_, n] : per)
        CHECK(n == 20);
    CHECK(generate_corpus(spec, builtin_catalog()) == c);

    spec.classes.resize(1);
    CHECK_ERRC(generate_corpus(spec, builtin_catalog()), Errc::invalid_spec);
    spec = make_app_corpus_spec(2, 1, 9, builtin_catalog());
    spec.repetitions = 0;
    CHECK_ERRC(generate_corpus(spec, builtin_catalog()), Errc::invalid_spec);
}

TEST_CASE("corpus spec JSON round trip") {
    auto spec = make_app_corpus_spec(4, 3, 2, builtin_catalog());
    spec.groups = 3;
    const auto back = corpus_spec_from_json(corpus_spec_to_json(spec));
    CHECK(corpus_spec_to_json(back) == corpus_spec_to_json(spec));
    CHECK(generate_corpus(back, builtin_catalog()).groups() == generate_corpus(spec, builtin_catalog()).groups());
}

TEST_CASE("shipped data files match the generators") {
    CHECK(load_profile(data_dir / "default_profile.json") == default_profile());
    CHECK(corpus_spec_to_json(load_corpus_spec(data_dir / "app_corpus_spec.json")) ==
          corpus_spec_to_json(make_app_corpus_spec(20, 20, 42, builtin_catalog())));
    CHECK(scene_to_json(load_scene(data_dir / "scenes" / "pixel_sweep_vr.json")) ==
          scene_to_json(make_pixel_sweep_script(SceneType::VR, 1000, 42)));
    const auto meeting = load_scene(data_dir / "scenes" / "avatar_meeting.json");
    const auto stairs = staircase_script(4, 5);
    REQUIRE(meeting.events.size() == stairs.events.size());
    for (std::size_t i = 0; i < stairs.events.size(); ++i)
        CHECK(std::get<AvatarJoin>(meeting.events[i]).t_join == std::get<AvatarJoin>(stairs.events[i]).t_join);
}

TEST_CASE("profile file round trip and validation") {
    testutil::TempDir dir("profile");
    write_profile(default_profile(), dir / "p.json");
    CHECK(load_profile(dir / "p.json") == default_profile());
    CHECK_ERRC(profile_from_json(nlohmann::json::array()), Errc::schema_error);
    CHECK_ERRC(profile_from_json(nlohmann::json{{"a", {{"b_ar", 1}}}}), Errc::schema_error);
}
