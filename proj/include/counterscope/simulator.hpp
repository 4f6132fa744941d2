#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "counterscope/catalog.hpp"
#include "counterscope/traces.hpp"

namespace counterscope {

enum class SceneType { AR, VR };

std::string_view to_string(SceneType s) noexcept;
std::optional<SceneType> parse_scene_type(std::string_view s) noexcept;

/// A cube-like object of size s moving horizontally at depth z with speed v.
struct ObjectSweep {
    double size_s = 1.0;
    double speed_v = 1.0;
    double depth_z = 2.0;
    double x_start = -15.0;
    double x_end = 15.0;
    double t_start = 0.0;

    double t_end() const;
    /// Horizontal position at time t (meaningful while the object is in motion).
    double x_at(double t) const;
};

/// Object held at screen center for [t_start, t_end).
struct StaticObject {
    double size_s = 1.0;
    double depth_z = 2.0;
    double t_start = 0.0;
    double t_end = 1.0;
};

struct AvatarJoin {
    double t_join = 0.0;
};

/// Foreground app activity; `intensity` maps metric id to a gain in [0, 1]
/// (missing ids contribute nothing).
struct AppSession {
    std::string app_id;
    double t_start = 0.0;
    double t_end = 1.0;
    std::map<std::string, double> intensity;
};

using SceneEvent = std::variant<ObjectSweep, StaticObject, AvatarJoin, AppSession>;

/// Noise standard deviation in metric-native units. `global` wins over
/// `per_metric`; with neither, the profile's sigma is used.
struct NoiseSpec {
    std::optional<double> global;
    std::map<std::string, double> per_metric;
};

struct SceneScript {
    SceneType scene_type = SceneType::VR;
    std::size_t duration_s = 30;
    std::uint64_t seed = 0;
    /// Field-of-view half-width at depth 1, in scene units.
    double fov_width_w = 10.0;
    /// Screen fraction covered by a unit-size object at unit depth.
    double coverage_kappa = 0.02;
    std::vector<SceneEvent> events;
    NoiseSpec noise;

    /// Throws Error(invalid_script).
    void validate() const;
};

nlohmann::json scene_to_json(const SceneScript &script);
SceneScript scene_from_json(const nlohmann::json &j);
SceneScript load_scene(const std::filesystem::path &path);

/// Per-metric response parameters. Values are declared defaults, not
/// measurements: baselines per scene type, load gain, per-avatar step and
/// VR noise sigma.
struct MetricProfile {
    double b_ar = 0.0;
    double b_vr = 0.0;
    double g = 0.0;
    double delta = 0.0;
    double sigma = 0.0;

    double baseline(SceneType s) const noexcept { return s == SceneType::AR ? b_ar : b_vr; }
    bool operator==(const MetricProfile &) const = default;
};

/// Passthrough (AR) captures mix the camera feed in and are noisier.
inline constexpr double kArNoiseScale = 2.5;

class SimulationProfile {
public:
    SimulationProfile() = default;
    explicit SimulationProfile(std::map<std::string, MetricProfile> entries)
        : entries_(std::move(entries)) {}

    /// Entry for `id`, or a generic low-amplitude profile for unknown ids.
    const MetricProfile &get(const std::string &id) const noexcept;
    bool contains(const std::string &id) const noexcept { return entries_.count(id) != 0; }
    const std::map<std::string, MetricProfile> &entries() const noexcept { return entries_; }
    /// Default noise sigma for a metric in the given scene type.
    double noise_sigma(const std::string &id, SceneType scene) const noexcept;

    bool operator==(const SimulationProfile &) const = default;

private:
    std::map<std::string, MetricProfile> entries_;
};

const SimulationProfile &default_profile();
nlohmann::json profile_to_json(const SimulationProfile &p);
SimulationProfile profile_from_json(const nlohmann::json &j);
SimulationProfile load_profile(const std::filesystem::path &path);
void write_profile(const SimulationProfile &p, const std::filesystem::path &path);

struct EventInterval {
    std::string kind;
    std::string label;
    double t_begin = 0.0;
    double t_end = 0.0;
};

struct SimulationOutput {
    TraceSet traces;
    /// Fraction of the screen covered by rendered objects, per second.
    std::vector<double> ground_truth_pixels;
    std::vector<EventInterval> event_log;
};

/// Screen coverage at time t from every object event, clamped to [0, 1].
/// Coverage of one visible object is kappa * (s / z)^2.
double screen_coverage(std::span<const SceneEvent> events, double t, double fov_width_w,
                       double kappa);

/// Renders the script into one 1 Hz sample per second for every catalog
/// metric. Sample t is taken at the middle of second t, so a crossing shorter
/// than a second perturbs at most one sample.
SimulationOutput simulate(const SceneScript &script, const MetricCatalog &catalog,
                          const SimulationProfile &profile = default_profile());

struct CorpusClass {
    std::string label;
    SceneScript script;
};

struct CorpusSpec {
    std::vector<CorpusClass> classes;
    std::size_t repetitions = 20;
    std::uint64_t seed = 0;
    /// Items are assigned round-robin to this many groups ("p0", "p1", ...).
    std::size_t groups = 1;
};

nlohmann::json corpus_spec_to_json(const CorpusSpec &spec);
CorpusSpec corpus_spec_from_json(const nlohmann::json &j);
CorpusSpec load_corpus_spec(const std::filesystem::path &path);

/// classes x repetitions traces; item (c, r) is seeded with derive_seed(seed, c, r).
LabeledCorpus generate_corpus(const CorpusSpec &spec, const MetricCatalog &catalog,
                              const SimulationProfile &profile = default_profile());

struct StaircaseOptions {
    SceneType scene_type = SceneType::VR;
    std::uint64_t seed = 0;
    bool noiseless = false;
};

/// The script behind avatar_staircase.
SceneScript staircase_script(int n, int hold_s, const StaircaseOptions &options = {});

/// n avatars joining hold_s seconds apart after a 2 * hold_s lead-in; the
/// capture ends hold_s after the last join (55 s for nine avatars at 5 s).
SimulationOutput avatar_staircase(int n, int hold_s, const MetricCatalog &catalog,
                                  const StaircaseOptions &options = {},
                                  const SimulationProfile &profile = default_profile());

/// Demo app-fingerprinting corpus: each class is one app session with its
/// own random per-metric intensity vector.
CorpusSpec make_app_corpus_spec(std::size_t n_classes, std::size_t repetitions, std::uint64_t seed,
                                const MetricCatalog &catalog, std::size_t duration_s = 30);

/// Long capture of static objects of random size and depth held for 5 s each
/// (with occasional empty gaps) for pixel/metric regression.
SceneScript make_pixel_sweep_script(SceneType scene, std::size_t n_seconds, std::uint64_t seed);

} // namespace counterscope
