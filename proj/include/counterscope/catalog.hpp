#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

namespace counterscope {

enum class Category {
    gpu_utilization,
    stalls,
    memory_access,
    shader_instruction,
    geometry_rasterization,
    texture_filtering,
};

enum class Unit { percent, per_second, bytes_per_second, count, ratio };

/// How a counter moves when more geometry / pixels are rendered. Four of the
/// geometry counters fall as load rises (fewer primitives rejected or clipped).
enum class Direction { increases_with_load, decreases_with_load };

std::string_view to_string(Category c) noexcept;
std::string_view to_string(Unit u) noexcept;
std::string_view to_string(Direction d) noexcept;
std::optional<Category> parse_category(std::string_view s) noexcept;
std::optional<Unit> parse_unit(std::string_view s) noexcept;
std::optional<Direction> parse_direction(std::string_view s) noexcept;

struct MetricDescriptor {
    std::string id;
    std::string display_name;
    Category category = Category::gpu_utilization;
    Unit unit = Unit::ratio;
    Direction direction = Direction::increases_with_load;

    /// +1 for counters that rise with load, -1 for those that fall.
    int sign() const noexcept { return direction == Direction::increases_with_load ? 1 : -1; }
    /// Physical range of the value; only percent counters are bounded above.
    std::pair<double, double> valid_range() const noexcept;

    bool operator==(const MetricDescriptor &) const = default;
};

bool is_valid_metric_id(std::string_view id) noexcept;

/// Ordered, immutable set of counter descriptors. Entry order is the scan
/// order used by correlation pruning and the column order of simulated traces.
class MetricCatalog {
public:
    MetricCatalog() = default;
    /// Throws Error(schema_error) on a malformed or duplicate id.
    explicit MetricCatalog(std::vector<MetricDescriptor> entries);

    const std::vector<MetricDescriptor> &entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    const MetricDescriptor *find(std::string_view id) const noexcept;
    /// Throws Error(unknown_metric).
    const MetricDescriptor &at(std::string_view id) const;
    std::optional<std::size_t> index_of(std::string_view id) const noexcept;
    std::vector<std::string> ids() const;

    /// Returns `ids` reordered into catalog order. Unknown ids throw.
    std::vector<std::string> in_catalog_order(const std::vector<std::string> &ids) const;

    bool operator==(const MetricCatalog &other) const { return entries_ == other.entries_; }

private:
    std::vector<MetricDescriptor> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// The 30 counters used for fingerprinting, grouped GPU utilization, stalls,
/// memory access, shader/instruction, geometry/rasterization, texture/filtering.
const MetricCatalog &builtin_catalog();

nlohmann::json catalog_to_json(const MetricCatalog &catalog);
MetricCatalog catalog_from_json(const nlohmann::json &j);
MetricCatalog load_catalog(const std::filesystem::path &path);
void write_catalog(const MetricCatalog &catalog, const std::filesystem::path &path);

} // namespace counterscope
