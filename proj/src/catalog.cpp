#include "counterscope/catalog.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>

#include "counterscope/error.hpp"

namespace counterscope {

namespace {

constexpr std::array<std::pair<Category, std::string_view>, 6> kCategoryNames{{
    {Category::gpu_utilization, "gpu_utilization"},
    {Category::stalls, "stalls"},
    {Category::memory_access, "memory_access"},
    {Category::shader_instruction, "shader_instruction"},
    {Category::geometry_rasterization, "geometry_rasterization"},
    {Category::texture_filtering, "texture_filtering"},
}};

constexpr std::array<std::pair<Unit, std::string_view>, 5> kUnitNames{{
    {Unit::percent, "percent"},
    {Unit::per_second, "per_second"},
    {Unit::bytes_per_second, "bytes_per_second"},
    {Unit::count, "count"},
    {Unit::ratio, "ratio"},
}};

constexpr std::array<std::pair<Direction, std::string_view>, 2> kDirectionNames{{
    {Direction::increases_with_load, "increases_with_load"},
    {Direction::decreases_with_load, "decreases_with_load"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N> &table, E v) {
    for (const auto &[e, name] : table)
        if (e == v)
            return name;
    return "?";
}

template <typename E, std::size_t N>
std::optional<E> parse_name(const std::array<std::pair<E, std::string_view>, N> &table,
                            std::string_view s) {
    for (const auto &[e, name] : table)
        if (name == s)
            return e;
    return std::nullopt;
}

MetricDescriptor entry(std::string id, std::string display, Category c, Unit u,
                       Direction d = Direction::increases_with_load) {
    return MetricDescriptor{std::move(id), std::move(display), c, u, d};
}

MetricCatalog make_builtin() {
    using C = Category;
    using U = Unit;
    constexpr auto dec = Direction::decreases_with_load;
    std::vector<MetricDescriptor> e;
    e.reserve(30);
    // GPU utilization
    e.push_back(entry("gpu_frequency", "GPU Frequency", C::gpu_utilization, U::per_second));
    e.push_back(entry("gpu_bus_busy", "GPU % Bus Busy", C::gpu_utilization, U::percent));
    e.push_back(entry("preemptions_per_second", "Preemptions / second", C::gpu_utilization,
                      U::per_second));
    e.push_back(entry("avg_preemption_delay", "Avg Preemption Delay", C::gpu_utilization,
                      U::ratio));
    // Stalls
    e.push_back(entry("vertex_fetch_stall", "% Vertex Fetch Stall", C::stalls, U::percent));
    e.push_back(entry("texture_fetch_stall", "% Texture Fetch Stall", C::stalls, U::percent));
    e.push_back(entry("texture_l2_miss", "% Texture L2 Miss", C::stalls, U::percent));
    e.push_back(entry("stalled_on_system_memory", "% Stalled on System Memory", C::stalls,
                      U::percent));
    // Memory access
    e.push_back(entry("vertex_memory_read", "Vertex Memory Read (Bytes/Second)",
                      C::memory_access, U::bytes_per_second));
    e.push_back(entry("sp_memory_read", "SP Memory Read (Bytes/Second)", C::memory_access,
                      U::bytes_per_second));
    e.push_back(entry("global_memory_load_instructions", "Global Memory Load Instructions",
                      C::memory_access, U::count));
    e.push_back(entry("global_buffer_data_read_request_bw",
                      "Global Buffer Data Read Request BW (Bytes/sec)", C::memory_access,
                      U::bytes_per_second));
    e.push_back(entry("global_buffer_data_read_bw", "Global Buffer Data Read BW (Bytes/sec)",
                      C::memory_access, U::bytes_per_second));
    e.push_back(entry("global_buffer_read_l2_hit", "% Global Buffer Read L2 Hit",
                      C::memory_access, U::percent));
    e.push_back(entry("global_image_uncompressed_data_read_bw",
                      "Global Image Uncompressed Data Read BW (Bytes/sec)", C::memory_access,
                      U::bytes_per_second));
    e.push_back(entry("bytes_data_write_requested", "Bytes Data Write Requested",
                      C::memory_access, U::bytes_per_second));
    e.push_back(entry("bytes_data_actually_written", "Bytes Data Actually Written",
                      C::memory_access, U::bytes_per_second));
    // Shader / instruction
    e.push_back(entry("vertex_instructions_per_second", "Vertex Instructions / Second",
                      C::shader_instruction, U::per_second));
    e.push_back(entry("local_memory_store_instructions", "Local Memory Store Instructions",
                      C::shader_instruction, U::count));
    e.push_back(entry("avg_load_store_instructions_per_cycle",
                      "Avg Load-Store Instructions Per Cycle", C::shader_instruction, U::ratio));
    e.push_back(entry("avg_bytes_per_fragment", "Avg Bytes / Fragment", C::shader_instruction,
                      U::ratio));
    e.push_back(entry("l1_texture_cache_miss_per_pixel", "L1 Texture Cache Miss Per Pixel",
                      C::shader_instruction, U::ratio));
    // Geometry / rasterization
    e.push_back(entry("pre_clipped_polygons_per_second", "Pre-clipped Polygons/Second",
                      C::geometry_rasterization, U::per_second));
    e.push_back(entry("prims_trivially_rejected", "% Prims Trivially Rejected",
                      C::geometry_rasterization, U::percent, dec));
    e.push_back(entry("prims_clipped", "% Prims Clipped", C::geometry_rasterization,
                      U::percent, dec));
    e.push_back(entry("average_vertices_per_polygon", "Average Vertices / Polygon",
                      C::geometry_rasterization, U::ratio, dec));
    e.push_back(entry("average_polygon_area", "Average Polygon Area",
                      C::geometry_rasterization, U::ratio, dec));
    // Texture / filtering
    e.push_back(entry("nearest_filtered", "% Nearest Filtered", C::texture_filtering,
                      U::percent));
    e.push_back(entry("anisotropic_filtered", "% Anisotropic Filtered", C::texture_filtering,
                      U::percent));
    e.push_back(entry("non_base_level_textures", "% Non-Base Level Textures",
                      C::texture_filtering, U::percent));
    return MetricCatalog(std::move(e));
}

} // namespace

std::string_view to_string(Category c) noexcept { return name_of(kCategoryNames, c); }
std::string_view to_string(Unit u) noexcept { return name_of(kUnitNames, u); }
std::string_view to_string(Direction d) noexcept { return name_of(kDirectionNames, d); }
std::optional<Category> parse_category(std::string_view s) noexcept {
    return parse_name(kCategoryNames, s);
}
std::optional<Unit> parse_unit(std::string_view s) noexcept { return parse_name(kUnitNames, s); }
std::optional<Direction> parse_direction(std::string_view s) noexcept {
    return parse_name(kDirectionNames, s);
}

std::pair<double, double> MetricDescriptor::valid_range() const noexcept {
    if (unit == Unit::percent)
        return {0.0, 100.0};
    return {0.0, std::numeric_limits<double>::infinity()};
}

bool is_valid_metric_id(std::string_view id) noexcept {
    return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

MetricCatalog::MetricCatalog(std::vector<MetricDescriptor> entries) : entries_(std::move(entries)) {
    index_.reserve(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto &id = entries_[i].id;
        if (!is_valid_metric_id(id))
            throw Error(Errc::schema_error, "entry " + std::to_string(i) + ": invalid id '" + id + "'");
        if (!index_.emplace(id, i).second)
            throw Error(Errc::schema_error, "entry " + std::to_string(i) + ": duplicate id '" + id + "'");
    }
}

const MetricDescriptor *MetricCatalog::find(std::string_view id) const noexcept {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &entries_[it->second];
}

const MetricDescriptor &MetricCatalog::at(std::string_view id) const {
    if (const auto *d = find(id))
        return *d;
    throw Error(Errc::unknown_metric, std::string(id));
}

std::optional<std::size_t> MetricCatalog::index_of(std::string_view id) const noexcept {
    auto it = index_.find(std::string(id));
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

std::vector<std::string> MetricCatalog::ids() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto &e : entries_)
        out.push_back(e.id);
    return out;
}

std::vector<std::string> MetricCatalog::in_catalog_order(const std::vector<std::string> &ids) const {
    std::vector<std::pair<std::size_t, std::string>> keyed;
    keyed.reserve(ids.size());
    for (const auto &id : ids) {
        auto idx = index_of(id);
        if (!idx)
            throw Error(Errc::unknown_metric, id);
        keyed.emplace_back(*idx, id);
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::string> out;
    out.reserve(keyed.size());
    for (auto &[_, id] : keyed)
        out.push_back(std::move(id));
    return out;
}

const MetricCatalog &builtin_catalog() {
    static const MetricCatalog catalog = make_builtin();
    return catalog;
}

nlohmann::json catalog_to_json(const MetricCatalog &catalog) {
    auto arr = nlohmann::json::array();
    for (const auto &e : catalog.entries()) {
        arr.push_back({{"id", e.id},
                       {"display_name", e.display_name},
                       {"category", to_string(e.category)},
                       {"unit", to_string(e.unit)},
                       {"direction", to_string(e.direction)}});
    }
    return arr;
}

MetricCatalog catalog_from_json(const nlohmann::json &j) {
    if (!j.is_array())
        throw Error(Errc::schema_error, "catalog must be a JSON array");
    std::vector<MetricDescriptor> entries;
    entries.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto &o = j[i];
        auto where = "entry " + std::to_string(i);
        if (!o.is_object())
            throw Error(Errc::schema_error, where + ": not an object");
        auto field = [&](const char *key) -> std::string {
            auto it = o.find(key);
            if (it == o.end() || !it->is_string())
                throw Error(Errc::schema_error, where + ": missing string field '" + key + "'");
            return it->get<std::string>();
        };
        MetricDescriptor d;
        d.id = field("id");
        d.display_name = field("display_name");
        auto cat = parse_category(field("category"));
        if (!cat)
            throw Error(Errc::schema_error, where + ": unknown category '" + field("category") + "'");
        auto unit = parse_unit(field("unit"));
        if (!unit)
            throw Error(Errc::schema_error, where + ": unknown unit '" + field("unit") + "'");
        auto dir = parse_direction(field("direction"));
        if (!dir)
            throw Error(Errc::schema_error, where + ": unknown direction '" + field("direction") + "'");
        d.category = *cat;
        d.unit = *unit;
        d.direction = *dir;
        entries.push_back(std::move(d));
    }
    return MetricCatalog(std::move(entries));
}

MetricCatalog load_catalog(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io_error, "cannot open " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw Error(Errc::schema_error, path.string() + ": " + e.what());
    }
    return catalog_from_json(j);
}

void write_catalog(const MetricCatalog &catalog, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out)
        throw Error(Errc::io_error, "cannot write " + path.string());
    out << catalog_to_json(catalog).dump(2) << '\n';
}

} // namespace counterscope
