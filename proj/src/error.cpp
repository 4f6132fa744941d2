#include "counterscope/error.hpp"
#include "counterscope/rng.hpp"

namespace counterscope {

const char *errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::io_error: return "io_error";
    case Errc::schema_error: return "schema_error";
    case Errc::parse_error: return "parse_error";
    case Errc::ragged_rows: return "ragged_rows_error";
    case Errc::missing_trace_file: return "missing_trace_file";
    case Errc::inconsistent_metrics: return "inconsistent_metrics_error";
    case Errc::too_short: return "too_short";
    case Errc::precondition: return "precondition_violation";
    case Errc::invalid_script: return "invalid_script";
    case Errc::invalid_spec: return "invalid_spec";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::degenerate_x: return "degenerate_x";
    case Errc::empty_input: return "empty";
    case Errc::unknown_metric: return "unknown_metric";
    case Errc::insufficient_labels: return "insufficient_labels";
    case Errc::label_too_small: return "label_too_small";
    case Errc::degenerate_input: return "degenerate_input";
    case Errc::unknown_label: return "unknown_label";
    case Errc::class_too_small: return "class_too_small";
    case Errc::single_group: return "single_group";
    case Errc::empty_grid: return "empty_grid";
    case Errc::no_known_metrics: return "no_known_metrics";
    case Errc::no_step_found: return "no_step_found";
    case Errc::out_of_range: return "out_of_range";
    case Errc::invalid_strategy: return "invalid_strategy";
    case Errc::empty_corpus: return "empty_corpus";
    case Errc::invalid_model: return "invalid_model";
    }
    return "unknown";
}

Error::Error(Errc code, const std::string &message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

namespace {
std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ (a + 0x632be59bd9b4e019ULL));
    h = splitmix64(h ^ (b + 0x8cb92ba72f3d8dd7ULL));
    return h;
}

} // namespace counterscope
