#pragma once

#include <stdexcept>
#include <string>

namespace counterscope {

enum class Errc {
    io_error,
    schema_error,
    parse_error,
    ragged_rows,
    missing_trace_file,
    inconsistent_metrics,
    too_short,
    precondition,
    invalid_script,
    invalid_spec,
    length_mismatch,
    degenerate_x,
    empty_input,
    unknown_metric,
    insufficient_labels,
    label_too_small,
    degenerate_input,
    unknown_label,
    class_too_small,
    single_group,
    empty_grid,
    no_known_metrics,
    no_step_found,
    out_of_range,
    invalid_strategy,
    empty_corpus,
    invalid_model,
};

const char *errc_name(Errc code) noexcept;

// All data and validation failures raised by the library carry an Errc so
// callers (and the CLI exit-code mapping) can tell them apart.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string &message);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace counterscope
