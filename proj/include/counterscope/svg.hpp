#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace counterscope::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Static line chart; output depends only on the inputs.
std::string line_chart(const std::string &title, const std::string &x_label, const std::string &y_label,
                       const std::vector<Series> &series);

/// Confusion-style heatmap; rows are true labels, columns predictions.
std::string heatmap(const std::string &title, const std::vector<std::string> &labels,
                    const std::vector<std::vector<std::size_t>> &counts);

} // namespace counterscope::svg
