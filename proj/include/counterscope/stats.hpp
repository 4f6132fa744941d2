#pragma once

#include <span>
#include <vector>

namespace counterscope::stats {

// Population (1/n) moments throughout.

double mean(std::span<const double> x);
double pop_stddev(std::span<const double> x);

/// Pearson correlation. Returns 0 when either series is constant.
/// Throws length_mismatch / too_short (fewer than 2 samples).
double pearson(std::span<const double> x, std::span<const double> y);

struct ZScore {
    std::vector<double> values;
    double mean = 0.0;
    double stddev = 0.0;
};

/// Fits mean / population stddev on `train` and standardizes `apply_to` with
/// them. A constant training series maps everything to 0.
ZScore zscore_fit_apply(std::span<const double> train, std::span<const double> apply_to);

struct RegressionFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept. R^2 is 1 when y is
/// constant (SS_tot == 0). Throws degenerate_x for constant x.
RegressionFit linreg(std::span<const double> x, std::span<const double> y);

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;
    double max = 0.0;
    double min = 0.0;
};

Summary summarize(std::span<const double> x);

} // namespace counterscope::stats
