#include "counterscope/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "counterscope/error.hpp"

namespace counterscope::stats {

namespace {
void require_pair(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw Error(Errc::length_mismatch,
                    std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    if (x.size() < 2)
        throw Error(Errc::too_short, "need at least 2 samples");
}

struct Moments {
    double mx, my, sxx, syy, sxy;
};

Moments centered_moments(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    Moments m{};
    m.mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    m.my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - m.mx;
        const double dy = y[i] - m.my;
        m.sxx += dx * dx;
        m.syy += dy * dy;
        m.sxy += dx * dy;
    }
    return m;
}
} // namespace

double mean(std::span<const double> x) {
    if (x.empty())
        throw Error(Errc::empty_input, "mean of empty series");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double pop_stddev(std::span<const double> x) {
    const double mu = mean(x);
    double ss = 0.0;
    for (double v : x)
        ss += (v - mu) * (v - mu);
    return std::sqrt(ss / static_cast<double>(x.size()));
}

double pearson(std::span<const double> x, std::span<const double> y) {
    require_pair(x, y);
    const auto m = centered_moments(x, y);
    if (m.sxx <= 0.0 || m.syy <= 0.0)
        return 0.0;
    const double r = m.sxy / std::sqrt(m.sxx * m.syy);
    return std::clamp(r, -1.0, 1.0);
}

ZScore zscore_fit_apply(std::span<const double> train, std::span<const double> apply_to) {
    if (train.empty())
        throw Error(Errc::empty_input, "empty training series");
    ZScore z;
    z.mean = mean(train);
    z.stddev = pop_stddev(train);
    z.values.resize(apply_to.size(), 0.0);
    if (z.stddev > 0.0)
        for (std::size_t i = 0; i < apply_to.size(); ++i)
            z.values[i] = (apply_to[i] - z.mean) / z.stddev;
    return z;
}

RegressionFit linreg(std::span<const double> x, std::span<const double> y) {
    require_pair(x, y);
    const auto m = centered_moments(x, y);
    if (m.sxx <= 0.0)
        throw Error(Errc::degenerate_x, "x is constant");
    RegressionFit fit;
    fit.slope = m.sxy / m.sxx;
    fit.intercept = m.my - fit.slope * m.mx;
    if (m.syy <= 0.0) {
        fit.r_squared = 1.0;
        return fit;
    }
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (fit.slope * x[i] + fit.intercept);
        ss_res += e * e;
    }
    fit.r_squared = std::clamp(1.0 - ss_res / m.syy, 0.0, 1.0);
    return fit;
}

Summary summarize(std::span<const double> x) {
    if (x.empty())
        throw Error(Errc::empty_input, "summary of empty series");
    Summary s;
    s.mean = mean(x);
    s.stddev = pop_stddev(x);
    auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    s.min = *lo;
    s.max = *hi;
    return s;
}

} // namespace counterscope::stats
