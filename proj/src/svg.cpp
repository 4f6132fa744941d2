#include "counterscope/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace counterscope::svg {

namespace {

constexpr const char *kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

} // namespace

std::string line_chart(const std::string &title, const std::string &x_label, const std::string &y_label,
                       const std::vector<Series> &series) {
    constexpr double W = 720, H = 420, L = 70, R = 170, T = 40, B = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto &s : series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
                continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!(x0 <= x1)) {
        x0 = 0;
        x1 = 1;
        y0 = 0;
        y1 = 1;
    }
    if (x1 == x0)
        x1 = x0 + 1;
    if (y1 == y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double pw = W - L - R, ph = H - T - B;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return T + ph - (y - y0) / (y1 - y0) * ph; };

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) +
                    "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) +
         "</text>\n";
    s += "<rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
        s += "<text x=\"" + num(px(fx)) + "\" y=\"" + num(T + ph + 16) + "\" text-anchor=\"middle\">" + tick(fx) +
             "</text>\n";
        s += "<text x=\"" + num(L - 6) + "\" y=\"" + num(py(fy) + 4) + "\" text-anchor=\"end\">" + tick(fy) +
             "</text>\n";
    }
    s += "<text x=\"" + num(L + pw / 2) + "\" y=\"" + num(H - 10) + "\" text-anchor=\"middle\">" +
         escape(x_label) + "</text>\n";
    s += "<text x=\"16\" y=\"" + num(T + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num(T + ph / 2) + ")\">" + escape(y_label) + "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto &ser = series[k];
        const char *color = kPalette[k % std::size(kPalette)];
        std::string pts;
        for (std::size_t i = 0; i < std::min(ser.x.size(), ser.y.size()); ++i) {
            if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i]))
                continue;
            pts += num(px(ser.x[i])) + "," + num(py(ser.y[i])) + " ";
        }
        if (!pts.empty())
            pts.pop_back();
        s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
             "\"/>\n";
        const double ly = T + 14 + 16 * static_cast<double>(k);
        s += "<line x1=\"" + num(W - R + 10) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(W - R + 28) + "\" y2=\"" +
             num(ly - 4) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + num(W - R + 32) + "\" y=\"" + num(ly) + "\">" + escape(ser.name) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

std::string heatmap(const std::string &title, const std::vector<std::string> &labels,
                    const std::vector<std::vector<std::size_t>> &counts) {
    const std::size_t n = labels.size();
    const double cell = n > 30 ? 14 : 24, L = 110, T = 50;
    const double W = L + cell * static_cast<double>(n) + 20, H = T + cell * static_cast<double>(n) + 90;
    std::size_t peak = 1;
    for (const auto &row : counts)
        for (auto c : row)
            peak = std::max(peak, c);
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) +
                    "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
         "</text>\n";
    for (std::size_t i = 0; i < n && i < counts.size(); ++i) {
        const double y = T + cell * static_cast<double>(i);
        s += "<text x=\"" + num(L - 4) + "\" y=\"" + num(y + cell * 0.65) + "\" text-anchor=\"end\">" +
             escape(labels[i]) + "</text>\n";
        for (std::size_t j = 0; j < n && j < counts[i].size(); ++j) {
            const double x = L + cell * static_cast<double>(j);
            const double f = static_cast<double>(counts[i][j]) / static_cast<double>(peak);
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - f)));
            char fill[16];
            std::snprintf(fill, sizeof(fill), "#%02x%02xff", shade, shade);
            s += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cell) + "\" height=\"" + num(cell) +
                 "\" fill=\"" + fill + "\" stroke=\"#ddd\"/>\n";
            if (counts[i][j])
                s += "<text x=\"" + num(x + cell / 2) + "\" y=\"" + num(y + cell * 0.65) +
                     "\" text-anchor=\"middle\">" + std::to_string(counts[i][j]) + "</text>\n";
        }
    }
    const double base = T + cell * static_cast<double>(n) + 6;
    for (std::size_t j = 0; j < n; ++j) {
        const double x = L + cell * (static_cast<double>(j) + 0.5);
        s += "<text x=\"" + num(x) + "\" y=\"" + num(base) + "\" transform=\"rotate(60 " + num(x) + " " + num(base) +
             ")\">" + escape(labels[j]) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

} // namespace counterscope::svg
