#include <doctest.h>

#include "counterscope/svg.hpp"

using namespace counterscope;

TEST_CASE("line chart is deterministic and well formed") {
    const std::vector<svg::Series> s{{"a & b", {0, 1, 2}, {1, 4, 9}}, {"c", {0, 2}, {3, 3}}};
    const auto out = svg::line_chart("title <x>", "t (s)", "value", s);
    CHECK(out == svg::line_chart("title <x>", "t (s)", "value", s));
    CHECK(out.rfind("<svg", 0) == 0);
    CHECK(out.find("</svg>") != std::string::npos);
    CHECK(out.find("title &lt;x&gt;") != std::string::npos);
    CHECK(out.find("a &amp; b") != std::string::npos);
    CHECK(out.find("<polyline") != std::string::npos);
}

TEST_CASE("line chart tolerates degenerate input") {
    CHECK(svg::line_chart("empty", "x", "y", {}).find("</svg>") != std::string::npos);
    CHECK(svg::line_chart("flat", "x", "y", {{"one", {1}, {1}}}).find("</svg>") != std::string::npos);
}

TEST_CASE("heatmap has one cell per entry") {
    const auto out = svg::heatmap("confusion", {"a", "b"}, {{3, 1}, {0, 4}});
    std::size_t rects = 0;
    for (std::size_t p = out.find("<rect"); p != std::string::npos; p = out.find("<rect", p + 1))
        ++rects;
    CHECK(rects >= 4);
    CHECK(out.find(">4<") != std::string::npos);
    CHECK(out == svg::heatmap("confusion", {"a", "b"}, {{3, 1}, {0, 4}}));
}
