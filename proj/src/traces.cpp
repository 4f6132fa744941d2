#include "counterscope/traces.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "counterscope/error.hpp"

namespace counterscope {

namespace fs = std::filesystem;

TraceSet::TraceSet(std::vector<std::string> metrics, std::size_t n_seconds,
                   std::vector<double> values, std::int64_t t0, Meta meta)
    : metrics_(std::move(metrics)), n_seconds_(n_seconds), values_(std::move(values)), t0_(t0),
      meta_(std::move(meta)) {
    if (n_seconds_ == 0)
        throw Error(Errc::precondition, "trace must have at least one sample");
    if (values_.size() != n_seconds_ * metrics_.size())
        throw Error(Errc::precondition, "trace value count does not match shape");
    std::unordered_set<std::string> seen;
    for (const auto &m : metrics_)
        if (!seen.insert(m).second)
            throw Error(Errc::precondition, "duplicate metric '" + m + "' in trace");
    for (double v : values_)
        if (!std::isfinite(v))
            throw Error(Errc::precondition, "non-finite sample in trace");
}

std::optional<std::size_t> TraceSet::metric_index(const std::string &id) const noexcept {
    auto it = std::find(metrics_.begin(), metrics_.end(), id);
    if (it == metrics_.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - metrics_.begin());
}

std::size_t TraceSet::require_metric(const std::string &id) const {
    if (auto j = metric_index(id))
        return *j;
    throw Error(Errc::unknown_metric, id);
}

std::vector<double> TraceSet::column(std::size_t j) const {
    std::vector<double> out(n_seconds_);
    for (std::size_t t = 0; t < n_seconds_; ++t)
        out[t] = at(t, j);
    return out;
}

MetricTrace TraceSet::trace(const std::string &id) const {
    return MetricTrace{id, column(id), t0_};
}

TraceSet TraceSet::slice(std::size_t start, std::size_t length) const {
    if (length == 0 || start + length > n_seconds_)
        throw Error(Errc::out_of_range, "slice [" + std::to_string(start) + ", " +
                                            std::to_string(start + length) + ") of " +
                                            std::to_string(n_seconds_) + "-second trace");
    const auto k = metrics_.size();
    std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(start * k),
                          values_.begin() + static_cast<std::ptrdiff_t>((start + length) * k));
    return TraceSet(metrics_, length, std::move(v), t0_ + static_cast<std::int64_t>(start), meta_);
}

TraceSet TraceSet::select(const std::vector<std::string> &ids) const {
    std::vector<std::size_t> cols;
    cols.reserve(ids.size());
    for (const auto &id : ids)
        cols.push_back(require_metric(id));
    std::vector<double> v;
    v.reserve(n_seconds_ * cols.size());
    for (std::size_t t = 0; t < n_seconds_; ++t)
        for (auto j : cols)
            v.push_back(at(t, j));
    return TraceSet(ids, n_seconds_, std::move(v), t0_, meta_);
}

const std::vector<std::string> &LabeledCorpus::metrics() const {
    static const std::vector<std::string> none;
    return items.empty() ? none : items.front().trace.metrics();
}

std::vector<std::string> LabeledCorpus::labels() const {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto &it : items)
        out.push_back(it.label);
    return out;
}

std::vector<std::string> LabeledCorpus::groups() const {
    std::vector<std::string> out;
    out.reserve(items.size());
    for (const auto &it : items)
        out.push_back(it.group);
    return out;
}

std::vector<std::string> LabeledCorpus::distinct_labels() const {
    std::set<std::string> s;
    for (const auto &it : items)
        s.insert(it.label);
    return {s.begin(), s.end()};
}

void LabeledCorpus::check_consistent() const {
    for (std::size_t i = 1; i < items.size(); ++i)
        if (items[i].trace.metrics() != items.front().trace.metrics())
            throw Error(Errc::inconsistent_metrics,
                        "item " + std::to_string(i) + " has a different metric list than item 0");
}

LabeledCorpus LabeledCorpus::subset(std::span<const std::size_t> indices) const {
    LabeledCorpus out;
    out.items.reserve(indices.size());
    for (auto i : indices)
        out.items.push_back(items.at(i));
    return out;
}

std::string format_value(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

template <typename T> bool parse_number(std::string_view s, T &out) {
    if (s.empty())
        return false;
    const char *first = s.data();
    if (*first == '+')
        ++first;
    auto res = std::from_chars(first, s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

} // namespace

TraceSet read_wide_csv(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::io_error, "cannot open " + path.string());
    std::string line;
    auto next_line = [&](std::string &l) {
        if (!std::getline(in, l))
            return false;
        if (!l.empty() && l.back() == '\r')
            l.pop_back();
        return true;
    };
    if (!next_line(line))
        throw Error(Errc::parse_error, path.string() + ": empty file");
    auto header = split_commas(line);
    if (header.size() < 2 || header.front() != "t_s")
        throw Error(Errc::parse_error, path.string() + ": header must start with 't_s' and name at least one metric");
    std::vector<std::string> metrics(header.begin() + 1, header.end());
    const std::size_t k = metrics.size();

    std::vector<double> values;
    std::size_t n = 0;
    std::int64_t t0 = 0;
    std::size_t row = 1;
    while (next_line(line)) {
        ++row;
        if (line.empty())
            continue;
        auto cells = split_commas(line);
        if (cells.size() != k + 1)
            throw Error(Errc::ragged_rows, path.string() + ": row " + std::to_string(row) + " has " +
                                               std::to_string(cells.size()) + " cells, expected " +
                                               std::to_string(k + 1));
        std::int64_t t = 0;
        if (!parse_number(cells[0], t))
            throw Error(Errc::parse_error, path.string() + ": row " + std::to_string(row) + ", col 1");
        if (n == 0)
            t0 = t;
        else if (t != t0 + static_cast<std::int64_t>(n))
            throw Error(Errc::parse_error, path.string() + ": row " + std::to_string(row) +
                                               ": t_s breaks the 1 Hz cadence");
        for (std::size_t j = 0; j < k; ++j) {
            double v = 0;
            if (!parse_number(cells[j + 1], v) || !std::isfinite(v))
                throw Error(Errc::parse_error, path.string() + ": row " + std::to_string(row) +
                                                   ", col " + std::to_string(j + 2));
            values.push_back(v);
        }
        ++n;
    }
    if (n == 0)
        throw Error(Errc::parse_error, path.string() + ": no data rows");
    try {
        return TraceSet(std::move(metrics), n, std::move(values), t0);
    } catch (const Error &e) {
        throw Error(Errc::parse_error, path.string() + ": " + e.what());
    }
}

void write_wide_csv(const TraceSet &trace, const fs::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(Errc::io_error, "cannot write " + path.string());
    std::string buf = "t_s";
    for (const auto &m : trace.metrics()) {
        buf += ',';
        buf += m;
    }
    buf += '\n';
    for (std::size_t t = 0; t < trace.n_seconds(); ++t) {
        buf += std::to_string(trace.t0() + static_cast<std::int64_t>(t));
        for (double v : trace.row(t)) {
            buf += ',';
            buf += format_value(v);
        }
        buf += '\n';
    }
    out << buf;
}

LabeledCorpus read_manifest(const fs::path &path) {
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io_error, "cannot open " + path.string());
    const auto base = path.parent_path();
    LabeledCorpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error &e) {
            throw Error(Errc::parse_error, path.string() + ": line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("trace") || !j["trace"].is_string() ||
            !j.contains("label") || !j["label"].is_string())
            throw Error(Errc::parse_error, path.string() + ": line " + std::to_string(lineno) +
                                               ": expected {\"trace\", \"label\", \"group\"}");
        fs::path trace_path = j["trace"].get<std::string>();
        if (trace_path.is_relative())
            trace_path = base / trace_path;
        if (!fs::exists(trace_path))
            throw Error(Errc::missing_trace_file, trace_path.string());
        CorpusItem item;
        item.trace = read_wide_csv(trace_path);
        item.label = j["label"].get<std::string>();
        item.group = j.value("group", std::string{});
        corpus.items.push_back(std::move(item));
    }
    corpus.check_consistent();
    return corpus;
}

fs::path write_manifest(const LabeledCorpus &corpus, const fs::path &dir) {
    fs::create_directories(dir / "traces");
    const auto manifest = dir / "manifest.jsonl";
    std::ofstream out(manifest, std::ios::binary);
    if (!out)
        throw Error(Errc::io_error, "cannot write " + manifest.string());
    for (std::size_t i = 0; i < corpus.items.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "trace_%04zu.csv", i);
        const auto rel = fs::path("traces") / name;
        write_wide_csv(corpus.items[i].trace, dir / rel);
        nlohmann::json j = {{"trace", rel.generic_string()},
                            {"label", corpus.items[i].label},
                            {"group", corpus.items[i].group}};
        out << j.dump() << '\n';
    }
    return manifest;
}

LabeledCorpus truncate_align(const LabeledCorpus &corpus, std::size_t n) {
    if (n == 0)
        throw Error(Errc::precondition, "truncate_align requires n >= 1");
    LabeledCorpus out;
    out.items.reserve(corpus.items.size());
    for (std::size_t i = 0; i < corpus.items.size(); ++i) {
        const auto &item = corpus.items[i];
        if (item.trace.n_seconds() < n)
            throw Error(Errc::too_short, "item " + std::to_string(i) + " has " +
                                             std::to_string(item.trace.n_seconds()) + " < " +
                                             std::to_string(n) + " seconds");
        out.items.push_back({item.trace.slice(0, n), item.label, item.group});
    }
    return out;
}

} // namespace counterscope
