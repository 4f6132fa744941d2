#pragma once
// Small helpers shared by the unit tests: scratch directories and
// hand-rolled random generators.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "counterscope/error.hpp"
#include "counterscope/traces.hpp"

namespace testutil {

/// Runs f and returns the Errc it threw, or nullopt.
template <class F> std::optional<counterscope::Errc> errc_of(F &&f) {
    try {
        f();
    } catch (const counterscope::Error &e) {
        return e.code();
    }
    return std::nullopt;
}

#define CHECK_ERRC(expr, code) CHECK(::testutil::errc_of([&] { (void)(expr); }) == (code))

class TempDir {
public:
    explicit TempDir(const std::string &tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("cs_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;
    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path &p, const std::string &text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<double> normal_vector(std::mt19937_64 &rng, std::size_t n, double mu = 0.0, double sd = 1.0) {
    std::normal_distribution<double> d(mu, sd);
    std::vector<double> v(n);
    for (auto &x : v)
        x = d(rng);
    return v;
}

inline std::vector<double> uniform_vector(std::mt19937_64 &rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto &x : v)
        x = d(rng);
    return v;
}

/// Random TraceSet with metrics m0..m{k-1}.
inline counterscope::TraceSet random_trace(std::mt19937_64 &rng, std::size_t n_seconds, std::size_t k) {
    std::vector<std::string> ids;
    for (std::size_t j = 0; j < k; ++j)
        ids.push_back("m" + std::to_string(j));
    return counterscope::TraceSet(ids, n_seconds, normal_vector(rng, n_seconds * k, 10.0, 3.0));
}

/// Single-column trace.
inline counterscope::TraceSet column_trace(const std::string &id, std::vector<double> values) {
    const std::size_t n = values.size();
    return counterscope::TraceSet({id}, n, std::move(values));
}

} // namespace testutil
