#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "popbands/popbands.hpp"

namespace testutil {

/// Directory holding the checked-in test inputs. Set by the test driver;
/// defaults to the in-tree location for manual runs from the repo root.
inline std::string fixture_dir() {
    const char* env = std::getenv("POPBANDS_FIXTURES");
    return env ? env : "tests/fixtures";
}

inline std::string fixture_path(const std::string& name) {
    return fixture_dir() + "/" + name;
}

/// Path of the command-line binary under test.
inline std::string cli_path() {
    const char* env = std::getenv("POPBANDS_CLI");
    return env ? env : "build/tools/popbands";
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        const unsigned id = counter.fetch_add(1);
        path_ = std::filesystem::temp_directory_path() /
                ("popbands_test_" + std::to_string(::getpid()) + "_" + std::to_string(id));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] std::string path() const { return path_.string(); }
    [[nodiscard]] std::string file(const std::string& name) const {
        return (path_ / name).string();
    }
    [[nodiscard]] std::string write(const std::string& name, const std::string& content) const {
        const std::string p = file(name);
        spit(p, content);
        return p;
    }

private:
    std::filesystem::path path_;
};

struct CliResult {
    int exit_code = -1;
    std::string output;  ///< stdout and stderr combined
};

/// Runs the CLI with the given argument string, capturing combined output.
inline CliResult run_cli(const std::string& args, const TempDir& scratch,
                         const std::string& capture_name = "cli_output.txt") {
    const std::string capture = scratch.file(capture_name);
    const std::string cmd = cli_path() + " " + args + " > " + capture + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output = slurp(capture);
    return result;
}

// ---- deterministic series generators ---------------------------------------

inline popbands::AnnualSeries white_noise(std::uint64_t seed, int n, double sd = 1.0,
                                          int start = 1950) {
    popbands::SplitMix64 rng(seed);
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = sd * rng.next_gaussian();
    return popbands::AnnualSeries(start, std::move(v));
}

/// Zero-mean AR(1) started from w_0 = 0.
inline popbands::AnnualSeries ar1_series(std::uint64_t seed, int n, double phi, double sd = 1.0,
                                         int start = 1950) {
    popbands::SplitMix64 rng(seed);
    std::vector<double> v(n);
    double w = 0.0;
    for (int i = 0; i < n; ++i) {
        w = phi * w + sd * rng.next_gaussian();
        v[i] = w;
    }
    return popbands::AnnualSeries(start, std::move(v));
}

/// Integrated AR(1): first differences follow an AR(1) with the given phi.
inline popbands::AnnualSeries integrated_ar1_series(std::uint64_t seed, int n, double phi,
                                                    double sd = 1.0, int start = 1950) {
    popbands::SplitMix64 rng(seed);
    std::vector<double> v(n);
    double w = 0.0, z = 0.0;
    for (int i = 0; i < n; ++i) {
        w = phi * w + sd * rng.next_gaussian();
        z += w;
        v[i] = z;
    }
    return popbands::AnnualSeries(start, std::move(v));
}

/// The exact process behind tests/fixtures/estonia_density_synthetic.csv:
/// a gentle linear trend plus an integrated AR(1) disturbance, 74 annual
/// values ending in 2023.
inline popbands::AnnualSeries fixture_like_series() {
    popbands::SplitMix64 rng(1);
    const int n = 74;
    std::vector<double> density(n);
    double w = 0.0, z = 0.0;
    for (int i = 0; i < n; ++i) {
        w = 0.65 * w + 0.09 * rng.next_gaussian();
        z += w;
        density[i] = 30.8 + 0.0242 * (i + 1) + z;
    }
    return popbands::AnnualSeries(1950, std::move(density));
}

}  // namespace testutil
