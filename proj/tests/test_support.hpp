#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <sys/wait.h>

#include "actiml/features.hpp"
#include "actiml/matrix.hpp"
#include "actiml/rng.hpp"

namespace testsupport {

// Self-deleting scratch directory under the system temp root.
class TempDir {
public:
    TempDir() {
        std::string pattern =
            (std::filesystem::temp_directory_path() / "actiml-XXXXXX").string();
        if (!mkdtemp(pattern.data())) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = pattern;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr combined
};

// Runs the built CLI with the given argument string; captures both streams.
inline CliResult run_cli(const std::string& args) {
    const std::string command = std::string(ACTIML_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed for: " + command);
    CliResult result;
    char buffer[4096];
    std::size_t got = 0;
    while ((got = fread(buffer, 1, sizeof(buffer), pipe)) > 0) {
        result.output.append(buffer, got);
    }
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << content;
}

// Two Gaussian blobs along every dimension: class 0 centered at 0, class 1
// at `separation`. Deterministic in the seed; rows are class 0 then class 1.
inline actiml::LabeledFeatureMatrix make_blobs(std::size_t n0, std::size_t n1,
                                               std::size_t d, double separation,
                                               std::uint64_t seed) {
    actiml::Rng rng(seed);
    actiml::LabeledFeatureMatrix matrix;
    matrix.rows = actiml::Matrix(n0 + n1, d);
    matrix.labels.resize(n0 + n1);
    for (std::size_t r = 0; r < n0 + n1; ++r) {
        const int label = r < n0 ? 0 : 1;
        matrix.labels[r] = label;
        for (std::size_t c = 0; c < d; ++c) {
            matrix.rows(r, c) = actiml::sample_standard_normal(rng) +
                                (label == 1 ? separation : 0.0);
        }
        matrix.provenance.push_back(
            {"row_" + std::to_string(r), actiml::Date{2020, 1, 1}});
    }
    for (std::size_t c = 0; c < d; ++c) {
        matrix.feature_names.push_back("f" + std::to_string(c));
    }
    return matrix;
}

} // namespace testsupport
