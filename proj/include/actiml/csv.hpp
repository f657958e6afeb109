#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace actiml {

// Comma-split without quoting rules; the dataset layout never quotes fields.
// Trailing '\r' (CRLF files) is stripped before splitting.
std::vector<std::string> split_csv_line(std::string_view line);

std::string_view trim(std::string_view text);

// Shortest round-trip decimal form (std::to_chars). Integral values print
// without a decimal point.
std::string format_double(double value);

// Strict full-field parses; return false on trailing garbage.
bool parse_double_field(std::string_view text, double& out);
bool parse_int_field(std::string_view text, long long& out);

// Line-oriented reader that tracks 1-based line numbers for error context.
class LineReader {
public:
    explicit LineReader(const std::filesystem::path& path);

    // False at end of file. Strips one trailing '\r'.
    bool next(std::string& line);

    std::size_t line_number() const { return line_number_; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ifstream stream_;
    std::size_t line_number_{0};
};

} // namespace actiml
