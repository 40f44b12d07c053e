#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace prefab::csv {

/// Numeric table with a header row. No quoting support; the formats used here
/// never need it. Lines starting with '#' are comments.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::ptrdiff_t column(const std::string& name) const;
};

Table read(const std::filesystem::path& path);
std::vector<std::string> split(const std::string& line, char sep = ',');

/// Shortest round-trip decimal for a double.
std::string format_double(double v);

}  // namespace prefab::csv
