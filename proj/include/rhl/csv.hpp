#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rhl::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name, or nullopt.
  std::optional<std::size_t> find(std::string_view name) const;
  /// Column index by name; throws MissingColumn.
  std::size_t require(std::string_view name) const;
};

/// Reads a comma-separated file with a header row. Blank lines are skipped;
/// double-quoted fields may contain commas.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text);

std::vector<std::string> split_line(std::string_view line);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

double parse_double(std::string_view field, std::string_view context);
long long parse_int(std::string_view field, std::string_view context);

std::string_view trim(std::string_view s);

}  // namespace rhl::csv
