#pragma once

// Minimal CSV helpers: field splitting with double-quote support, exact
// number parsing/formatting via <charconv>.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace zonecast::csv {

/// Splits one line into fields. Handles "quoted, fields" and "" escapes.
/// A trailing '\r' is ignored.
std::vector<std::string> split_line(std::string_view line);

/// Full-field parse; rejects trailing junk, empty input and non-finite values.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

/// Shortest representation that round-trips to the same double.
std::string format_double(double v);

/// Quotes a field if it contains a comma, quote or newline.
std::string quote(std::string_view field);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Iterates the lines of a buffer; `fn(line_number, line)` with 1-based numbers.
template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(++line_no, line);
    pos = end + 1;
  }
}

}  // namespace zonecast::csv
