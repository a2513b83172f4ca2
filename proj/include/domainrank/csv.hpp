#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace domainrank::csv {

// Shortest exact decimal representation; round-trips bit-exactly.
std::string format_double(double v);

std::vector<std::string> split_fields(std::string_view line);

std::optional<double> parse_double(std::string_view field);
std::optional<long long> parse_int(std::string_view field);

// Reads all rows of a CSV file; the first row must equal `header` exactly.
// Trailing CR (CRLF files) is stripped; blank trailing lines are ignored.
// Throws IoError if unreadable, IngestError on a header mismatch.
std::vector<std::vector<std::string>> read_rows(
    const std::filesystem::path& path, const std::string& header);

class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::string& header);
  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

}  // namespace domainrank::csv
