#include "domainrank/csv.hpp"

#include <array>
#include <charconv>
#include <system_error>

#include "domainrank/errors.hpp"

namespace domainrank::csv {

std::string format_double(double v) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.emplace_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::optional<double> parse_double(std::string_view field) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view field) {
  long long v = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end) return std::nullopt;
  return v;
}

static std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::vector<std::vector<std::string>> read_rows(
    const std::filesystem::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw IngestError(path.string() + ": empty file, expected header '" + header + "'");
  line = strip_cr(line);
  if (line != header)
    throw IngestError(path.string() + ": bad header '" + line + "', expected '" +
                      header + "'");

  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    rows.push_back(split_fields(line));
  }
  return rows;
}

Writer::Writer(const std::filesystem::path& path, const std::string& header)
    : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw IoError("cannot write file: " + path.string());
  out_ << header << '\n';
}

void Writer::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
}

void Writer::close() {
  out_.close();
  if (out_.fail()) throw IoError("write failed: " + path_.string());
}

}  // namespace domainrank::csv
