#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace icubench {

/// Streaming reader for comma-separated files with RFC 4180 quoting
/// (quoted fields may contain commas, doubled quotes and newlines).
/// Memory use is bounded by the longest record.
class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path);

  /// Header row, read at construction.
  const std::vector<std::string>& header() const { return header_; }
  /// Column position by name, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;

  /// Reads the next record into `fields`; false at end of file.
  bool next(std::vector<std::string>& fields);

  /// 1-based physical line number where the last record started.
  std::size_t line() const { return record_line_; }

 private:
  bool read_record(std::vector<std::string>& fields);

  std::filesystem::path path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  std::string buffer_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void row(const std::vector<std::string>& fields);
  template <typename... Fields>
  void write(const Fields&... fields) {
    std::vector<std::string> v{to_field(fields)...};
    row(v);
  }

 private:
  static std::string to_field(const std::string& s) { return s; }
  static std::string to_field(std::string_view s) { return std::string(s); }
  static std::string to_field(const char* s) { return s; }
  template <typename T>
  static std::string to_field(const T& v) {
    return std::to_string(v);
  }

  std::ofstream out_;
};

/// Quotes a field if it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

}  // namespace icubench
