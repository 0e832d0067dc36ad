#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace tvar {

/// Minimal RFC 4180 reader: quoted fields, doubled quotes, CRLF, and newlines
/// inside quotes. A leading UTF-8 byte-order mark is skipped.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in);

  /// Reads the next record into `fields`. Returns false at end of input.
  bool next(std::vector<std::string>& fields);

  /// 1-based physical line on which the last returned record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t current_line_ = 1;
  std::size_t record_line_ = 0;
};

/// Quotes a field when it contains a delimiter, quote, or newline.
std::string csv_escape(const std::string& field);

}  // namespace tvar
