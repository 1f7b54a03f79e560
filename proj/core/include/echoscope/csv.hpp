#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace echoscope::csv {

using Row = std::vector<std::string>;

// RFC 4180 field quoting: fields containing a comma, quote, CR or LF are quoted
// and embedded quotes doubled. Rows end in CRLF.
std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& row);

// Reads one record, honouring quoted fields that span lines. Returns nullopt at EOF.
// Throws DataError on an unterminated quoted field.
std::optional<Row> read_row(std::istream& in);

// Reader that skips leading '#' metadata lines and maps header names to columns.
class Reader {
 public:
  explicit Reader(std::istream& in);

  const Row& header() const noexcept { return header_; }
  // Column index of `name`; throws DataError when absent.
  std::size_t column(std::string_view name) const;
  std::optional<Row> next();
  // 1-based physical line number where the last returned record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  Row header_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

}  // namespace echoscope::csv
