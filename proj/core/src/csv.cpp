#include "echoscope/csv.hpp"

#include "echoscope/errors.hpp"

namespace echoscope::csv {

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << escape(row[i]);
  }
  out << "\r\n";
}

namespace {

// Reads a record and reports how many physical lines it consumed.
std::optional<Row> read_record(std::istream& in, std::size_t& lines) {
  lines = 0;
  if (in.peek() == std::char_traits<char>::eof()) return std::nullopt;
  Row row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  for (;;) {
    const int ch = in.get();
    if (ch == std::char_traits<char>::eof()) {
      if (quoted) throw DataError("csv: unterminated quoted field");
      ++lines;
      row.push_back(std::move(field));
      return row;
    }
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++lines;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\r' && in.peek() == '\n') {
      // CRLF terminator; the LF is consumed next iteration.
    } else if (c == '\n') {
      ++lines;
      row.push_back(std::move(field));
      return row;
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
}

}  // namespace

std::optional<Row> read_row(std::istream& in) {
  std::size_t lines = 0;
  return read_record(in, lines);
}

Reader::Reader(std::istream& in) : in_(in) {
  while (in_.peek() == '#') {
    std::string skipped;
    std::getline(in_, skipped);
    ++line_;
  }
  std::size_t lines = 0;
  auto header = read_record(in_, lines);
  line_ += lines;
  if (!header) throw DataError("csv: missing header row");
  header_ = std::move(*header);
}

std::size_t Reader::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  throw DataError("csv: missing column '" + std::string(name) + "'");
}

std::optional<Row> Reader::next() {
  for (;;) {
    std::size_t lines = 0;
    record_line_ = line_ + 1;
    auto row = read_record(in_, lines);
    line_ += lines;
    if (!row) return std::nullopt;
    if (row->size() == 1 && row->front().empty()) continue;  // blank line
    return row;
  }
}

}  // namespace echoscope::csv
