#include "echoscope/dates.hpp"

#include <charconv>
#include <cstdio>

namespace echoscope {
namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t width, int& out) {
  if (pos + width > text.size()) return false;
  for (std::size_t i = pos; i < pos + width; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + width, out);
  return ec == std::errc{};
}

std::optional<Date> make_date(int y, int m, int d) {
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, m) || !read_int(text, 8, 2, d)) {
    return std::nullopt;
  }
  return make_date(y, m, d);
}

std::string format_date(Date day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::optional<ZonedTimestamp> parse_timestamp(std::string_view text) {
  if (text.size() < 19) return std::nullopt;
  const auto date = parse_date(text.substr(0, 10));
  if (!date || (text[10] != 'T' && text[10] != 't' && text[10] != ' ')) return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!read_int(text, 11, 2, hh) || text[13] != ':' || !read_int(text, 14, 2, mm) ||
      text[16] != ':' || !read_int(text, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;

  std::size_t pos = 19;
  int millis = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      if (digits < 3) millis = millis * 10 + (text[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
    for (int i = digits; i < 3; ++i) millis *= 10;
  }

  int offset = 0;
  if (pos >= text.size()) return std::nullopt;  // an offset is required
  const char zone = text[pos];
  if (zone == 'Z' || zone == 'z') {
    ++pos;
  } else if (zone == '+' || zone == '-') {
    int oh = 0, om = 0;
    if (!read_int(text, pos + 1, 2, oh)) return std::nullopt;
    std::size_t next = pos + 3;
    if (next < text.size() && text[next] == ':') ++next;
    if (!read_int(text, next, 2, om)) return std::nullopt;
    if (oh > 23 || om > 59) return std::nullopt;
    offset = (oh * 60 + om) * (zone == '-' ? -1 : 1);
    pos = next + 2;
  } else {
    return std::nullopt;
  }
  if (pos != text.size()) return std::nullopt;

  using namespace std::chrono;
  const auto local = sys_days{*date} + hours{hh} + minutes{mm} + seconds{ss} + milliseconds{millis};
  return ZonedTimestamp{local - minutes{offset}, offset};
}

std::string format_timestamp(const ZonedTimestamp& ts) {
  using namespace std::chrono;
  const auto local = ts.utc + minutes{ts.offset_minutes};
  const auto day = floor<days>(local);
  const hh_mm_ss tod{local - day};
  char buf[64];
  int n = std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02d", format_date(day).c_str(),
                        static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                        static_cast<int>(tod.seconds().count()));
  const auto ms = tod.subseconds().count();
  if (ms != 0) n += std::snprintf(buf + n, sizeof buf - n, ".%03d", static_cast<int>(ms));
  if (ts.offset_minutes == 0) {
    std::snprintf(buf + n, sizeof buf - n, "Z");
  } else {
    const int abs_off = ts.offset_minutes < 0 ? -ts.offset_minutes : ts.offset_minutes;
    std::snprintf(buf + n, sizeof buf - n, "%c%02d:%02d", ts.offset_minutes < 0 ? '-' : '+',
                  abs_off / 60, abs_off % 60);
  }
  return buf;
}

}  // namespace echoscope
