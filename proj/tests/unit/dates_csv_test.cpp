#include <gtest/gtest.h>

#include <sstream>

#include "echoscope/csv.hpp"
#include "echoscope/dates.hpp"
#include "echoscope/errors.hpp"
#include "echoscope/hashing.hpp"

using namespace echoscope;

TEST(Dates, ParseAndFormat) {
  const auto d = parse_date("2020-02-29");
  ASSERT_TRUE(d);
  EXPECT_EQ(format_date(*d), "2020-02-29");
  EXPECT_FALSE(parse_date("2021-02-29"));
  EXPECT_FALSE(parse_date("2021-2-01"));
  EXPECT_FALSE(parse_date("2021-02-01x"));
  EXPECT_FALSE(parse_date(""));
}

TEST(Timestamps, OffsetsAndUtcDay) {
  const auto a = parse_timestamp("2020-02-18T23:30:00-05:00");
  ASSERT_TRUE(a);
  EXPECT_EQ(a->offset_minutes, -300);
  EXPECT_EQ(format_date(a->utc_day()), "2020-02-19");
  EXPECT_EQ(format_timestamp(*a), "2020-02-18T23:30:00-05:00");

  const auto b = parse_timestamp("2020-02-18 00:00:00.5Z");
  ASSERT_TRUE(b);
  EXPECT_EQ(format_timestamp(*b), "2020-02-18T00:00:00.500Z");
  const auto c = parse_timestamp("2020-02-18T10:00:00+0530");
  ASSERT_TRUE(c);
  EXPECT_EQ(c->offset_minutes, 330);
  EXPECT_EQ(format_date(c->utc_day()), "2020-02-18");
}

TEST(Timestamps, RejectsMalformed) {
  for (const char* s : {"2020-02-18", "2020-02-18T25:00:00Z", "2020-02-18T10:00:00", "2020-02-18T10:00:00+25:00",
                        "garbage", "2020-02-30T00:00:00Z"}) {
    EXPECT_FALSE(parse_timestamp(s)) << s;
  }
}

TEST(Csv, EscapeAndRoundTrip) {
  EXPECT_EQ(csv::escape("plain"), "plain");
  EXPECT_EQ(csv::escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  const csv::Row row{"x", "multi\nline", "", "q\"uote", "c,d"};
  std::ostringstream out;
  csv::write_row(out, row);
  std::istringstream in(out.str());
  EXPECT_EQ(csv::read_row(in), row);
  EXPECT_FALSE(csv::read_row(in));
}

TEST(Csv, ReaderSkipsMetadataAndBlankLines) {
  std::istringstream in("# tool: x\n# generated_at: y\na,b\n1,2\n\n\"3\n3\",4\n");
  csv::Reader r(in);
  EXPECT_EQ(r.column("b"), 1u);
  EXPECT_THROW(r.column("c"), DataError);
  auto first = r.next();
  ASSERT_TRUE(first);
  EXPECT_EQ((*first)[0], "1");
  EXPECT_EQ(r.line(), 4u);
  auto second = r.next();
  ASSERT_TRUE(second);
  EXPECT_EQ((*second)[0], "3\n3");
  EXPECT_EQ(r.line(), 6u);
  EXPECT_FALSE(r.next());
}

TEST(Csv, UnterminatedQuoteThrows) {
  std::istringstream in("\"open,field\n");
  EXPECT_THROW(csv::read_row(in), DataError);
}

TEST(Hashing, KnownDigests) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Sha256 h;
  h.update("a");
  h.update("bc");
  EXPECT_EQ(h.hex_digest(), sha256_hex("abc"));
  const std::string s = "123456789";
  EXPECT_EQ(crc32(std::as_bytes(std::span(s.data(), s.size()))), 0xCBF43926u);
  static_assert(fnv1a64("") == 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}
