#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "echoscope/dates.hpp"

namespace echoscope::corpus {

// A reference communication, e.g. a press release.
struct Document {
  std::string id;
  std::string org;
  std::string url;
  Date release_date{};
  std::string title;
  std::string body;                    // whitespace-normalised
  std::vector<std::string> sentences;  // sentencise(body)

  friend bool operator==(const Document&, const Document&) = default;
};

// Texts a document is compared through: its title (when non-empty) followed by its sentences.
std::vector<std::string> analysis_units(const Document& doc, bool include_title = true);

// A short timestamped public text, e.g. a tweet.
struct Utterance {
  std::string id;
  std::string text;  // URL-stripped
  ZonedTimestamp created_at;

  Date day() const { return created_at.utc_day(); }
  friend bool operator==(const Utterance&, const Utterance&) = default;
};

std::string normalize_whitespace(std::string_view text);

// Removes every whitespace-delimited token starting with http://t.co/ or https://t.co/
// (followed by at least one character), then normalises whitespace.
std::string strip_short_urls(std::string_view text);

// Splits a whitespace-normalised text after '.', '!' or '?' when the next
// character is a space followed by an uppercase ASCII letter or a digit.
std::vector<std::string> sentencise(std::string_view text);

// One record rejected during ingestion.
struct RecordError {
  std::size_t line = 0;
  std::string field;
  std::string reason;
};

// Warnings are non-fatal observations (e.g. empty body) on accepted records.
struct IngestReport {
  std::size_t lines_read = 0;
  std::size_t accepted = 0;
  std::vector<RecordError> errors;
  std::vector<RecordError> warnings;
};

void write_error_report(std::ostream& out, const IngestReport& report);

// Utterances in ingestion order with per-UTC-day buckets.
class UtteranceStore {
 public:
  // Returns false (and leaves the store unchanged) when the id is already present.
  bool add(Utterance u);

  std::size_t size() const noexcept { return utterances_.size(); }
  bool empty() const noexcept { return utterances_.empty(); }
  const Utterance& operator[](std::size_t i) const { return utterances_[i]; }
  std::span<const Utterance> all() const noexcept { return utterances_; }
  std::optional<std::size_t> find(std::string_view id) const;

  // Indices of the utterances created on `day`, in ingestion order.
  std::span<const std::size_t> on_day(Date day) const;
  // T_i for `day`.
  std::size_t total_on(Date day) const { return on_day(day).size(); }
  const std::map<Date, std::vector<std::size_t>>& day_index() const noexcept { return days_; }

  // Days the collection is known to span. Defaults to [first, last] utterance day;
  // may be widened or narrowed explicitly when the collection period is known.
  std::optional<Date> coverage_begin() const;
  std::optional<Date> coverage_end() const;
  void set_coverage(Date begin, Date end);
  bool covers(Date day) const;

 private:
  std::vector<Utterance> utterances_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<Date, std::vector<std::size_t>> days_;
  std::optional<std::pair<Date, Date>> coverage_;
};

struct DocumentSet {
  std::vector<Document> documents;
  IngestReport report;
};

struct UtteranceSet {
  UtteranceStore store;
  IngestReport report;
};

// Line-delimited JSON ingestion. Throws DataError when the file cannot be opened;
// malformed records and duplicate ids are collected in the report.
DocumentSet ingest_press_releases(const std::filesystem::path& path);
DocumentSet parse_press_releases(std::istream& in);
UtteranceSet ingest_utterances(const std::filesystem::path& path);
UtteranceSet parse_utterances(std::istream& in);

// Canonical single-line records; re-ingesting them reproduces the same values.
std::string to_record(const Document& doc);
std::string to_record(const Utterance& u);
void write_documents(std::ostream& out, std::span<const Document> docs);
void write_utterances(std::ostream& out, const UtteranceStore& store);

}  // namespace echoscope::corpus
