#include "echoscope/corpus.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "echoscope/csv.hpp"
#include "echoscope/errors.hpp"

namespace echoscope::corpus {
namespace {

using nlohmann::json;

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool starts_sentence(char c) { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9'); }

std::string_view short_url_prefix_at(std::string_view text, std::size_t pos) {
  for (std::string_view prefix : {std::string_view("https://t.co/"), std::string_view("http://t.co/")}) {
    if (text.substr(pos, prefix.size()) == prefix) return prefix;
  }
  return {};
}

std::string dump_line(const nlohmann::ordered_json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

// Fetches a required string field, recording an error when absent or mistyped.
bool required_string(const json& record, const char* field, std::size_t line, IngestReport& report,
                     std::string& out, bool allow_number = false) {
  const auto it = record.find(field);
  if (it == record.end() || it->is_null()) {
    report.errors.push_back({line, field, "missing field"});
    return false;
  }
  if (it->is_string()) {
    out = it->get<std::string>();
    return true;
  }
  if (allow_number && it->is_number_integer()) {
    out = it->dump();
    return true;
  }
  report.errors.push_back({line, field, "expected a string"});
  return false;
}

template <typename Fn>
void for_each_record(std::istream& in, IngestReport& report, Fn&& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++report.lines_read;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      report.errors.push_back({number, "", std::string("malformed record: ") + e.what()});
      continue;
    }
    if (!record.is_object()) {
      report.errors.push_back({number, "", "record is not an object"});
      continue;
    }
    fn(record, number);
  }
}

}  // namespace

std::vector<std::string> analysis_units(const Document& doc, bool include_title) {
  std::vector<std::string> units;
  units.reserve(doc.sentences.size() + 1);
  if (include_title) {
    std::string title = normalize_whitespace(doc.title);
    if (!title.empty()) units.push_back(std::move(title));
  }
  units.insert(units.end(), doc.sentences.begin(), doc.sentences.end());
  return units;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string strip_short_urls(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto prefix = short_url_prefix_at(text, i);
    if (!prefix.empty() && i + prefix.size() < text.size() && !is_space(text[i + prefix.size()])) {
      i += prefix.size();
      while (i < text.size() && !is_space(text[i])) ++i;
      out.push_back(' ');
      continue;
    }
    out.push_back(text[i++]);
  }
  return normalize_whitespace(out);
}

std::vector<std::string> sentencise(std::string_view text) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i + 2 < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') && text[i + 1] == ' ' && starts_sentence(text[i + 2])) {
      auto piece = normalize_whitespace(text.substr(start, i + 1 - start));
      if (!piece.empty()) sentences.push_back(std::move(piece));
      start = i + 2;
    }
  }
  auto tail = normalize_whitespace(text.substr(start));
  if (!tail.empty()) sentences.push_back(std::move(tail));
  return sentences;
}

void write_error_report(std::ostream& out, const IngestReport& report) {
  csv::write_row(out, {"line", "severity", "field", "reason"});
  auto emit = [&](const std::vector<RecordError>& items, const char* severity) {
    for (const auto& e : items) csv::write_row(out, {std::to_string(e.line), severity, e.field, e.reason});
  };
  emit(report.errors, "error");
  emit(report.warnings, "warning");
}

bool UtteranceStore::add(Utterance u) {
  if (by_id_.contains(u.id)) return false;
  const std::size_t index = utterances_.size();
  by_id_.emplace(u.id, index);
  days_[u.day()].push_back(index);
  utterances_.push_back(std::move(u));
  return true;
}

std::optional<std::size_t> UtteranceStore::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::span<const std::size_t> UtteranceStore::on_day(Date day) const {
  const auto it = days_.find(day);
  if (it == days_.end()) return {};
  return it->second;
}

std::optional<Date> UtteranceStore::coverage_begin() const {
  if (coverage_) return coverage_->first;
  if (days_.empty()) return std::nullopt;
  return days_.begin()->first;
}

std::optional<Date> UtteranceStore::coverage_end() const {
  if (coverage_) return coverage_->second;
  if (days_.empty()) return std::nullopt;
  return days_.rbegin()->first;
}

void UtteranceStore::set_coverage(Date begin, Date end) {
  if (end < begin) throw InvalidArgument("coverage end precedes its beginning");
  coverage_ = std::make_pair(begin, end);
}

bool UtteranceStore::covers(Date day) const {
  const auto begin = coverage_begin();
  const auto end = coverage_end();
  return begin && end && *begin <= day && day <= *end;
}

DocumentSet parse_press_releases(std::istream& in) {
  DocumentSet out;
  std::unordered_map<std::string, std::size_t> seen;
  for_each_record(in, out.report, [&](const json& record, std::size_t line) {
    Document doc;
    std::string date;
    bool ok = required_string(record, "id", line, out.report, doc.id, true);
    ok &= required_string(record, "org", line, out.report, doc.org);
    ok &= required_string(record, "url", line, out.report, doc.url);
    ok &= required_string(record, "date", line, out.report, date);
    ok &= required_string(record, "title", line, out.report, doc.title);
    ok &= required_string(record, "body", line, out.report, doc.body);
    if (!ok) return;
    if (doc.id.empty()) {
      out.report.errors.push_back({line, "id", "empty id"});
      return;
    }
    const auto day = parse_date(date);
    if (!day) {
      out.report.errors.push_back({line, "date", "expected YYYY-MM-DD, got '" + date + "'"});
      return;
    }
    if (const auto it = seen.find(doc.id); it != seen.end()) {
      out.report.errors.push_back(
          {line, "id", "duplicate id '" + doc.id + "' (first seen on line " + std::to_string(it->second) + ")"});
      return;
    }
    seen.emplace(doc.id, line);
    doc.release_date = *day;
    doc.title = normalize_whitespace(doc.title);
    doc.body = normalize_whitespace(doc.body);
    doc.sentences = sentencise(doc.body);
    if (doc.sentences.empty()) out.report.warnings.push_back({line, "body", "empty body"});
    out.documents.push_back(std::move(doc));
    ++out.report.accepted;
  });
  return out;
}

DocumentSet ingest_press_releases(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open press-release file " + path.string());
  auto out = parse_press_releases(in);
  if (in.bad()) throw DataError("read error on " + path.string());
  for (const auto& w : out.report.warnings) {
    spdlog::warn("{}:{}: {}", path.string(), w.line, w.reason);
  }
  return out;
}

UtteranceSet parse_utterances(std::istream& in) {
  UtteranceSet out;
  for_each_record(in, out.report, [&](const json& record, std::size_t line) {
    Utterance u;
    std::string text;
    std::string created;
    bool ok = required_string(record, "id", line, out.report, u.id, true);
    ok &= required_string(record, "text", line, out.report, text);
    ok &= required_string(record, "created_at", line, out.report, created);
    if (!ok) return;
    if (u.id.empty()) {
      out.report.errors.push_back({line, "id", "empty id"});
      return;
    }
    const auto ts = parse_timestamp(created);
    if (!ts) {
      out.report.errors.push_back({line, "created_at", "unparseable timestamp '" + created + "'"});
      return;
    }
    u.created_at = *ts;
    u.text = strip_short_urls(text);
    const std::string id = u.id;
    if (!out.store.add(std::move(u))) {
      out.report.errors.push_back({line, "id", "duplicate id '" + id + "'"});
      return;
    }
    ++out.report.accepted;
  });
  return out;
}

UtteranceSet ingest_utterances(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open utterance file " + path.string());
  auto out = parse_utterances(in);
  if (in.bad()) throw DataError("read error on " + path.string());
  return out;
}

std::string to_record(const Document& doc) {
  nlohmann::ordered_json j;
  j["id"] = doc.id;
  j["org"] = doc.org;
  j["url"] = doc.url;
  j["date"] = format_date(doc.release_date);
  j["title"] = doc.title;
  j["body"] = doc.body;
  return dump_line(j);
}

std::string to_record(const Utterance& u) {
  nlohmann::ordered_json j;
  j["id"] = u.id;
  j["text"] = u.text;
  j["created_at"] = format_timestamp(u.created_at);
  return dump_line(j);
}

void write_documents(std::ostream& out, std::span<const Document> docs) {
  for (const auto& d : docs) out << to_record(d) << '\n';
}

void write_utterances(std::ostream& out, const UtteranceStore& store) {
  for (const auto& u : store.all()) out << to_record(u) << '\n';
}

}  // namespace echoscope::corpus
