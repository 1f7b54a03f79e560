#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <string>
#include <vector>

#include "echoscope/calibrate.hpp"
#include "echoscope/corpus.hpp"
#include "echoscope/dates.hpp"
#include "echoscope/embedder.hpp"
#include "echoscope/textsim.hpp"

// Corpus files for driving the command-line pipeline end to end. Document
// vocabulary uses letters a-m and background chatter letters n-z, so background
// utterances never come close to a document under the reference embedder.
namespace echoscope::testing {

struct FixtureFiles {
  std::filesystem::path releases;
  std::filesystem::path utterances;
  std::size_t documents = 0;
  std::size_t utterance_count = 0;
};

class FixtureWriter {
 public:
  explicit FixtureWriter(std::uint64_t seed) : rng_(seed) {}

  std::string word(char first, int letters) {
    std::string w;
    const int n = 5 + static_cast<int>(rng_() % 4);
    for (int i = 0; i < n; ++i) w += static_cast<char>(first + static_cast<int>(rng_() % static_cast<unsigned>(letters)));
    return w;
  }
  std::string topic_word() { return word('a', 13); }
  std::string chatter_word() { return word('n', 13); }

  std::string chatter(std::size_t words = 6) {
    std::string s;
    for (std::size_t i = 0; i < words; ++i) s += (i ? " " : "") + chatter_word();
    return s;
  }

  void release(std::string id, std::string org, Date date, std::string title, std::string body) {
    releases_.push_back({{"id", std::move(id)},   {"org", std::move(org)},     {"url", "https://example.org/pr"},
                         {"date", format_date(date)}, {"title", std::move(title)}, {"body", std::move(body)}});
  }

  void utterance(Date on, std::string text) {
    const auto n = utterances_.size();
    const auto ts = std::chrono::sys_seconds(on) + std::chrono::seconds(static_cast<long>((n * 37) % 86400));
    utterances_.push_back({{"id", std::to_string(n)},
                           {"text", std::move(text)},
                           {"created_at", format_timestamp({std::chrono::time_point_cast<std::chrono::milliseconds>(ts), 0})}});
  }

  void raw_utterance_line(std::string line) { raw_.push_back(std::move(line)); }

  FixtureFiles write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    FixtureFiles f{dir / "releases.jsonl", dir / "utterances.jsonl", releases_.size(), utterances_.size()};
    std::ofstream r(f.releases, std::ios::binary);
    for (const auto& j : releases_) r << j.dump() << '\n';
    std::ofstream u(f.utterances, std::ios::binary);
    for (const auto& j : utterances_) u << j.dump() << '\n';
    for (const auto& line : raw_) u << line << '\n';
    return f;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::vector<nlohmann::json> releases_;
  std::vector<nlohmann::json> utterances_;
  std::vector<std::string> raw_;
};

// Documents released on consecutive days with `per_day` background utterances
// on every day from first_release-7 to last_release+7. The first `injected`
// documents receive `k` reorderings of their body on each of their three post
// days, replacing background so the daily volume stays `per_day`.
inline FixtureWriter echo_fixture(std::size_t documents, std::size_t injected, std::size_t k, std::size_t per_day,
                                  std::uint64_t seed = 1) {
  FixtureWriter w(seed);
  const Date first = *parse_date("2021-03-10");
  std::vector<std::vector<std::string>> bodies;
  std::map<Date, std::vector<std::string>> echoes;
  for (std::size_t d = 0; d < documents; ++d) {
    std::vector<std::string> words;
    for (int i = 0; i < 8; ++i) words.push_back(w.topic_word());
    std::string body;
    for (const auto& x : words) body += (body.empty() ? "" : " ") + x;
    const Date release = first + std::chrono::days{static_cast<int>(d * 9)};
    w.release("doc" + std::to_string(d), d % 2 ? "beta" : "alpha", release, "", body + ".");
    if (d < injected) {
      for (int off = 0; off < 3; ++off) {
        for (std::size_t i = 0; i < k; ++i) {
          auto shuffled = words;
          std::shuffle(shuffled.begin(), shuffled.end(), w.rng());
          std::string text;
          for (const auto& x : shuffled) text += (text.empty() ? "" : " ") + x;
          echoes[release + std::chrono::days{off}].push_back(text);
        }
      }
    }
  }
  const Date last = first + std::chrono::days{static_cast<int>((documents - 1) * 9)};
  for (Date day = first - std::chrono::days{7}; day <= last + std::chrono::days{7}; day += std::chrono::days{1}) {
    const auto& extra = echoes[day];
    for (const auto& t : extra) w.utterance(day, t);
    for (std::size_t i = extra.size(); i < per_day; ++i) w.utterance(day, w.chatter());
  }
  return w;
}

// A corpus in which every document has at least `per_bin` distinct release-day
// utterances in each calibration bin, so calibrate can export per_org x per_bin
// pairs for every organisation.
inline FixtureWriter calibration_fixture(std::size_t orgs, std::size_t docs_per_org, std::size_t per_bin,
                                         std::uint64_t seed = 2) {
  FixtureWriter w(seed);
  const embedder::ReferenceEmbedder embedder;
  const auto edges = calibrate::default_bin_edges();
  const Date first = *parse_date("2021-05-03");
  std::size_t index = 0;
  for (std::size_t o = 0; o < orgs; ++o) {
    for (std::size_t d = 0; d < docs_per_org; ++d, ++index) {
      std::vector<std::string> words;
      for (int i = 0; i < 10; ++i) words.push_back(w.topic_word());
      std::string title = words[0] + " " + words[1];
      std::string body;
      for (std::size_t i = 0; i < words.size(); ++i) body += (i ? " " : "") + words[i] + (i == 4 ? "." : "");
      body += ".";
      const Date release = first + std::chrono::days{static_cast<int>(index * 20)};
      corpus::Document doc;
      doc.title = title;
      doc.sentences = corpus::sentencise(body);
      const auto units = corpus::analysis_units(doc);
      const auto doc_vec = embedder::document_embedding(embedder, units);

      std::vector<std::size_t> filled(edges.size() - 1, 0);
      std::set<std::string> seen;
      for (int attempt = 0; attempt < 200000; ++attempt) {
        if (std::all_of(filled.begin(), filled.end(), [&](std::size_t n) { return n >= per_bin + 1; })) break;
        auto pick = words;
        std::shuffle(pick.begin(), pick.end(), w.rng());
        pick.resize(1 + w.rng()() % pick.size());
        for (auto extra = w.rng()() % 8; extra > 0; --extra) pick.push_back(w.chatter_word());
        std::shuffle(pick.begin(), pick.end(), w.rng());
        std::string text;
        for (const auto& x : pick) text += (text.empty() ? "" : " ") + x;
        if (!seen.insert(text).second) continue;
        const auto v = embedder.embed(text);
        const double score = textsim::cosine(std::span<const float>(doc_vec), std::span<const float>(v));
        for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
          const bool last = b + 2 == edges.size();
          if (score >= edges[b] && (score < edges[b + 1] || (last && score == edges[b + 1])) && filled[b] <= per_bin) {
            ++filled[b];
            w.utterance(release, text);
          }
        }
      }
      w.release("r" + std::to_string(index), "org" + std::to_string(o), release, title, body);
      for (int off = -7; off <= 7; ++off) {
        for (int i = 0; i < 3; ++i) w.utterance(release + std::chrono::days{off}, w.chatter());
      }
    }
  }
  return w;
}

}  // namespace echoscope::testing
