#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "echoscope/corpus.hpp"
#include "echoscope/dates.hpp"
#include "echoscope/echo.hpp"

namespace echoscope::testing {

inline Date day(const char* ymd) { return *parse_date(ymd); }

inline corpus::Document document(std::string id, Date release, std::string org = "org") {
  corpus::Document d;
  d.id = std::move(id);
  d.org = std::move(org);
  d.url = "https://example.org/" + d.id;
  d.release_date = release;
  d.title = "Title " + d.id;
  d.body = "Body of " + d.id + ".";
  d.sentences = {d.body};
  return d;
}

// Utterances with hand-chosen vectors, for driving echo without an embedder.
struct SyntheticCorpus {
  corpus::UtteranceStore store;
  std::vector<embedder::EmbeddingVector> vectors;

  void add(Date on, embedder::EmbeddingVector v) {
    corpus::Utterance u;
    u.id = "u" + std::to_string(store.size());
    const auto seconds = std::chrono::seconds(static_cast<long>(store.size() % 86400));
    u.created_at.utc = std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::sys_seconds(on) + seconds);
    u.text = "synthetic " + u.id;
    store.add(std::move(u));
    vectors.push_back(std::move(v));
  }

  void add_many(Date on, std::size_t n, const embedder::EmbeddingVector& v) {
    for (std::size_t i = 0; i < n; ++i) add(on, v);
  }

  echo::UtteranceEmbeddings embeddings() const { return {store, vectors}; }
};

// Document direction and two utterance directions on either side of any threshold in (0, 1).
inline const embedder::EmbeddingVector kDocAxis{1.0f, 0.0f};
inline const embedder::EmbeddingVector kSimilar{1.0f, 0.0f};
inline const embedder::EmbeddingVector kDissimilar{0.0f, 1.0f};

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& name) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("echoscope-" + name + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace echoscope::testing
