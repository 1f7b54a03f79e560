#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "echoscope/embedder.hpp"

namespace echoscope::embedder {

struct CacheKey {
  std::string provider;
  std::string model;
  std::string content_hash;  // SHA-256 of the exact text embedded

  static CacheKey for_text(const EmbeddingProvider& provider, std::string_view text);
  std::string str() const;
  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

// Vectors keyed by (provider, model, content hash), optionally backed by an
// append-only log. Concurrent lookups are allowed; inserts are serialised.
//
// Log layout: 8-byte magic "ESCACHE1", then records of
//   u32 key length | key bytes | u32 dimension | dimension x f32 | u32 crc32(preceding record bytes)
// with all integers and floats little-endian.
class EmbeddingCache {
 public:
  EmbeddingCache();  // in-memory only
  EmbeddingCache(const EmbeddingCache&) = delete;
  EmbeddingCache& operator=(const EmbeddingCache&) = delete;
  EmbeddingCache(EmbeddingCache&&) noexcept;
  EmbeddingCache& operator=(EmbeddingCache&&) noexcept;
  ~EmbeddingCache();

  // Loads an existing log or creates a new one. A corrupt log is discarded and
  // restarted empty; recovered() then reports true.
  static EmbeddingCache open(const std::filesystem::path& path);

  std::optional<EmbeddingVector> get(const CacheKey& key) const;
  bool contains(const CacheKey& key) const;
  void put(const CacheKey& key, const EmbeddingVector& vector);
  void flush();

  std::size_t size() const;
  bool recovered() const noexcept { return recovered_; }

 private:
  struct State;
  std::unique_ptr<State> state_;
  bool recovered_ = false;
};

struct CorpusEmbeddings {
  std::vector<EmbeddingVector> vectors;  // aligned with the input texts
  std::size_t hits = 0;
  std::size_t misses = 0;
};

// Looks every text up in the cache, embeds the misses in provider-sized batches,
// and stores them. Repeated texts within one call are embedded once.
CorpusEmbeddings embed_corpus(const EmbeddingProvider& provider, std::span<const std::string> texts,
                              EmbeddingCache& cache);

}  // namespace echoscope::embedder
