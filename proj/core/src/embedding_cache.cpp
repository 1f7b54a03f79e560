#include "echoscope/embedding_cache.hpp"

#include <bit>
#include <cstring>
#include <mutex>
#include <spdlog/spdlog.h>
#include <unordered_set>

#include "echoscope/errors.hpp"
#include "echoscope/hashing.hpp"

static_assert(std::endian::native == std::endian::little, "cache log assumes a little-endian host");

namespace echoscope::embedder {
namespace {

constexpr char kMagic[8] = {'E', 'S', 'C', 'A', 'C', 'H', 'E', '1'};
constexpr std::uint32_t kMaxKeyLength = 1 << 16;
constexpr std::uint32_t kMaxDimension = 1 << 20;

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::span<const std::byte> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::byte*>(s.data()), s.size()};
}

std::string encode_record(const std::string& key, const EmbeddingVector& v) {
  std::string rec;
  rec.reserve(12 + key.size() + 4 * v.size());
  put_u32(rec, static_cast<std::uint32_t>(key.size()));
  rec += key;
  put_u32(rec, static_cast<std::uint32_t>(v.size()));
  rec.append(reinterpret_cast<const char*>(v.data()), 4 * v.size());
  put_u32(rec, crc32(as_bytes(rec)));
  return rec;
}

bool read_exact(std::istream& in, std::string& buf, std::size_t n) {
  const std::size_t old = buf.size();
  buf.resize(old + n);
  in.read(buf.data() + old, static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

std::uint32_t get_u32(const std::string& buf, std::size_t pos) {
  std::uint32_t v;
  std::memcpy(&v, buf.data() + pos, 4);
  return v;
}

}  // namespace

struct EmbeddingCache::State {
  mutable std::shared_mutex mutex;
  std::unordered_map<std::string, EmbeddingVector> entries;
  std::filesystem::path path;
  std::ofstream log;
};

EmbeddingCache::EmbeddingCache() : state_(std::make_unique<State>()) {}
EmbeddingCache::EmbeddingCache(EmbeddingCache&&) noexcept = default;
EmbeddingCache& EmbeddingCache::operator=(EmbeddingCache&&) noexcept = default;
EmbeddingCache::~EmbeddingCache() = default;

CacheKey CacheKey::for_text(const EmbeddingProvider& provider, std::string_view text) {
  return {provider.provider_id(), provider.model_id(), sha256_hex(text)};
}

std::string CacheKey::str() const {
  // Length prefixes keep distinct (provider, model) pairs from aliasing.
  return std::to_string(provider.size()) + ":" + provider + "|" + std::to_string(model.size()) + ":" + model +
         "|" + content_hash;
}

EmbeddingCache EmbeddingCache::open(const std::filesystem::path& path) {
  EmbeddingCache cache;
  auto& st = *cache.state_;
  st.path = path;
  bool corrupt = false;
  std::string reason;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open embedding cache " + path.string());
    std::string magic;
    if (!read_exact(in, magic, sizeof kMagic) || std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0) {
      corrupt = std::filesystem::file_size(path) > 0;
      reason = "bad header";
    } else {
      while (in.peek() != std::char_traits<char>::eof()) {
        std::string rec;
        if (!read_exact(in, rec, 4)) {
          corrupt = true;
          reason = "truncated record";
          break;
        }
        const std::uint32_t key_len = get_u32(rec, 0);
        if (key_len > kMaxKeyLength || !read_exact(in, rec, key_len + 4)) {
          corrupt = true;
          reason = "truncated or oversized key";
          break;
        }
        const std::uint32_t dim = get_u32(rec, 4 + key_len);
        if (dim > kMaxDimension || !read_exact(in, rec, 4ull * dim + 4)) {
          corrupt = true;
          reason = "truncated vector";
          break;
        }
        const std::size_t body = rec.size() - 4;
        if (crc32(as_bytes(std::string_view(rec).substr(0, body))) != get_u32(rec, body)) {
          corrupt = true;
          reason = "checksum mismatch";
          break;
        }
        EmbeddingVector v(dim);
        std::memcpy(v.data(), rec.data() + 8 + key_len, 4ull * dim);
        st.entries.insert_or_assign(rec.substr(4, key_len), std::move(v));
      }
    }
  }
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  if (corrupt) {
    spdlog::warn("embedding cache {} is corrupt ({}); rebuilding from empty", path.string(), reason);
    st.entries.clear();
    cache.recovered_ = true;
  }
  if (corrupt || fresh) {
    std::ofstream reset(path, std::ios::binary | std::ios::trunc);
    if (!reset) throw DataError("cannot create embedding cache " + path.string());
    reset.write(kMagic, sizeof kMagic);
  }
  st.log.open(path, std::ios::binary | std::ios::app);
  if (!st.log) throw DataError("cannot append to embedding cache " + path.string());
  return cache;
}

std::optional<EmbeddingVector> EmbeddingCache::get(const CacheKey& key) const {
  std::shared_lock lock(state_->mutex);
  const auto it = state_->entries.find(key.str());
  if (it == state_->entries.end()) return std::nullopt;
  return it->second;
}

bool EmbeddingCache::contains(const CacheKey& key) const {
  std::shared_lock lock(state_->mutex);
  return state_->entries.contains(key.str());
}

void EmbeddingCache::put(const CacheKey& key, const EmbeddingVector& vector) {
  std::unique_lock lock(state_->mutex);
  auto k = key.str();
  if (state_->log.is_open()) {
    const auto rec = encode_record(k, vector);
    state_->log.write(rec.data(), static_cast<std::streamsize>(rec.size()));
    if (!state_->log) throw DataError("write failed on embedding cache " + state_->path.string());
  }
  state_->entries.insert_or_assign(std::move(k), vector);
}

void EmbeddingCache::flush() {
  std::unique_lock lock(state_->mutex);
  if (state_->log.is_open()) state_->log.flush();
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(state_->mutex);
  return state_->entries.size();
}

CorpusEmbeddings embed_corpus(const EmbeddingProvider& provider, std::span<const std::string> texts,
                              EmbeddingCache& cache) {
  CorpusEmbeddings out;
  out.vectors.resize(texts.size());
  std::vector<CacheKey> keys;
  keys.reserve(texts.size());
  std::vector<std::size_t> pending;                      // first position of each uncached text
  std::unordered_map<std::string, std::size_t> queued;   // key -> position in pending
  std::vector<std::pair<std::size_t, std::size_t>> repeats;  // (position, pending slot)
  for (std::size_t i = 0; i < texts.size(); ++i) {
    keys.push_back(CacheKey::for_text(provider, texts[i]));
    if (auto hit = cache.get(keys.back())) {
      out.vectors[i] = std::move(*hit);
      ++out.hits;
      continue;
    }
    auto k = keys.back().str();
    if (const auto it = queued.find(k); it != queued.end()) {
      repeats.emplace_back(i, it->second);
      ++out.hits;
      continue;
    }
    queued.emplace(std::move(k), pending.size());
    pending.push_back(i);
    ++out.misses;
  }

  const std::size_t batch = provider.max_batch_size();
  std::vector<std::string> chunk;
  for (std::size_t start = 0; start < pending.size(); start += batch) {
    const std::size_t end = std::min(pending.size(), start + batch);
    chunk.clear();
    for (std::size_t p = start; p < end; ++p) chunk.push_back(texts[pending[p]]);
    auto vectors = provider.embed_batch(chunk);
    if (vectors.size() != chunk.size()) throw ProtocolError("provider returned a short batch");
    for (std::size_t p = start; p < end; ++p) {
      const std::size_t pos = pending[p];
      auto& v = vectors[p - start];
      if (v.size() != provider.dimension()) {
        throw ProtocolError("provider returned dimension " + std::to_string(v.size()) + ", declared " +
                            std::to_string(provider.dimension()));
      }
      cache.put(keys[pos], v);
      out.vectors[pos] = std::move(v);
    }
  }
  for (const auto& [pos, slot] : repeats) out.vectors[pos] = out.vectors[pending[slot]];
  cache.flush();
  return out;
}

}  // namespace echoscope::embedder
