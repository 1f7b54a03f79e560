#include "echoscope/embedder.hpp"

#include <cmath>
#include <cstdio>
#include <spdlog/spdlog.h>

#include "echoscope/errors.hpp"
#include "echoscope/hashing.hpp"

namespace echoscope::embedder {
namespace {

constexpr std::uint64_t kBigramBasis = fnv1a64("echoscope/bigram");

void accumulate(std::vector<double>& acc, std::uint64_t h, double weight) {
  const std::size_t bucket = static_cast<std::size_t>(h % acc.size());
  acc[bucket] += (h >> 63) ? -weight : weight;
}

}  // namespace

EmbeddingVector EmbeddingProvider::embed(const std::string& text) const {
  auto out = embed_batch(std::span<const std::string>(&text, 1));
  return std::move(out.at(0));
}

ReferenceEmbedder::ReferenceEmbedder(ReferenceEmbedderOptions options, const textsim::StopWords& stopwords)
    : options_(options), stopwords_(&stopwords) {
  if (options_.dimension == 0) throw InvalidArgument("reference embedder: dimension must be positive");
  if (options_.max_batch_size == 0) throw InvalidArgument("reference embedder: batch size must be positive");
  char buf[96];
  std::snprintf(buf, sizeof buf, "signed-hash-v1/d%zu/t%zu/b%g", options_.dimension, options_.max_tokens,
                options_.bigram_weight);
  model_id_ = buf;
}

EmbeddingVector ReferenceEmbedder::embed_tokens(const textsim::TokenList& tokens) const {
  std::vector<double> acc(options_.dimension, 0.0);
  for (const auto& stem : tokens) {
    accumulate(acc, fnv1a64(stem), 1.0);
    if (options_.bigram_weight > 0.0) {
      const std::string padded = "^" + stem + "$";
      const std::size_t n = padded.size() - 1;
      const double w = options_.bigram_weight / std::sqrt(static_cast<double>(n));
      for (std::size_t i = 0; i < n; ++i) {
        accumulate(acc, fnv1a64(std::string_view(padded).substr(i, 2), kBigramBasis), w);
      }
    }
  }
  double norm2 = 0.0;
  for (double x : acc) norm2 += x * x;
  EmbeddingVector out(options_.dimension, 0.0f);
  if (norm2 == 0.0) return out;
  const double norm = std::sqrt(norm2);
  for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / norm);
  return out;
}

std::vector<EmbeddingVector> ReferenceEmbedder::embed_batch(std::span<const std::string> texts) const {
  if (texts.size() > options_.max_batch_size) {
    throw InvalidArgument("reference embedder: batch of " + std::to_string(texts.size()) +
                          " exceeds maximum " + std::to_string(options_.max_batch_size));
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    auto tokens = textsim::tokenize_and_stem(text, *stopwords_);
    if (options_.max_tokens > 0 && tokens.size() > options_.max_tokens) {
      spdlog::warn("reference embedder: truncating text of {} tokens to {}", tokens.size(), options_.max_tokens);
      tokens.resize(options_.max_tokens);
    }
    out.push_back(embed_tokens(tokens));
  }
  return out;
}

EmbeddingVector reference_embed(std::string_view text) {
  static const ReferenceEmbedder embedder;
  return embedder.embed(std::string(text));
}

EmbeddingVector mean_embedding(std::span<const EmbeddingVector> vectors) {
  if (vectors.empty()) throw InvalidArgument("mean_embedding: no vectors");
  const std::size_t dim = vectors.front().size();
  std::vector<double> acc(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dim) throw InvalidArgument("mean_embedding: inconsistent dimensions");
    for (std::size_t i = 0; i < dim; ++i) acc[i] += v[i];
  }
  const double n = static_cast<double>(vectors.size());
  EmbeddingVector out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] / n);
  return out;
}

EmbeddingVector document_embedding(const EmbeddingProvider& provider, std::span<const std::string> sentences) {
  if (sentences.empty()) throw InvalidArgument("document_embedding: document has no sentences");
  std::vector<EmbeddingVector> vectors;
  vectors.reserve(sentences.size());
  const std::size_t batch = provider.max_batch_size();
  for (std::size_t i = 0; i < sentences.size(); i += batch) {
    auto part = provider.embed_batch(sentences.subspan(i, std::min(batch, sentences.size() - i)));
    for (auto& v : part) vectors.push_back(std::move(v));
  }
  return mean_embedding(vectors);
}

}  // namespace echoscope::embedder
