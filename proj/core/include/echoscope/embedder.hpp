#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "echoscope/textsim.hpp"

namespace echoscope::embedder {

using EmbeddingVector = std::vector<float>;

inline constexpr std::size_t kDefaultDimension = 384;

// A deterministic text-to-vector mapping. Implementations must be safe to call
// concurrently and must return identical vectors for identical text.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual const std::string& provider_id() const = 0;
  virtual const std::string& model_id() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::size_t max_batch_size() const = 0;

  // One vector per text, in input order. Batches above max_batch_size() are rejected.
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const = 0;

  EmbeddingVector embed(const std::string& text) const;
};

struct ReferenceEmbedderOptions {
  std::size_t dimension = kDefaultDimension;
  // Token limit per text; longer inputs are truncated with a warning.
  std::size_t max_tokens = 256;
  std::size_t max_batch_size = 1024;
  // L2 mass given to a stem's character bigrams relative to the stem itself.
  double bigram_weight = 0.25;
};

// Signed feature hashing over Porter stems and their character bigrams.
// Non-empty token lists map to unit vectors; texts with no tokens map to zeros.
class ReferenceEmbedder final : public EmbeddingProvider {
 public:
  explicit ReferenceEmbedder(ReferenceEmbedderOptions options = {},
                             const textsim::StopWords& stopwords = textsim::StopWords::english());

  const std::string& provider_id() const override { return provider_id_; }
  const std::string& model_id() const override { return model_id_; }
  std::size_t dimension() const override { return options_.dimension; }
  std::size_t max_batch_size() const override { return options_.max_batch_size; }
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

  EmbeddingVector embed_tokens(const textsim::TokenList& tokens) const;

 private:
  ReferenceEmbedderOptions options_;
  const textsim::StopWords* stopwords_;
  std::string provider_id_ = "reference";
  std::string model_id_;
};

// ReferenceEmbedder with default options.
EmbeddingVector reference_embed(std::string_view text);

// Arithmetic mean of equally sized vectors, not re-normalised.
EmbeddingVector mean_embedding(std::span<const EmbeddingVector> vectors);

// Mean of the per-sentence embeddings. Throws InvalidArgument for zero sentences.
EmbeddingVector document_embedding(const EmbeddingProvider& provider,
                                   std::span<const std::string> sentences);

}  // namespace echoscope::embedder
