#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "echoscope/embedder.hpp"

namespace echoscope::embedder {

// Client for the HTTP embedding service:
//   POST /embed  {"texts": [...]}  -> {"model": str, "dim": int, "embeddings": [[...], ...]}
//   GET  /health                   -> {"status": "ok", "model": str, "dim": int}
// Error responses may carry {"error": str, "index": int} naming the failing text.
struct RemoteOptions {
  std::string endpoint;        // e.g. http://127.0.0.1:8080
  std::string model_id;        // expected model; empty accepts whatever /health reports
  std::size_t dimension = 0;   // declared D; 0 means take it from /health
  std::size_t max_batch_size = 64;
  int max_attempts = 4;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::milliseconds timeout{30000};
};

struct HealthStatus {
  std::string status;
  std::string model;
  std::size_t dim = 0;
};

class RemoteEmbedder final : public EmbeddingProvider {
 public:
  // Resolves model id and dimension from /health when they are not declared.
  // Throws TransportError when the service cannot be reached within the retry budget.
  explicit RemoteEmbedder(RemoteOptions options);

  const std::string& provider_id() const override { return provider_id_; }
  const std::string& model_id() const override { return options_.model_id; }
  std::size_t dimension() const override { return options_.dimension; }
  std::size_t max_batch_size() const override { return options_.max_batch_size; }

  // Throws TransportError, ProtocolError (shape or dimension violations) or ServiceError.
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

  HealthStatus health() const;

 private:
  RemoteOptions options_;
  std::string provider_id_ = "remote";
};

// Splits `texts` into batches of at most max_batch_size.
std::vector<EmbeddingVector> remote_embed(const RemoteOptions& options,
                                          std::span<const std::string> texts);

}  // namespace echoscope::embedder
