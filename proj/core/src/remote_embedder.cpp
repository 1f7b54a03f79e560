#include "echoscope/remote_embedder.hpp"

#include <httplib.h>

#include <algorithm>
#include <iterator>
#include <nlohmann/json.hpp>
#include <optional>
#include <spdlog/spdlog.h>
#include <thread>

#include "echoscope/errors.hpp"

namespace echoscope::embedder {
namespace {

using nlohmann::json;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string base;    // path prefix without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw InvalidArgument("remote embedder: endpoint needs a scheme: " + url);
  const auto path = url.find('/', scheme + 3);
  Endpoint e;
  e.origin = url.substr(0, path);
  if (path != std::string::npos) {
    e.base = url.substr(path);
    while (!e.base.empty() && e.base.back() == '/') e.base.pop_back();
  }
  return e;
}

bool transient_status(int status) { return status == 429 || status == 502 || status == 503 || status == 504; }

// Performs one request with retry and exponential backoff on transient failures.
template <typename Send>
httplib::Result with_retries(const RemoteOptions& options, const char* what, Send&& send) {
  auto delay = options.initial_backoff;
  std::string last_error;
  const int attempts = std::max(1, options.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto result = send();
    if (result && !transient_status(result->status)) return result;
    last_error = result ? "HTTP " + std::to_string(result->status) : httplib::to_string(result.error());
    if (attempt < attempts) {
      spdlog::warn("{} {}: attempt {}/{} failed ({}); retrying in {} ms", what, options.endpoint, attempt,
                   attempts, last_error, delay.count());
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  throw TransportError(std::string(what) + " " + options.endpoint + " failed after " + std::to_string(attempts) +
                           " attempts: " + last_error,
                       attempts);
}

httplib::Client make_client(const RemoteOptions& options, const Endpoint& e) {
  httplib::Client client(e.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  return client;
}

json parse_body(const std::string& body, const char* what) {
  try {
    return json::parse(body);
  } catch (const json::parse_error&) {
    throw ProtocolError(std::string(what) + ": response is not valid JSON");
  }
}

[[noreturn]] void raise_service_error(const httplib::Response& res) {
  std::string message = "embedding service returned HTTP " + std::to_string(res.status);
  std::optional<std::size_t> index;
  try {
    const auto body = json::parse(res.body);
    if (body.is_object()) {
      if (body.contains("error") && body["error"].is_string()) message += ": " + body["error"].get<std::string>();
      if (body.contains("index") && body["index"].is_number_unsigned()) {
        index = body["index"].get<std::size_t>();
        message += " (text " + std::to_string(*index) + ")";
      }
    }
  } catch (const json::exception&) {
  }
  throw ServiceError(message, res.status, index);
}

}  // namespace

RemoteEmbedder::RemoteEmbedder(RemoteOptions options) : options_(std::move(options)) {
  if (options_.max_batch_size == 0) throw InvalidArgument("remote embedder: batch size must be positive");
  split_endpoint(options_.endpoint);
  if (options_.dimension == 0 || options_.model_id.empty()) {
    const auto h = health();
    if (h.status != "ok") throw ProtocolError("embedding service not ready: status '" + h.status + "'");
    if (options_.dimension != 0 && options_.dimension != h.dim) {
      throw ProtocolError("embedding service dimension " + std::to_string(h.dim) + " does not match declared " +
                          std::to_string(options_.dimension));
    }
    if (!options_.model_id.empty() && options_.model_id != h.model) {
      throw ProtocolError("embedding service model '" + h.model + "' does not match declared '" +
                          options_.model_id + "'");
    }
    options_.dimension = h.dim;
    options_.model_id = h.model;
  }
}

HealthStatus RemoteEmbedder::health() const {
  const auto e = split_endpoint(options_.endpoint);
  auto client = make_client(options_, e);
  auto res = with_retries(options_, "GET /health", [&] { return client.Get(e.base + "/health"); });
  if (res->status != 200) raise_service_error(*res);
  const auto body = parse_body(res->body, "GET /health");
  if (!body.is_object() || !body.contains("status") || !body["status"].is_string() || !body.contains("model") ||
      !body["model"].is_string() || !body.contains("dim") || !body["dim"].is_number_unsigned()) {
    throw ProtocolError("GET /health: expected {\"status\": str, \"model\": str, \"dim\": int}");
  }
  return {body["status"].get<std::string>(), body["model"].get<std::string>(), body["dim"].get<std::size_t>()};
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(std::span<const std::string> texts) const {
  if (texts.empty()) return {};
  if (texts.size() > options_.max_batch_size) {
    throw InvalidArgument("remote embedder: batch of " + std::to_string(texts.size()) + " exceeds maximum " +
                          std::to_string(options_.max_batch_size));
  }
  const auto e = split_endpoint(options_.endpoint);
  auto client = make_client(options_, e);
  const std::string payload =
      json{{"texts", std::vector<std::string>(texts.begin(), texts.end())}}.dump(-1, ' ', false,
                                                                                json::error_handler_t::replace);
  auto res = with_retries(options_, "POST /embed",
                          [&] { return client.Post(e.base + "/embed", payload, "application/json"); });
  if (res->status != 200) raise_service_error(*res);

  const auto body = parse_body(res->body, "POST /embed");
  if (!body.is_object() || !body.contains("dim") || !body["dim"].is_number_unsigned() ||
      !body.contains("embeddings") || !body["embeddings"].is_array()) {
    throw ProtocolError("POST /embed: expected {\"model\": str, \"dim\": int, \"embeddings\": [[...]]}");
  }
  const auto dim = body["dim"].get<std::size_t>();
  if (dim != options_.dimension) {
    throw ProtocolError("POST /embed: service dimension " + std::to_string(dim) + " does not match declared " +
                        std::to_string(options_.dimension));
  }
  if (body.contains("model") && body["model"].is_string() && body["model"].get<std::string>() != options_.model_id) {
    throw ProtocolError("POST /embed: service model '" + body["model"].get<std::string>() +
                        "' does not match declared '" + options_.model_id + "'");
  }
  const auto& rows = body["embeddings"];
  if (rows.size() != texts.size()) {
    throw ProtocolError("POST /embed: " + std::to_string(rows.size()) + " embeddings for " +
                        std::to_string(texts.size()) + " texts");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (!row.is_array() || row.size() != dim) {
      throw ProtocolError("POST /embed: embedding " + std::to_string(i) + " has length " +
                          std::to_string(row.is_array() ? row.size() : 0) + ", expected dim " + std::to_string(dim));
    }
    EmbeddingVector v(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      if (!row[d].is_number()) throw ProtocolError("POST /embed: non-numeric entry in embedding " + std::to_string(i));
      v[d] = row[d].get<float>();
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<EmbeddingVector> remote_embed(const RemoteOptions& options, std::span<const std::string> texts) {
  const RemoteEmbedder client(options);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += client.max_batch_size()) {
    auto part = client.embed_batch(texts.subspan(start, std::min(client.max_batch_size(), texts.size() - start)));
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

}  // namespace echoscope::embedder
