#pragma once

#include <httplib.h>

#include <atomic>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <thread>

#include "echoscope/remote_embedder.hpp"

namespace echoscope::testing {

// In-process stand-in for the embedding service.
class FakeService {
 public:
  std::string model = "fake-model";
  std::size_t dim = 4;
  std::size_t served_dim = 4;   // dimension of returned vectors
  int fail_first = 0;           // leading /embed requests answered with 503
  int error_status = 0;         // when set, /embed always answers this status
  std::optional<int> error_index;
  bool drop_one = false;        // return one embedding fewer than requested
  bool ready = true;
  std::atomic<int> embed_requests{0};

  FakeService() {
    server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      if (!ready) {
        res.status = 503;
        return;
      }
      res.set_content(nlohmann::json{{"status", "ok"}, {"model", model}, {"dim", dim}}.dump(), "application/json");
    });
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++embed_requests;
      if (n <= fail_first) {
        res.status = 503;
        return;
      }
      if (error_status) {
        res.status = error_status;
        nlohmann::json body{{"error", "text rejected"}};
        if (error_index) body["index"] = *error_index;
        res.set_content(body.dump(), "application/json");
        return;
      }
      const auto texts = nlohmann::json::parse(req.body).at("texts");
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t i = 0; i < texts.size() - (drop_one ? 1 : 0); ++i) {
        nlohmann::json row = nlohmann::json::array();
        const auto len = static_cast<float>(texts[i].get<std::string>().size());
        for (std::size_t d = 0; d < served_dim; ++d) row.push_back(len + static_cast<float>(d) * 0.25f);
        rows.push_back(row);
      }
      res.set_content(nlohmann::json{{"model", model}, {"dim", served_dim}, {"embeddings", rows}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeService() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

  embedder::RemoteOptions options() const {
    embedder::RemoteOptions o;
    o.endpoint = endpoint();
    o.initial_backoff = std::chrono::milliseconds(1);
    o.max_attempts = 3;
    o.timeout = std::chrono::seconds(5);
    return o;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

inline int unused_port() {
  httplib::Server probe;
  const int port = probe.bind_to_any_port("127.0.0.1");
  probe.stop();
  return port;
}

}  // namespace echoscope::testing
