#pragma once

// Thin JSON-over-HTTP helpers shared by the remote search, policy and judge clients.

#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

namespace vrag::http {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // request path, "/" when absent

  static Endpoint parse(const std::string& url);
  std::string url() const { return base + path; }
};

struct Options {
  std::chrono::milliseconds timeout{30000};
  int attempts = 3;
  std::chrono::milliseconds backoff{50};
  std::string api_key;
};

/// POSTs JSON and returns the parsed JSON body. Connection failures and 5xx
/// are retried `attempts` times, then raised as ErrorCode::Timeout; a body
/// that is not JSON, or any 4xx, raises ErrorCode::MalformedResponse.
nlohmann::json post_json(const Endpoint& endpoint, const nlohmann::json& body, const Options& options);

/// GETs raw bytes with the same retry policy.
std::string get_bytes(const std::string& url, const Options& options);

}  // namespace vrag::http
