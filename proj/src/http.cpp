#include "vrag/http.hpp"

#include <httplib.h>

#include <algorithm>
#include <thread>

#include "vrag/errors.hpp"

namespace vrag::http {

Endpoint Endpoint::parse(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::Config, "endpoint URL lacks scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

namespace {

template <typename Call>
httplib::Result with_retries(const Endpoint& ep, const Options& options, Call&& call) {
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt < std::max(1, options.attempts); ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options.backoff * attempt);
    httplib::Client client(ep.base);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    if (!options.api_key.empty()) client.set_bearer_token_auth(options.api_key);
    auto res = call(client);
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400) {
      throw Error(ErrorCode::MalformedResponse, ep.url() + " answered HTTP " + std::to_string(res->status));
    }
    return res;
  }
  throw Error(ErrorCode::Timeout, ep.url() + " failed after " + std::to_string(options.attempts) +
                                      " attempts: " + last_error);
}

}  // namespace

nlohmann::json post_json(const Endpoint& endpoint, const nlohmann::json& body, const Options& options) {
  const auto payload = body.dump();
  auto res = with_retries(endpoint, options, [&](httplib::Client& c) {
    return c.Post(endpoint.path, payload, "application/json");
  });
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) {
    throw Error(ErrorCode::MalformedResponse, endpoint.url() + " returned a non-JSON body");
  }
  return parsed;
}

std::string get_bytes(const std::string& url, const Options& options) {
  auto ep = Endpoint::parse(url);
  auto res = with_retries(ep, options, [&](httplib::Client& c) { return c.Get(ep.path); });
  return res->body;
}

}  // namespace vrag::http
