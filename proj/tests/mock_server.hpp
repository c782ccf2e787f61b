#pragma once

// In-process HTTP server for protocol tests. Register routes, then start().

#include <httplib.h>

#include <atomic>
#include <functional>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

namespace mock {

class Server {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  Server() = default;
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;
  ~Server() { stop(); }

  Server& post(const std::string& path, Handler h) {
    server_.Post(path, counted(std::move(h)));
    return *this;
  }
  Server& get(const std::string& path, Handler h) {
    server_.Get(path, counted(std::move(h)));
    return *this;
  }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  std::string url(const std::string& path = "/") const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }
  int hits() const { return hits_; }
  void reset() { hits_ = 0; }

 private:
  Handler counted(Handler h) {
    return [this, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      h(req, res);
    };
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
};

/// Chat-completion reply with the given assistant text.
inline void reply_chat(httplib::Response& res, const std::string& text) {
  nlohmann::json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}}};
  res.set_content(body.dump(), "application/json");
}

}  // namespace mock
