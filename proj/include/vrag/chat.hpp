#pragma once

// Chat-completion style clients. The policy, the judge and both expert models
// speak the same protocol:
//   POST {model, messages: [{role, content: [{type: text|image_url, ...}]}],
//         temperature, top_p, max_tokens, seed}
//   -> {choices: [{message: {content}}]}

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vrag/errors.hpp"
#include "vrag/http.hpp"
#include "vrag/trajectory.hpp"

namespace vrag {

struct ChatImage {
  std::string content_hash;
  std::filesystem::path file;  // PNG/JPEG on disk, empty when geometry-only
};

struct ChatMessage {
  Role role = Role::User;
  std::string text;
  std::vector<ChatImage> images;
};

struct DecodingParams {
  double temperature = 1.0;
  double top_p = 1.0;
  int max_tokens = 2048;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages, const DecodingParams& params) = 0;
  virtual std::string identity() const = 0;
};

struct RemoteChatOptions {
  std::string model = "default";
  http::Options http;
  /// Code raised when the endpoint cannot be reached after retries.
  ErrorCode unreachable = ErrorCode::PolicyUnreachable;
};

class RemoteChatClient final : public ChatClient {
 public:
  RemoteChatClient(const std::string& url, RemoteChatOptions options);
  std::string complete(const std::vector<ChatMessage>& messages, const DecodingParams& params) override;
  std::string identity() const override { return "remote:" + endpoint_.url() + "#" + options_.model; }

  static nlohmann::json request_body(const std::string& model, const std::vector<ChatMessage>& messages,
                                     const DecodingParams& params);
  static std::string response_text(const nlohmann::json& body);

 private:
  http::Endpoint endpoint_;
  RemoteChatOptions options_;
};

std::string base64_encode(std::string_view bytes);

}  // namespace vrag
