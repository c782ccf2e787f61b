#include "vrag/chat.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iterator>

namespace vrag {

nlohmann::json DecodingParams::to_json() const {
  return {{"temperature", temperature}, {"top_p", top_p}, {"max_tokens", max_tokens}, {"seed", seed}};
}

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          reinterpret_cast<const unsigned char*>(bytes.data()), int(bytes.size()));
  out.resize(std::size_t(n));
  return out;
}

namespace {

std::string data_url(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read image " + file.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const bool jpeg = bytes.size() > 2 && static_cast<unsigned char>(bytes[0]) == 0xFF;
  return std::string("data:image/") + (jpeg ? "jpeg" : "png") + ";base64," + base64_encode(bytes);
}

}  // namespace

RemoteChatClient::RemoteChatClient(const std::string& url, RemoteChatOptions options)
    : endpoint_(http::Endpoint::parse(url)), options_(std::move(options)) {}

nlohmann::json RemoteChatClient::request_body(const std::string& model,
                                              const std::vector<ChatMessage>& messages,
                                              const DecodingParams& params) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) {
    nlohmann::json content = nlohmann::json::array();
    for (const auto& img : m.images) {
      if (img.file.empty()) {
        content.push_back({{"type", "text"}, {"text", "[image " + img.content_hash + "]"}});
      } else {
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", data_url(img.file)}}}});
      }
    }
    if (!m.text.empty()) content.push_back({{"type", "text"}, {"text", m.text}});
    msgs.push_back({{"role", to_string(m.role)}, {"content", std::move(content)}});
  }
  nlohmann::json body = params.to_json();
  body["model"] = model;
  body["messages"] = std::move(msgs);
  return body;
}

std::string RemoteChatClient::response_text(const nlohmann::json& body) {
  if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array() ||
      body["choices"].empty()) {
    throw Error(ErrorCode::MalformedResponse, "chat response lacks choices");
  }
  const auto& msg = body["choices"][0].value("message", nlohmann::json::object());
  const auto content = msg.value("content", nlohmann::json());
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    std::string text;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  }
  throw Error(ErrorCode::MalformedResponse, "chat response has no text content");
}

std::string RemoteChatClient::complete(const std::vector<ChatMessage>& messages, const DecodingParams& params) {
  try {
    return response_text(http::post_json(endpoint_, request_body(options_.model, messages, params), options_.http));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Timeout) throw Error(options_.unreachable, e.what());
    throw;
  }
}

}  // namespace vrag
