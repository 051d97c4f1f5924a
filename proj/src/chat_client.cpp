#include <cmath>
#include <cstdlib>
#include <regex>

#include <httplib.h>

#include "scaffold/feedback.hpp"

namespace scaffold {

namespace {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

std::optional<UrlParts> split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) return std::nullopt;
  return UrlParts{m[1].str(), m[2].matched ? m[2].str() : "/"};
}

}  // namespace

HttpChatClient::HttpChatClient(EvaluatorConfig cfg) : cfg_(std::move(cfg)) {
  endpoint_ = cfg_.endpoint_url;
  if (const char* override_url = std::getenv(EvaluatorConfig::kEndpointEnv);
      override_url && *override_url)
    endpoint_ = override_url;
  if (const char* key = std::getenv(EvaluatorConfig::kApiKeyEnv)) api_key_ = key;
}

nlohmann::json HttpChatClient::request_body(const std::string& model, double temperature,
                                            const std::vector<ChatMessage>& messages) {
  nlohmann::json body;
  body["model"] = model;
  body["temperature"] = temperature;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  return body;
}

std::optional<std::string> HttpChatClient::extract_content(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message")) return std::nullopt;
  const auto& msg = first["message"];
  if (!msg.is_object() || !msg.contains("content") || !msg["content"].is_string())
    return std::nullopt;
  return msg["content"].get<std::string>();
}

std::optional<std::string> HttpChatClient::attempt(const std::string& body) {
  ++attempts_;
  const auto parts = split_url(endpoint_);
  if (!parts) return std::nullopt;
  try {
    httplib::Client client(parts->origin);
    const auto secs = static_cast<time_t>(cfg_.timeout);
    const auto usecs = static_cast<time_t>((cfg_.timeout - std::floor(cfg_.timeout)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const auto res = client.Post(parts->path, headers, body, "application/json");
    if (!res || res->status < 200 || res->status >= 300) return std::nullopt;
    return extract_content(res->body);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<std::string> HttpChatClient::complete(const std::vector<ChatMessage>& messages) {
  const std::string body = request_body(cfg_.model_name, cfg_.temperature, messages).dump();
  for (int i = 0; i <= cfg_.retry_count; ++i) {
    if (auto content = attempt(body)) return content;
  }
  return std::nullopt;
}

}  // namespace scaffold
