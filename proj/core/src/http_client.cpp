#include "seedforge/http_client.hpp"

#include <cstdlib>

#include "httplib.h"
#include "json.hpp"

namespace seedforge {

namespace {

std::string api_key(const ProviderProfile& profile) {
  const char* key = std::getenv(profile.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError("API key environment variable '" + profile.api_key_env + "' is not set");
  }
  return key;
}

}  // namespace

OpenAiChatClient::OpenAiChatClient(std::chrono::seconds per_call_timeout)
    : timeout_(per_call_timeout) {}

bool OpenAiChatClient::key_available(const ProviderProfile& profile) {
  const char* key = std::getenv(profile.api_key_env.c_str());
  return key != nullptr && *key != '\0';
}

ChatReply OpenAiChatClient::send(const std::vector<ChatMessage>& history,
                                 const ProviderProfile& profile) {
  nlohmann::json body;
  body["model"] = profile.model;
  if (profile.temperature) body["temperature"] = *profile.temperature;
  auto& messages = body["messages"] = nlohmann::json::array();
  for (const auto& message : history) {
    messages.push_back({{"role", to_string(message.role)}, {"content", message.content}});
  }

  httplib::Client client(profile.base_url);
  client.set_connection_timeout(timeout_.count(), 0);
  client.set_read_timeout(timeout_.count(), 0);
  client.set_bearer_token_auth(api_key(profile));

  auto result = client.Post("/v1/chat/completions", body.dump(), "application/json");
  if (!result) {
    throw TransportError("chat completion request failed: " + httplib::to_string(result.error()));
  }
  if (result->status == 429 || result->status >= 500) {
    throw TransportError("provider returned HTTP " + std::to_string(result->status));
  }
  if (result->status != 200) {
    const std::string detail = result->body.substr(0, 512);
    if (detail.find("context_length") != std::string::npos ||
        detail.find("maximum context") != std::string::npos) {
      throw ContextOverflow("provider rejected request: " + detail);
    }
    throw ProviderRefusal("provider returned HTTP " + std::to_string(result->status) + ": " +
                          detail);
  }

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(result->body);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed provider response: ") + e.what());
  }

  ChatReply reply;
  try {
    reply.message.role = Role::kAssistant;
    reply.message.content = doc.at("choices").at(0).at("message").at("content").get<std::string>();
    if (doc.contains("usage")) {
      reply.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
      reply.usage.completion_tokens = doc["usage"].value("completion_tokens", 0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProviderRefusal(std::string("provider response carried no message: ") + e.what());
  }
  if (reply.message.content.empty()) {
    throw ProviderRefusal("provider returned an empty message");
  }
  return reply;
}

}  // namespace seedforge
