#pragma once

#include <chrono>
#include <string>

#include "seedforge/llm.hpp"

namespace seedforge {

/// Chat-completion client for OpenAI-compatible HTTP endpoints
/// (POST {base_url}/v1/chat/completions). The API key is read from the
/// environment variable named in the profile.
class OpenAiChatClient : public ChatClient {
 public:
  explicit OpenAiChatClient(std::chrono::seconds per_call_timeout = std::chrono::seconds(120));

  ChatReply send(const std::vector<ChatMessage>& history, const ProviderProfile& profile) override;

  /// Fails fast when the key env var is absent. Used for config validation.
  static bool key_available(const ProviderProfile& profile);

 private:
  std::chrono::seconds timeout_;
};

}  // namespace seedforge
