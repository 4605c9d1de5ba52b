#include "seedforge/scripted_client.hpp"

#include <fstream>

#include "json.hpp"

namespace seedforge {

ScriptedClient::ScriptedClient(std::vector<ScriptedReply> replies)
    : replies_(std::move(replies)) {}

ScriptedClient ScriptedClient::from_file(const std::filesystem::path& transcript) {
  std::ifstream in(transcript);
  if (!in) {
    throw ConfigError("cannot open replay transcript: " + transcript.string());
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed replay transcript " + transcript.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("replies") || !doc["replies"].is_array()) {
    throw ConfigError("replay transcript must be an object with a 'replies' array");
  }
  std::vector<ScriptedReply> replies;
  for (const auto& entry : doc["replies"]) {
    ScriptedReply reply;
    reply.content = entry.at("content").get<std::string>();
    if (entry.contains("prompt_tokens")) reply.prompt_tokens = entry["prompt_tokens"].get<std::uint64_t>();
    if (entry.contains("completion_tokens")) {
      reply.completion_tokens = entry["completion_tokens"].get<std::uint64_t>();
    }
    if (entry.contains("fail_transport_times")) {
      reply.fail_transport_times = entry["fail_transport_times"].get<int>();
    }
    replies.push_back(std::move(reply));
  }
  return ScriptedClient(std::move(replies));
}

ChatReply ScriptedClient::send(const std::vector<ChatMessage>& history,
                               const ProviderProfile& profile) {
  (void)profile;
  if (next_ >= replies_.size()) {
    throw ProviderRefusal("replay transcript exhausted after " + std::to_string(next_) +
                          " replies");
  }
  ScriptedReply& scripted = replies_[next_];
  if (scripted.fail_transport_times > 0) {
    scripted.fail_transport_times -= 1;
    throw TransportError("injected transport failure");
  }
  next_ += 1;

  ChatReply reply;
  reply.message = ChatMessage{Role::kAssistant, scripted.content};
  if (scripted.prompt_tokens) {
    reply.usage.prompt_tokens = *scripted.prompt_tokens;
  } else {
    std::size_t sum = 0;
    for (const auto& message : history) sum += estimate_tokens(message.content);
    reply.usage.prompt_tokens = sum;
  }
  reply.usage.completion_tokens =
      scripted.completion_tokens.value_or(estimate_tokens(scripted.content));
  return reply;
}

}  // namespace seedforge
