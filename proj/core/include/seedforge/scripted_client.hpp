#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "seedforge/llm.hpp"

namespace seedforge {

/// One queued assistant reply of a replay transcript. Usage defaults to the
/// chars/4 estimate when the transcript does not pin token counts.
/// `fail_transport_times` injects that many transient transport failures
/// before the reply is served.
struct ScriptedReply {
  std::string content;
  std::optional<std::uint64_t> prompt_tokens;
  std::optional<std::uint64_t> completion_tokens;
  int fail_transport_times = 0;
};

/// Deterministic provider driven by a replay transcript. Replies are served
/// in order; an exhausted transcript surfaces as ProviderRefusal.
///
/// Transcript file schema (JSON):
///   {"replies": [{"content": "...",
///                 "prompt_tokens": 120,          // optional
///                 "completion_tokens": 80,       // optional
///                 "fail_transport_times": 0},    // optional
///                ...]}
class ScriptedClient : public ChatClient {
 public:
  explicit ScriptedClient(std::vector<ScriptedReply> replies);

  static ScriptedClient from_file(const std::filesystem::path& transcript);

  ChatReply send(const std::vector<ChatMessage>& history, const ProviderProfile& profile) override;

  std::size_t served() const { return next_; }
  std::size_t remaining() const { return replies_.size() - next_; }

 private:
  std::vector<ScriptedReply> replies_;
  std::size_t next_ = 0;
};

}  // namespace seedforge
