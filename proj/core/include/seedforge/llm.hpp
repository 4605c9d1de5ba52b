#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "seedforge/context.hpp"
#include "seedforge/error.hpp"

namespace seedforge {

struct TransportError : Error {
  using Error::Error;
};

struct ContextOverflow : Error {
  using Error::Error;
};

struct ProviderRefusal : Error {
  using Error::Error;
};

enum class Role { kSystem, kUser, kAssistant };

const char* to_string(Role role);
Role role_from_string(const std::string& name);

struct ChatMessage {
  Role role = Role::kUser;
  std::string content;
};

struct TokenUsage {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
};

/// Model identity plus the numbers that drive budgeting: context window and
/// per-million-token prices. Prices ship as editable configuration.
struct ProviderProfile {
  std::string model = "gpt-4o";
  std::uint64_t context_window_tokens = 128000;
  double prompt_price_per_mtok = 0.0;
  double completion_price_per_mtok = 0.0;
  std::string base_url = "https://api.openai.com";
  std::string api_key_env = "OPENAI_API_KEY";
  std::optional<double> temperature;  // provider default when unset
};

/// Cumulative token and dollar accounting for one session. Dollars are held
/// in integer nanodollars so the $0.50 boundary is exact.
class CostLedger {
 public:
  void record(const TokenUsage& usage, const ProviderProfile& profile);

  std::uint64_t prompt_tokens() const { return prompt_tokens_; }
  std::uint64_t completion_tokens() const { return completion_tokens_; }
  double dollars() const { return static_cast<double>(nanodollars_) / 1e9; }
  std::int64_t nanodollars() const { return nanodollars_; }

  double soft_limit_dollars() const { return static_cast<double>(soft_limit_nanodollars_) / 1e9; }
  void set_soft_limit_dollars(double dollars);

  /// True iff accumulated cost strictly exceeds the soft limit. Consulted
  /// between iterations only, so the in-flight iteration may overrun.
  bool over_budget() const { return nanodollars_ > soft_limit_nanodollars_; }

 private:
  std::uint64_t prompt_tokens_ = 0;
  std::uint64_t completion_tokens_ = 0;
  std::int64_t nanodollars_ = 0;
  std::int64_t soft_limit_nanodollars_ = 500'000'000;  // $0.50
};

inline bool over_budget(const CostLedger& ledger) { return ledger.over_budget(); }

struct ChatReply {
  ChatMessage message;
  TokenUsage usage;
};

/// Blocking chat-completion transport. Implementations throw TransportError
/// (retryable), ContextOverflow, or ProviderRefusal.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatReply send(const std::vector<ChatMessage>& history,
                         const ProviderProfile& profile) = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};  // doubles per attempt
};

/// Wraps a ChatClient with the session ledger, context-window precondition,
/// and transport retries. One gateway per session; safe to use from one
/// thread at a time.
class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Gateway(ChatClient& client, ProviderProfile profile, RetryPolicy retry = {},
          TokenEstimator estimator = {}, Sleeper sleeper = {});

  /// Pre-checks the estimated history size against the context window
  /// (throws ContextOverflow before any network call), retries transports
  /// per policy, and records usage in the ledger.
  ChatReply send(const std::vector<ChatMessage>& history);

  std::size_t estimate_history_tokens(const std::vector<ChatMessage>& history) const;

  const ProviderProfile& profile() const { return profile_; }
  const CostLedger& ledger() const { return ledger_; }
  CostLedger& ledger() { return ledger_; }
  int last_retries() const { return last_retries_; }

 private:
  ChatClient& client_;
  ProviderProfile profile_;
  RetryPolicy retry_;
  TokenEstimator estimator_;
  Sleeper sleeper_;
  CostLedger ledger_;
  int last_retries_ = 0;
};

}  // namespace seedforge
