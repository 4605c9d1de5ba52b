#include "seedforge/llm.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace seedforge {

const char* to_string(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
  }
  return "unknown";
}

Role role_from_string(const std::string& name) {
  if (name == "system") return Role::kSystem;
  if (name == "user") return Role::kUser;
  if (name == "assistant") return Role::kAssistant;
  throw std::invalid_argument("unknown chat role '" + name + "'");
}

namespace {

std::int64_t to_nanodollars(double tokens, double price_per_mtok) {
  // $price per 1e6 tokens == price nanodollars per 1e-3 token.
  return std::llround(tokens * price_per_mtok * 1000.0);
}

}  // namespace

void CostLedger::record(const TokenUsage& usage, const ProviderProfile& profile) {
  prompt_tokens_ += usage.prompt_tokens;
  completion_tokens_ += usage.completion_tokens;
  nanodollars_ += to_nanodollars(static_cast<double>(usage.prompt_tokens),
                                 profile.prompt_price_per_mtok);
  nanodollars_ += to_nanodollars(static_cast<double>(usage.completion_tokens),
                                 profile.completion_price_per_mtok);
}

void CostLedger::set_soft_limit_dollars(double dollars) {
  if (dollars < 0) throw std::invalid_argument("soft budget limit must be non-negative");
  soft_limit_nanodollars_ = std::llround(dollars * 1e9);
}

Gateway::Gateway(ChatClient& client, ProviderProfile profile, RetryPolicy retry,
                 TokenEstimator estimator, Sleeper sleeper)
    : client_(client),
      profile_(std::move(profile)),
      retry_(retry),
      estimator_(estimator ? std::move(estimator)
                           : TokenEstimator([](std::string_view s) { return estimate_tokens(s); })),
      sleeper_(sleeper ? std::move(sleeper)
                       : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })) {}

std::size_t Gateway::estimate_history_tokens(const std::vector<ChatMessage>& history) const {
  std::size_t sum = 0;
  for (const auto& message : history) {
    sum += estimator_(message.content) + 4;  // few tokens of per-message framing
  }
  return sum;
}

ChatReply Gateway::send(const std::vector<ChatMessage>& history) {
  const std::size_t estimated = estimate_history_tokens(history);
  if (estimated >= profile_.context_window_tokens) {
    throw ContextOverflow("estimated history of " + std::to_string(estimated) +
                          " tokens does not fit context window of " +
                          std::to_string(profile_.context_window_tokens));
  }

  last_retries_ = 0;
  std::chrono::milliseconds backoff = retry_.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      ChatReply reply = client_.send(history, profile_);
      if (reply.message.content.empty()) {
        throw ProviderRefusal("provider returned an empty reply");
      }
      ledger_.record(reply.usage, profile_);
      return reply;
    } catch (const TransportError&) {
      if (attempt >= retry_.max_attempts) throw;
      last_retries_ += 1;
      sleeper_(backoff);
      backoff *= 2;
    }
  }
}

}  // namespace seedforge
