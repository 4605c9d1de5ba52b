#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "seedforge/context.hpp"
#include "seedforge/coverage.hpp"
#include "seedforge/evidence.hpp"
#include "seedforge/llm.hpp"
#include "seedforge/runtime.hpp"
#include "seedforge/script.hpp"

namespace seedforge {

struct IllegalEvent : Error {
  using Error::Error;
};

enum class AgentState {
  kInit,
  kAwaitInitialScript,
  kValidateScript,
  kRunGenerator,
  kCollectCoverage,
  kSummarize,
  kAwaitImprovedScript,
  kRealign,
  kDone,
  kAborted,
};

const char* to_string(AgentState state);

enum class StopReason {
  kRunning,
  kWallClock,
  kBudget,
  kConverged,
  kRealignExhausted,
  kProviderFailed,
};

const char* to_string(StopReason reason);

/// First fenced code block of the reply, or nothing when the reply carries
/// no such block (ties resolved first-block-wins).
std::optional<std::string> extract_fenced_block(const std::string& reply);

/// In-process boundary to the target runtime: validation, seed production,
/// and coverage collection for one harness. Stands in for the paper's
/// runtime daemon; the agent never touches processes or coverage tooling
/// directly.
class TargetPort {
 public:
  virtual ~TargetPort() = default;

  virtual std::variant<GeneratorScript, FailureEvidence> validate(const GeneratorScript&) = 0;
  virtual BatchResult produce_seeds(const GeneratorScript&) = 0;
  /// Coverage of the given freshly produced seeds (merged into the session
  /// total by the agent).
  virtual CoverageReport collect_coverage(const std::vector<std::string>& new_hashes) = 0;
  /// Content of the {harness_code} prompt slot (full harness source).
  virtual std::string harness_source() = 0;
  /// Just the entry function's definition, used when the full harness does
  /// not fit the context budget.
  virtual std::string entry_snippet() = 0;
  /// Entry function id inside reports from this target ("" when unknown).
  virtual std::string entry_function_id(const CoverageReport& total) = 0;
};

struct AgentConfig {
  std::chrono::milliseconds wall_limit{30 * 60 * 1000};
  int max_realign = 3;
  ContextBudget budget;
  int max_iterations = 0;      // 0 = bounded by wall clock and cost only
  bool converge_early = false; // stop after two consecutive zero-delta iterations
};

struct IterationStats {
  int iteration = 0;
  double coverage_ratio = 0.0;
  double delta = 0.0;
  std::uint64_t new_covered_branches = 0;
  int seeds_produced = 0;
  int seeds_duplicated = 0;
};

struct TransitionRecord {
  AgentState from = AgentState::kInit;
  AgentState to = AgentState::kInit;
  int iteration = 0;
  double dollars = 0.0;
  double coverage_ratio = 0.0;
  std::string note;
  std::chrono::system_clock::time_point at;
};

struct SessionState {
  AgentState state = AgentState::kInit;
  int iteration = 0;
  std::vector<ChatMessage> history;
  std::optional<GeneratorScript> best_script;
  std::vector<GeneratorScript> validated_scripts;
  CoverageReport total_coverage;
  std::map<AgentState, int> retry_counts;
  StopReason stop_reason = StopReason::kRunning;
  std::vector<IterationStats> iterations;
  std::chrono::steady_clock::time_point started_at;
};

/// True iff the wall clock has not run out and the ledger is not over
/// budget. Consulted only on entering Summarize (both bounds are soft).
bool should_continue(std::chrono::steady_clock::time_point started_at,
                     std::chrono::steady_clock::time_point now,
                     std::chrono::milliseconds wall_limit, const CostLedger& ledger);

/// The create -> execute -> measure -> summarize -> improve state machine
/// with realignment on deviant replies. One session is strictly sequential.
class AgentSession {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  AgentSession(Gateway& gateway, TargetPort& port, AgentConfig config, Clock clock = {});

  /// Executes exactly one transition. Returns false once terminal. Throws
  /// IllegalEvent when called on a terminal session.
  bool advance();

  /// Drives the machine to Done or Aborted.
  void run();

  bool terminal() const;
  const SessionState& session() const { return state_; }
  const std::vector<TransitionRecord>& transitions() const { return transitions_; }
  const Gateway& gateway() const { return gateway_; }

 private:
  void transition(AgentState to, std::string note = {});
  ChatReply send_with_truncation();
  void push_user(std::string content);
  void enter_realign(AgentState failed_state, FailureEvidence evidence);
  void finish(StopReason reason, std::string note);
  double coverage_ratio_or_zero() const;

  void handle_init();
  void handle_await_script();
  void handle_validate();
  void handle_run_generator();
  void handle_collect();
  void handle_summarize();
  void handle_realign();

  Gateway& gateway_;
  TargetPort& port_;
  AgentConfig config_;
  Clock clock_;

  SessionState state_;
  std::vector<TransitionRecord> transitions_;

  std::string harness_code_;
  std::optional<GeneratorScript> current_script_;
  std::optional<FailureEvidence> pending_failure_;
  AgentState failed_state_ = AgentState::kValidateScript;
  std::optional<CoverageReport> pending_report_;
  IterationStats pending_stats_;
  std::vector<std::string> pending_hashes_;
  BranchTally last_tally_;
  std::uint64_t best_new_covered_ = 0;
  int zero_delta_streak_ = 0;
};

/// One JSON object per transition, newline-delimited.
std::string transitions_to_jsonl(const std::vector<TransitionRecord>& transitions);

}  // namespace seedforge
