#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "seedforge/agent.hpp"
#include "seedforge/llm.hpp"
#include "seedforge/runtime.hpp"
#include "seedforge/target.hpp"

namespace seedforge {

struct MissingReport : Error {
  using Error::Error;
};

/// Everything one session needs: the target, the model, budgets, execution
/// policy, and where artifacts land.
struct RunConfig {
  TargetSpec target;
  ProviderProfile profile;
  std::chrono::milliseconds wall_limit{30 * 60 * 1000};
  double soft_limit_dollars = 0.5;
  ExecutionPolicy policy;
  std::filesystem::path workspace;
  /// Activates the scripted provider; without it a provider key must exist.
  std::optional<std::filesystem::path> replay_transcript;
  std::size_t reserved_tokens = 4096;
  int max_realign = 3;
  int max_iterations = 0;
  bool converge_early = false;

  void validate() const;  // throws ConfigError
};

enum class TerminationReason { kWallClock, kBudget, kConverged, kAborted };

const char* to_string(TerminationReason reason);

struct RunReport {
  double final_coverage = 0.0;
  std::vector<IterationStats> iterations;
  int generator_count = 0;
  std::uint64_t seeds_produced = 0;
  std::uint64_t seeds_deduped = 0;
  double dollars = 0.0;
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  TerminationReason reason = TerminationReason::kAborted;
  std::string stop_note;
  double elapsed_seconds = 0.0;  // timing; excluded from determinism checks

  /// 0 iff the session ended on a budget/convergence bound with at least one
  /// validated generator.
  int exit_code() const;
};

/// Executes one full session: builds the target, drives the agent loop, and
/// persists corpus/, generators/, crashes/, logs/run.jsonl and report.json
/// under the workspace.
RunReport run(const RunConfig& config);

/// Loads the report.json from a completed workspace. Throws MissingReport.
RunReport load_report(const std::filesystem::path& workspace);

/// Human-readable summary of a RunReport.
std::string format_report(const RunReport& report);

std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);

}  // namespace seedforge
