#include "seedforge/agent.hpp"

#include <cassert>
#include <sstream>

#include "json.hpp"

#include "seedforge/prompts.hpp"
#include "seedforge/util.hpp"

namespace seedforge {

const char* to_string(AgentState state) {
  switch (state) {
    case AgentState::kInit: return "Init";
    case AgentState::kAwaitInitialScript: return "AwaitInitialScript";
    case AgentState::kValidateScript: return "ValidateScript";
    case AgentState::kRunGenerator: return "RunGenerator";
    case AgentState::kCollectCoverage: return "CollectCoverage";
    case AgentState::kSummarize: return "Summarize";
    case AgentState::kAwaitImprovedScript: return "AwaitImprovedScript";
    case AgentState::kRealign: return "Realign";
    case AgentState::kDone: return "Done";
    case AgentState::kAborted: return "Aborted";
  }
  return "unknown";
}

const char* to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kRunning: return "running";
    case StopReason::kWallClock: return "wall-clock";
    case StopReason::kBudget: return "budget";
    case StopReason::kConverged: return "converged";
    case StopReason::kRealignExhausted: return "realign-exhausted";
    case StopReason::kProviderFailed: return "provider-failed";
  }
  return "unknown";
}

std::optional<std::string> extract_fenced_block(const std::string& reply) {
  std::istringstream in(reply);
  std::string line;
  bool inside = false;
  std::string block;
  while (std::getline(in, line)) {
    std::string_view trimmed(line);
    while (!trimmed.empty() && (trimmed.front() == ' ' || trimmed.front() == '\t')) {
      trimmed.remove_prefix(1);
    }
    if (trimmed.rfind("```", 0) == 0) {
      if (inside) return block;  // first fenced block wins
      inside = true;
      continue;
    }
    if (inside) {
      block += line;
      block += '\n';
    }
  }
  return std::nullopt;  // no block, or an unterminated fence
}

bool should_continue(std::chrono::steady_clock::time_point started_at,
                     std::chrono::steady_clock::time_point now,
                     std::chrono::milliseconds wall_limit, const CostLedger& ledger) {
  return (now - started_at) < wall_limit && !ledger.over_budget();
}

AgentSession::AgentSession(Gateway& gateway, TargetPort& port, AgentConfig config, Clock clock)
    : gateway_(gateway),
      port_(port),
      config_(std::move(config)),
      clock_(clock ? std::move(clock) : Clock([] { return std::chrono::steady_clock::now(); })) {
  state_.started_at = clock_();
}

bool AgentSession::terminal() const {
  return state_.state == AgentState::kDone || state_.state == AgentState::kAborted;
}

double AgentSession::coverage_ratio_or_zero() const {
  const BranchTally tally = tally_branches(state_.total_coverage);
  if (tally.total == 0) return 0.0;
  return static_cast<double>(tally.covered) / static_cast<double>(tally.total);
}

void AgentSession::transition(AgentState to, std::string note) {
  TransitionRecord record;
  record.from = state_.state;
  record.to = to;
  record.iteration = state_.iteration;
  record.dollars = gateway_.ledger().dollars();
  record.coverage_ratio = coverage_ratio_or_zero();
  record.note = std::move(note);
  record.at = std::chrono::system_clock::now();
  transitions_.push_back(std::move(record));
  state_.state = to;
}

void AgentSession::push_user(std::string content) {
  state_.history.push_back(ChatMessage{Role::kUser, std::move(content)});
}

ChatReply AgentSession::send_with_truncation() {
  // Accumulated conversation: when the estimate outgrows the window, drop the
  // oldest user/assistant exchange first. The harness code is re-sent with
  // every improvement request, so early exchanges are safe to shed.
  const std::size_t window = gateway_.profile().context_window_tokens;
  const std::size_t reserved = config_.budget.reserved_tokens;
  while (state_.history.size() >= 4 &&
         gateway_.estimate_history_tokens(state_.history) + reserved >= window) {
    state_.history.erase(state_.history.begin() + 1, state_.history.begin() + 3);
  }
  ChatReply reply = gateway_.send(state_.history);
  state_.history.push_back(reply.message);
  return reply;
}

void AgentSession::finish(StopReason reason, std::string note) {
  state_.stop_reason = reason;
  const bool graceful = state_.best_script.has_value();
  transition(graceful ? AgentState::kDone : AgentState::kAborted, std::move(note));
}

void AgentSession::enter_realign(AgentState failed_state, FailureEvidence evidence) {
  failed_state_ = failed_state;
  pending_failure_ = std::move(evidence);
  transition(AgentState::kRealign, std::string(to_string(pending_failure_->kind)));
}

void AgentSession::handle_init() {
  harness_code_ = port_.harness_source();
  // Full harness when it fits comfortably, else just the entry function.
  const std::size_t harness_budget = config_.budget.available() / 2;
  if (estimate_tokens(harness_code_) > harness_budget) {
    std::string snippet = port_.entry_snippet();
    if (!snippet.empty()) harness_code_ = std::move(snippet);
  }

  state_.history.push_back(ChatMessage{Role::kSystem, render(PromptKind::kSystemPrompt, {})});
  push_user(render(PromptKind::kUserPrompt, {{"harness_code", harness_code_}}) +
            render(PromptKind::kExampleScriptPrompt, {}));
  transition(AgentState::kAwaitInitialScript);
}

void AgentSession::handle_await_script() {
  try {
    send_with_truncation();
  } catch (const Error& e) {
    finish(StopReason::kProviderFailed, e.what());
    return;
  }
  transition(AgentState::kValidateScript);
}

void AgentSession::handle_validate() {
  assert(!state_.history.empty() && state_.history.back().role == Role::kAssistant);
  const std::string& reply = state_.history.back().content;
  auto block = extract_fenced_block(reply);
  if (!block) {
    enter_realign(AgentState::kValidateScript, make_parse_failure(reply));
    return;
  }
  GeneratorScript script;
  script.source = std::move(*block);
  script.version = state_.iteration + 1;  // the iteration this script will drive
  current_script_ = std::move(script);
  transition(AgentState::kRunGenerator);
}

void AgentSession::handle_run_generator() {
  auto validated = port_.validate(*current_script_);
  if (std::holds_alternative<FailureEvidence>(validated)) {
    enter_realign(AgentState::kRunGenerator, std::get<FailureEvidence>(std::move(validated)));
    return;
  }
  current_script_ = std::get<GeneratorScript>(std::move(validated));
  state_.validated_scripts.push_back(*current_script_);

  BatchResult batch = port_.produce_seeds(*current_script_);
  if (batch.evidence) {
    enter_realign(AgentState::kRunGenerator, std::move(*batch.evidence));
    return;
  }
  pending_stats_ = IterationStats{};
  pending_stats_.seeds_produced = batch.produced;
  pending_stats_.seeds_duplicated = batch.duplicates;
  pending_hashes_ = std::move(batch.new_hashes);
  transition(AgentState::kCollectCoverage,
             "produced " + std::to_string(pending_stats_.seeds_produced) + " seeds");
}

void AgentSession::handle_collect() {
  pending_report_ = port_.collect_coverage(pending_hashes_);
  transition(AgentState::kSummarize);
}

void AgentSession::handle_summarize() {
  assert(pending_report_.has_value());
  state_.iteration += 1;

  const BranchTally before = last_tally_;
  state_.total_coverage = merge(state_.total_coverage, *pending_report_);
  pending_report_.reset();
  const BranchTally after = tally_branches(state_.total_coverage);
  last_tally_ = after;

  const double ratio =
      after.total == 0 ? 0.0 : static_cast<double>(after.covered) / static_cast<double>(after.total);
  const double previous_ratio =
      before.total == 0 ? 0.0 : static_cast<double>(before.covered) / static_cast<double>(before.total);

  pending_stats_.iteration = state_.iteration;
  pending_stats_.coverage_ratio = ratio;
  pending_stats_.delta = ratio - previous_ratio;
  pending_stats_.new_covered_branches = after.covered - before.covered;
  state_.iterations.push_back(pending_stats_);

  if (pending_stats_.new_covered_branches > best_new_covered_ || !state_.best_script) {
    best_new_covered_ = pending_stats_.new_covered_branches;
    state_.best_script = current_script_;
  }
  state_.retry_counts.clear();  // a full iteration succeeded; fresh realign budget
  zero_delta_streak_ = pending_stats_.new_covered_branches == 0 ? zero_delta_streak_ + 1 : 0;

  const auto now = clock_();
  if ((now - state_.started_at) >= config_.wall_limit) {
    finish(StopReason::kWallClock, "wall clock limit reached");
    return;
  }
  if (gateway_.ledger().over_budget()) {
    finish(StopReason::kBudget, "cost budget exceeded");
    return;
  }
  if (config_.converge_early && zero_delta_streak_ >= 2) {
    finish(StopReason::kConverged, "no new coverage for two iterations");
    return;
  }
  if (config_.max_iterations > 0 && state_.iteration >= config_.max_iterations) {
    finish(StopReason::kWallClock, "iteration cap reached");
    return;
  }

  // Feedback assembly: partially covered functions on the dynamic call
  // graph, pruned deepest-first to the context budget.
  ContextSlice slice;
  const std::string entry_id = port_.entry_function_id(state_.total_coverage);
  if (!entry_id.empty()) {
    const DynamicCallGraph graph = build_call_graph(state_.total_coverage, entry_id);
    slice = prune_to_budget(select_partially_covered(graph), graph, config_.budget);
  }
  std::ostringstream summary;
  summary << after.covered << " of " << after.total << " branches covered ("
          << format_fixed(ratio * 100.0, 2) << "%)";
  const std::string feedback = render_feedback_context(slice, *current_script_, summary.str());

  try {
    push_user(render(PromptKind::kSummaryPrompt, {{"coverage_report", feedback}}));
    send_with_truncation();  // the analysis/suggestions turn

    push_user(render(PromptKind::kUserPrompt, {{"harness_code", harness_code_}}) +
              render_script_section(current_script_->source));
  } catch (const Error& e) {
    finish(StopReason::kProviderFailed, e.what());
    return;
  }
  transition(AgentState::kAwaitImprovedScript);
}

void AgentSession::handle_realign() {
  assert(pending_failure_.has_value());
  int& count = state_.retry_counts[failed_state_];
  if (count >= config_.max_realign) {
    finish(StopReason::kRealignExhausted,
           std::string("realign retries exhausted at ") + to_string(failed_state_));
    return;
  }
  count += 1;

  try {
    push_user(render_realign(*pending_failure_));
    send_with_truncation();
  } catch (const Error& e) {
    finish(StopReason::kProviderFailed, e.what());
    return;
  }
  pending_failure_.reset();
  // The corrected reply re-enters the pipeline where every reply does: the
  // script is re-extracted, then the failed step is redone.
  transition(AgentState::kValidateScript, "realigned");
}

bool AgentSession::advance() {
  switch (state_.state) {
    case AgentState::kInit: handle_init(); break;
    case AgentState::kAwaitInitialScript:
    case AgentState::kAwaitImprovedScript: handle_await_script(); break;
    case AgentState::kValidateScript: handle_validate(); break;
    case AgentState::kRunGenerator: handle_run_generator(); break;
    case AgentState::kCollectCoverage: handle_collect(); break;
    case AgentState::kSummarize: handle_summarize(); break;
    case AgentState::kRealign: handle_realign(); break;
    case AgentState::kDone:
    case AgentState::kAborted:
      throw IllegalEvent("agent session is terminal");
  }
  return !terminal();
}

void AgentSession::run() {
  while (advance()) {
  }
}

std::string transitions_to_jsonl(const std::vector<TransitionRecord>& transitions) {
  std::ostringstream out;
  for (const auto& record : transitions) {
    nlohmann::json line{{"from", to_string(record.from)},
                        {"to", to_string(record.to)},
                        {"iteration", record.iteration},
                        {"dollars", record.dollars},
                        {"coverage", record.coverage_ratio},
                        {"at", iso8601_utc(record.at)}};
    if (!record.note.empty()) line["note"] = record.note;
    out << line.dump() << "\n";
  }
  return out.str();
}

}  // namespace seedforge
