#include "seedforge/agent.hpp"

#include <gtest/gtest.h>

#include "seedforge/prompts.hpp"
#include "seedforge/scripted_client.hpp"
#include "testutil/fake_port.hpp"

namespace seedforge {
namespace {

using testutil::FakePort;
using testutil::simple_report;

std::string fenced(const std::string& code) {
  return "Here you go.\n```python\n" + code + "\n```\nGood luck!\n";
}

ProviderProfile cheap_profile(std::uint64_t window = 100000) {
  ProviderProfile profile;
  profile.model = "scripted";
  profile.context_window_tokens = window;
  profile.prompt_price_per_mtok = 0.0;
  profile.completion_price_per_mtok = 0.0;
  return profile;
}

Gateway::Sleeper no_sleep() {
  return [](std::chrono::milliseconds) {};
}

AgentConfig quick_config() {
  AgentConfig config;
  config.budget = ContextBudget{100000, 1000};
  config.max_iterations = 2;
  return config;
}

TEST(ExtractFencedBlock, FirstBlockWins) {
  EXPECT_EQ(extract_fenced_block("```python\nfirst\n```\n```python\nsecond\n```"),
            std::optional<std::string>("first\n"));
  EXPECT_EQ(extract_fenced_block("text\n```\nbare fence\n```\n"),
            std::optional<std::string>("bare fence\n"));
  EXPECT_EQ(extract_fenced_block("no code at all"), std::nullopt);
  EXPECT_EQ(extract_fenced_block("```python\nunterminated"), std::nullopt);
}

TEST(ShouldContinue, WallAndBudgetCases) {
  const auto t0 = std::chrono::steady_clock::time_point{};
  CostLedger ledger;
  ledger.set_soft_limit_dollars(0.5);

  ProviderProfile dollar_per_mtok = cheap_profile();
  dollar_per_mtok.prompt_price_per_mtok = 1.0;

  ledger.record(TokenUsage{400'000, 0}, dollar_per_mtok);  // $0.40
  EXPECT_TRUE(should_continue(t0, t0 + std::chrono::minutes(29), std::chrono::minutes(30), ledger));
  EXPECT_FALSE(should_continue(t0, t0 + std::chrono::minutes(31), std::chrono::minutes(30), ledger));

  ledger.record(TokenUsage{110'000, 0}, dollar_per_mtok);  // $0.51
  EXPECT_FALSE(should_continue(t0, t0 + std::chrono::minutes(10), std::chrono::minutes(30), ledger));
}

TEST(AgentSession, HappyPathMessageOrdering) {
  ScriptedClient client({
      {fenced("print(1)"), 10, 10, 0},
      {"Analysis: covers little; vary the header bytes.", 10, 10, 0},
      {fenced("print(2)"), 10, 10, 0},
  });
  Gateway gateway(client, cheap_profile(), RetryPolicy{}, {}, no_sleep());
  FakePort port;
  port.reports = {simple_report(port.entry_id, 10, 2), simple_report(port.entry_id, 10, 5)};

  AgentSession session(gateway, port, quick_config());
  session.run();

  const SessionState& state = session.session();
  EXPECT_EQ(state.state, AgentState::kDone);
  EXPECT_EQ(state.iteration, 2);
  ASSERT_EQ(state.validated_scripts.size(), 2u);
  EXPECT_EQ(state.validated_scripts[0].version, 1);
  EXPECT_EQ(state.validated_scripts[1].version, 2);

  // [system, user(init), asst(script1), user(summary), asst(analysis),
  //  user(improve), asst(script2)]
  const auto& history = state.history;
  ASSERT_GE(history.size(), 7u);
  EXPECT_EQ(history[0].role, Role::kSystem);
  EXPECT_EQ(history[0].content.rfind("As a professional security engineer", 0), 0u);

  EXPECT_EQ(history[1].role, Role::kUser);
  EXPECT_NE(history[1].content.find("## Fuzzing Harness Code:"), std::string::npos);
  EXPECT_NE(history[1].content.find(port.harness), std::string::npos);
  EXPECT_NE(history[1].content.find("Here is an example of Python script"), std::string::npos);

  EXPECT_EQ(history[3].role, Role::kUser);
  EXPECT_EQ(history[3].content.rfind("Here is the coverage information", 0), 0u);
  EXPECT_NE(history[3].content.find("2 of 10 branches covered (20.00%)"), std::string::npos);

  // Suggestion-first: the summary/analysis exchange precedes the request for
  // an improved script.
  EXPECT_EQ(history[4].role, Role::kAssistant);
  EXPECT_EQ(history[5].role, Role::kUser);
  EXPECT_NE(history[5].content.find("Write a Python script"), std::string::npos);
  EXPECT_NE(history[5].content.find("Here is the Python script from the previous iteration:"),
            std::string::npos);
  EXPECT_NE(history[5].content.find("print(1)"), std::string::npos);
  EXPECT_EQ(history[5].content.find("Here is an example of Python script"), std::string::npos)
      << "example prompt is sent only on the first iteration";
}

TEST(AgentSession, ParseFailureRealignsThenRecovers) {
  ScriptedClient client({
      {"I think the answer is prose.", 10, 10, 0},
      {fenced("print('fixed')"), 10, 10, 0},
  });
  Gateway gateway(client, cheap_profile(), RetryPolicy{}, {}, no_sleep());
  FakePort port;
  port.reports = {simple_report(port.entry_id, 4, 2)};

  AgentConfig config = quick_config();
  config.max_iterations = 1;
  AgentSession session(gateway, port, config);
  session.run();

  const SessionState& state = session.session();
  EXPECT_EQ(state.state, AgentState::kDone);
  EXPECT_EQ(state.validated_scripts.size(), 1u);

  bool realign_seen = false;
  for (const auto& record : session.transitions()) {
    if (record.to == AgentState::kRealign) realign_seen = true;
  }
  EXPECT_TRUE(realign_seen);

  bool prompt_found = false;
  for (const auto& message : state.history) {
    if (message.role == Role::kUser &&
        message.content.find("wrapped in triple backticks") != std::string::npos &&
        message.content.find("I think the answer is prose.") != std::string::npos) {
      prompt_found = true;
    }
  }
  EXPECT_TRUE(prompt_found) << "realign prompt must restate the fencing requirement";
}

TEST(AgentSession, ExecFailureRealignEmbedsStderrAndReturnsToFailedState) {
  const std::string stderr_text =
      "Traceback (most recent call last):\n  File \"gen.py\", line 1, in <module>\n"
      "ZeroDivisionError: division by zero";
  ScriptedClient client({
      {fenced("1/0"), 10, 10, 0},
      {fenced("print('repaired')"), 10, 10, 0},
  });
  Gateway gateway(client, cheap_profile(), RetryPolicy{}, {}, no_sleep());
  FakePort port;
  port.validate_failures.push_back(make_exec_failure(stderr_text, 1));
  port.reports = {simple_report(port.entry_id, 4, 1)};

  AgentConfig config = quick_config();
  config.max_iterations = 1;
  AgentSession session(gateway, port, config);
  session.run();

  const SessionState& state = session.session();
  EXPECT_EQ(state.state, AgentState::kDone);

  bool evidence_echoed = false;
  for (const auto& message : state.history) {
    if (message.role == Role::kUser && message.content.find(stderr_text) != std::string::npos) {
      evidence_echoed = true;
    }
  }
  EXPECT_TRUE(evidence_echoed) << "stderr must be embedded verbatim";

  // Realign leads back into the failed state: RunGenerator is re-entered and
  // succeeds on the repaired script.
  std::vector<AgentState> visits;
  for (const auto& record : session.transitions()) visits.push_back(record.to);
  int run_generator_entries = 0;
  bool realign_before_second_run = false;
  for (std::size_t i = 0; i < visits.size(); ++i) {
    if (visits[i] == AgentState::kRunGenerator) {
      run_generator_entries += 1;
      if (run_generator_entries == 2) {
        for (std::size_t j = 0; j < i; ++j) {
          if (visits[j] == AgentState::kRealign) realign_before_second_run = true;
        }
      }
    }
  }
  EXPECT_EQ(run_generator_entries, 2);
  EXPECT_TRUE(realign_before_second_run);
  EXPECT_EQ(port.validate_calls, 2);
}

TEST(AgentSession, AdversarialGarbageAbortsWithinRetryBound) {
  std::vector<ScriptedReply> garbage;
  for (int i = 0; i < 20; ++i) {
    garbage.push_back({"garbage reply " + std::to_string(i), 1, 1, 0});
  }
  ScriptedClient client(std::move(garbage));
  Gateway gateway(client, cheap_profile(), RetryPolicy{}, {}, no_sleep());
  FakePort port;

  AgentSession session(gateway, port, quick_config());
  session.run();

  const SessionState& state = session.session();
  EXPECT_EQ(state.state, AgentState::kAborted);
  EXPECT_EQ(state.stop_reason, StopReason::kRealignExhausted);
  EXPECT_FALSE(state.best_script.has_value());
  for (const auto& [site, count] : state.retry_counts) {
    EXPECT_LE(count, 3);
  }
  // initial attempt + max_realign corrected attempts
  EXPECT_EQ(client.served(), 4u);
}

TEST(AgentSession, BudgetCheckedBetweenIterationsOnly) {
  // Each reply costs $0.30: the limit is crossed mid-iteration-2, which
  // still completes before the machine stops.
  ProviderProfile profile = cheap_profile();
  profile.prompt_price_per_mtok = 1.0;
  ScriptedClient client({
      {fenced("print(1)"), 300'000, 0, 0},
      {"analysis", 300'000, 0, 0},
      {fenced("print(2)"), 300'000, 0, 0},
  });
  Gateway gateway(client, profile, RetryPolicy{}, {}, no_sleep());
  gateway.ledger().set_soft_limit_dollars(0.5);
  FakePort port;
  port.reports = {simple_report(port.entry_id, 10, 2), simple_report(port.entry_id, 10, 6)};

  AgentConfig config;
  config.budget = ContextBudget{100000, 1000};
  AgentSession session(gateway, port, config);
  session.run();

  const SessionState& state = session.session();
  EXPECT_EQ(state.state, AgentState::kDone);
  EXPECT_EQ(state.stop_reason, StopReason::kBudget);
  EXPECT_EQ(state.iteration, 2) << "the in-flight iteration finishes";
  EXPECT_EQ(port.collect_calls, 2);
  EXPECT_DOUBLE_EQ(gateway.ledger().dollars(), 0.9);
}

TEST(AgentSession, WallClockStopsAtSummarize) {
  ScriptedClient client({{fenced("print(1)"), 10, 10, 0}});
  Gateway gateway(client, cheap_profile(), RetryPolicy{}, {}, no_sleep());
  FakePort port;
  port.reports = {simple_report(port.entry_id, 10, 1)};

  auto now = std::chrono::steady_clock::time_point{};
  auto fake_clock = [&now] { return now; };

  AgentConfig config;
  config.budget = ContextBudget{100000, 1000};
  config.wall_limit = std::chrono::minutes(30);
  AgentSession session(gateway, port, config, fake_clock);

  // Let time pass beyond the limit before the loop reaches Summarize.
  now += std::chrono::minutes(31);
  session.run();

  const SessionState& state = session.session();
  EXPECT_EQ(state.state, AgentState::kDone);
  EXPECT_EQ(state.stop_reason, StopReason::kWallClock);
  EXPECT_EQ(state.iteration, 1);
  EXPECT_TRUE(state.best_script.has_value());
}

TEST(AgentSession, MonotoneCoverageAcrossIterations) {
  ScriptedClient client({
      {fenced("print(1)"), 10, 10, 0},
      {"a1", 10, 10, 0},
      {fenced("print(2)"), 10, 10, 0},
      {"a2", 10, 10, 0},
      {fenced("print(3)"), 10, 10, 0},
  });
  Gateway gateway(client, cheap_profile(), RetryPolicy{}, {}, no_sleep());
  FakePort port;
  port.reports = {simple_report(port.entry_id, 10, 2), simple_report(port.entry_id, 10, 5),
                  simple_report(port.entry_id, 10, 4)};

  AgentConfig config = quick_config();
  config.max_iterations = 3;
  AgentSession session(gateway, port, config);
  session.run();

  const SessionState& state = session.session();
  ASSERT_EQ(state.iterations.size(), 3u);
  double last = 0.0;
  for (const auto& stats : state.iterations) {
    EXPECT_GE(stats.coverage_ratio, last);
    EXPECT_GE(stats.delta, 0.0);
    last = stats.coverage_ratio;
  }
  EXPECT_DOUBLE_EQ(state.iterations.back().coverage_ratio, 0.5);
}

TEST(AgentSession, ConvergedStopsAfterTwoZeroDeltaIterations) {
  ScriptedClient client({
      {fenced("print(1)"), 10, 10, 0},
      {"a1", 10, 10, 0},
      {fenced("print(2)"), 10, 10, 0},
      {"a2", 10, 10, 0},
      {fenced("print(3)"), 10, 10, 0},
  });
  Gateway gateway(client, cheap_profile(), RetryPolicy{}, {}, no_sleep());
  FakePort port;
  port.reports = {simple_report(port.entry_id, 10, 3)};  // repeats; no new coverage after iter 1

  AgentConfig config;
  config.budget = ContextBudget{100000, 1000};
  config.converge_early = true;
  AgentSession session(gateway, port, config);
  session.run();

  const SessionState& state = session.session();
  EXPECT_EQ(state.state, AgentState::kDone);
  EXPECT_EQ(state.stop_reason, StopReason::kConverged);
  EXPECT_EQ(state.iteration, 3);
}

TEST(AgentSession, TranscriptExhaustionEndsSessionGracefully) {
  ScriptedClient client({{fenced("print(1)"), 10, 10, 0}, {"analysis", 10, 10, 0}});
  Gateway gateway(client, cheap_profile(), RetryPolicy{}, {}, no_sleep());
  FakePort port;
  port.reports = {simple_report(port.entry_id, 10, 2)};

  AgentConfig config;
  config.budget = ContextBudget{100000, 1000};
  AgentSession session(gateway, port, config);
  session.run();

  const SessionState& state = session.session();
  EXPECT_EQ(state.state, AgentState::kDone) << "a validated generator exists";
  EXPECT_EQ(state.stop_reason, StopReason::kProviderFailed);
}

TEST(AgentSession, IllegalEventOnTerminalSession) {
  ScriptedClient client({{"prose", 1, 1, 0}});
  Gateway gateway(client, cheap_profile(), RetryPolicy{}, {}, no_sleep());
  FakePort port;
  AgentSession session(gateway, port, quick_config());
  session.run();
  EXPECT_TRUE(session.terminal());
  EXPECT_THROW(session.advance(), IllegalEvent);
}

TEST(AgentSession, HistoryTruncationDropsOldestExchange) {
  // A tiny window forces the accumulated history to shed its oldest
  // user/assistant pair while the session keeps functioning.
  ScriptedClient client({
      {fenced("print(1)"), 10, 10, 0},
      {"a1", 10, 10, 0},
      {fenced("print(2)"), 10, 10, 0},
      {"a2", 10, 10, 0},
      {fenced("print(3)"), 10, 10, 0},
  });
  Gateway gateway(client, cheap_profile(/*window=*/1200), RetryPolicy{}, {}, no_sleep());
  FakePort port;
  port.harness = std::string(800, 'h');  // each user prompt ~ several hundred tokens
  port.reports = {simple_report(port.entry_id, 10, 2), simple_report(port.entry_id, 10, 5),
                  simple_report(port.entry_id, 10, 7)};

  AgentConfig config;
  config.budget = ContextBudget{1200, 100};
  config.max_iterations = 3;
  AgentSession session(gateway, port, config);
  session.run();

  const SessionState& state = session.session();
  EXPECT_EQ(state.state, AgentState::kDone);
  EXPECT_EQ(state.iteration, 3);
  EXPECT_EQ(state.history.front().role, Role::kSystem) << "system prompt is never dropped";
  // The initial scripted reply must have been truncated away.
  bool first_script_still_present = false;
  for (const auto& message : state.history) {
    if (message.content.find("print(1)") != std::string::npos &&
        message.role == Role::kAssistant) {
      first_script_still_present = true;
    }
  }
  EXPECT_FALSE(first_script_still_present);
}

TEST(AgentSession, DeterministicReplay) {
  auto make_session = [](ScriptedClient& client, Gateway& gateway, FakePort& port)
      -> std::vector<std::tuple<AgentState, AgentState, int, double>> {
    AgentConfig config;
    config.budget = ContextBudget{100000, 1000};
    config.max_iterations = 2;
    AgentSession session(gateway, port, config);
    session.run();
    std::vector<std::tuple<AgentState, AgentState, int, double>> trace;
    for (const auto& record : session.transitions()) {
      trace.emplace_back(record.from, record.to, record.iteration, record.dollars);
    }
    return trace;
  };

  std::vector<ScriptedReply> replies = {
      {fenced("print(1)"), 10, 10, 0},
      {"a1", 10, 10, 0},
      {fenced("print(2)"), 10, 10, 0},
  };

  ScriptedClient c1(replies);
  Gateway g1(c1, cheap_profile(), RetryPolicy{}, {}, no_sleep());
  FakePort p1;
  p1.reports = {simple_report(p1.entry_id, 8, 2), simple_report(p1.entry_id, 8, 6)};

  ScriptedClient c2(replies);
  Gateway g2(c2, cheap_profile(), RetryPolicy{}, {}, no_sleep());
  FakePort p2;
  p2.reports = {simple_report(p2.entry_id, 8, 2), simple_report(p2.entry_id, 8, 6)};

  EXPECT_EQ(make_session(c1, g1, p1), make_session(c2, g2, p2));
}

}  // namespace
}  // namespace seedforge
