#include "seedforge/orchestrator.hpp"

#include <fstream>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "seedforge/http_client.hpp"
#include "seedforge/scripted_client.hpp"
#include "seedforge/util.hpp"

namespace seedforge {

const char* to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::kWallClock: return "WallClock";
    case TerminationReason::kBudget: return "Budget";
    case TerminationReason::kConverged: return "Converged";
    case TerminationReason::kAborted: return "Aborted";
  }
  return "unknown";
}

int RunReport::exit_code() const {
  const bool bounded = reason == TerminationReason::kWallClock ||
                       reason == TerminationReason::kBudget ||
                       reason == TerminationReason::kConverged;
  return bounded && generator_count > 0 ? 0 : 1;
}

void RunConfig::validate() const {
  if (wall_limit.count() <= 0) throw ConfigError("wall limit must be positive");
  if (soft_limit_dollars < 0) throw ConfigError("cost limit must be non-negative");
  if (policy.seeds_per_generator <= 0) throw ConfigError("seeds per generator must be positive");
  if (policy.batch_timeout.count() <= 0) throw ConfigError("batch timeout must be positive");
  if (workspace.empty()) throw ConfigError("workspace path is required");
  if (reserved_tokens >= profile.context_window_tokens) {
    throw ConfigError("reserved tokens must be smaller than the model context window");
  }
  if (replay_transcript) {
    if (!std::filesystem::exists(*replay_transcript)) {
      throw ConfigError("replay transcript does not exist: " + replay_transcript->string());
    }
  } else if (!OpenAiChatClient::key_available(profile)) {
    throw ConfigError("provider unreachable: set " + profile.api_key_env +
                      " or supply --replay <transcript>");
  }
}

namespace {

/// Binds the built target, the generator runner, and the session corpus into
/// the in-process runtime boundary the agent drives.
class LocalTargetPort : public TargetPort {
 public:
  LocalTargetPort(BuiltTarget& target, GeneratorRunner& runner, SeedCorpus& corpus,
                  std::filesystem::path crashes_dir)
      : target_(target), runner_(runner), corpus_(corpus), crashes_dir_(std::move(crashes_dir)) {}

  std::variant<GeneratorScript, FailureEvidence> validate(const GeneratorScript& script) override {
    return runner_.validate(script);
  }

  BatchResult produce_seeds(const GeneratorScript& script) override {
    return runner_.produce_seeds(script, corpus_);
  }

  CoverageReport collect_coverage(const std::vector<std::string>& new_hashes) override {
    if (new_hashes.empty()) return CoverageReport{};
    std::vector<std::filesystem::path> files;
    files.reserve(new_hashes.size());
    for (const auto& hash : new_hashes) files.push_back(corpus_.path_for(hash));
    return target_.run_seed_files(files, crashes_dir_);
  }

  std::string harness_source() override { return target_.harness_source(); }

  std::string entry_snippet() override {
    if (target_.spec().kind == TargetKind::kSynthetic) {
      return target_.harness_source();
    }
    return extract_function_snippet(target_.harness_source(), target_.spec().entry);
  }

  std::string entry_function_id(const CoverageReport& total) override {
    return target_.entry_function_id(total);
  }

 private:
  BuiltTarget& target_;
  GeneratorRunner& runner_;
  SeedCorpus& corpus_;
  std::filesystem::path crashes_dir_;
};

TerminationReason reason_from(StopReason stop) {
  switch (stop) {
    case StopReason::kWallClock: return TerminationReason::kWallClock;
    case StopReason::kBudget: return TerminationReason::kBudget;
    case StopReason::kConverged: return TerminationReason::kConverged;
    case StopReason::kRunning:
    case StopReason::kRealignExhausted:
    case StopReason::kProviderFailed: return TerminationReason::kAborted;
  }
  return TerminationReason::kAborted;
}

void persist_artifacts(const RunConfig& config, const AgentSession& session,
                       const RunReport& report) {
  const auto& workspace = config.workspace;
  std::filesystem::create_directories(workspace / "generators");
  std::filesystem::create_directories(workspace / "logs");

  int index = 0;
  for (const auto& script : session.session().validated_scripts) {
    std::ostringstream name;
    name << "gen_" << ++index << "_v" << script.version << ".py";
    write_file(workspace / "generators" / name.str(), script.source);
  }
  write_file(workspace / "logs" / "run.jsonl", transitions_to_jsonl(session.transitions()));
  write_file(workspace / "report.json", report_to_json(report));
}

}  // namespace

RunReport run(const RunConfig& config) {
  config.validate();

  std::filesystem::create_directories(config.workspace / "corpus");
  std::filesystem::create_directories(config.workspace / "crashes");
  std::filesystem::create_directories(config.workspace / "generators");
  std::filesystem::create_directories(config.workspace / "logs");

  const auto started = std::chrono::steady_clock::now();

  RunReport report;
  BuiltTarget target;
  try {
    target = build(config.target);
  } catch (const BuildFailure& e) {
    report.reason = TerminationReason::kAborted;
    report.stop_note = e.what();
    write_file(config.workspace / "report.json", report_to_json(report));
    return report;
  }

  SeedCorpus corpus(config.workspace / "corpus");
  GeneratorRunner runner(config.policy, config.workspace / "tmp");
  LocalTargetPort port(target, runner, corpus, config.workspace / "crashes");

  std::unique_ptr<ChatClient> client;
  Gateway::Sleeper sleeper;  // default: real backoff sleeps
  if (config.replay_transcript) {
    client = std::make_unique<ScriptedClient>(ScriptedClient::from_file(*config.replay_transcript));
    sleeper = [](std::chrono::milliseconds) {};  // replay runs offline; no point waiting
  } else {
    client = std::make_unique<OpenAiChatClient>();
  }

  Gateway gateway(*client, config.profile, RetryPolicy{}, {}, sleeper);
  gateway.ledger().set_soft_limit_dollars(config.soft_limit_dollars);

  AgentConfig agent_config;
  agent_config.wall_limit = config.wall_limit;
  agent_config.max_realign = config.max_realign;
  agent_config.budget = ContextBudget{config.profile.context_window_tokens, config.reserved_tokens};
  agent_config.max_iterations = config.max_iterations;
  agent_config.converge_early = config.converge_early;

  AgentSession session(gateway, port, agent_config);
  session.run();

  corpus.save_manifest();
  std::error_code ec;
  std::filesystem::remove_all(config.workspace / "tmp", ec);

  const auto& state = session.session();
  const BranchTally tally = tally_branches(state.total_coverage);
  report.final_coverage =
      tally.total == 0 ? 0.0 : static_cast<double>(tally.covered) / static_cast<double>(tally.total);
  report.iterations = state.iterations;
  report.generator_count = static_cast<int>(state.validated_scripts.size());
  report.seeds_produced = corpus.size();
  for (const auto& stats : state.iterations) {
    report.seeds_deduped += static_cast<std::uint64_t>(stats.seeds_duplicated);
  }
  report.dollars = gateway.ledger().dollars();
  report.prompt_tokens = gateway.ledger().prompt_tokens();
  report.completion_tokens = gateway.ledger().completion_tokens();
  report.reason = reason_from(state.stop_reason);
  report.stop_note = std::string(to_string(state.stop_reason));
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  persist_artifacts(config, session, report);
  return report;
}

std::string report_to_json(const RunReport& report) {
  nlohmann::json iterations = nlohmann::json::array();
  for (const auto& stats : report.iterations) {
    iterations.push_back({{"iteration", stats.iteration},
                          {"coverage_ratio", stats.coverage_ratio},
                          {"delta", stats.delta},
                          {"new_covered_branches", stats.new_covered_branches},
                          {"seeds_produced", stats.seeds_produced},
                          {"seeds_duplicated", stats.seeds_duplicated}});
  }
  nlohmann::json doc{{"final_coverage", report.final_coverage},
                     {"iterations", std::move(iterations)},
                     {"generator_count", report.generator_count},
                     {"seeds_produced", report.seeds_produced},
                     {"seeds_deduped", report.seeds_deduped},
                     {"dollars", report.dollars},
                     {"prompt_tokens", report.prompt_tokens},
                     {"completion_tokens", report.completion_tokens},
                     {"termination_reason", to_string(report.reason)},
                     {"stop_note", report.stop_note},
                     {"timing", {{"elapsed_seconds", report.elapsed_seconds}}}};
  return doc.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw MissingReport(std::string("report.json is unreadable: ") + e.what());
  }
  RunReport report;
  report.final_coverage = doc.value("final_coverage", 0.0);
  for (const auto& entry : doc.value("iterations", nlohmann::json::array())) {
    IterationStats stats;
    stats.iteration = entry.value("iteration", 0);
    stats.coverage_ratio = entry.value("coverage_ratio", 0.0);
    stats.delta = entry.value("delta", 0.0);
    stats.new_covered_branches = entry.value("new_covered_branches", 0);
    stats.seeds_produced = entry.value("seeds_produced", 0);
    stats.seeds_duplicated = entry.value("seeds_duplicated", 0);
    report.iterations.push_back(stats);
  }
  report.generator_count = doc.value("generator_count", 0);
  report.seeds_produced = doc.value("seeds_produced", 0);
  report.seeds_deduped = doc.value("seeds_deduped", 0);
  report.dollars = doc.value("dollars", 0.0);
  report.prompt_tokens = doc.value("prompt_tokens", 0);
  report.completion_tokens = doc.value("completion_tokens", 0);
  const std::string reason = doc.value("termination_reason", "Aborted");
  if (reason == "WallClock") report.reason = TerminationReason::kWallClock;
  else if (reason == "Budget") report.reason = TerminationReason::kBudget;
  else if (reason == "Converged") report.reason = TerminationReason::kConverged;
  else report.reason = TerminationReason::kAborted;
  report.stop_note = doc.value("stop_note", "");
  if (doc.contains("timing")) {
    report.elapsed_seconds = doc["timing"].value("elapsed_seconds", 0.0);
  }
  return report;
}

RunReport load_report(const std::filesystem::path& workspace) {
  const auto path = workspace / "report.json";
  if (!std::filesystem::exists(path)) {
    throw MissingReport("no report.json under " + workspace.string());
  }
  return report_from_json(read_file(path));
}

std::string format_report(const RunReport& report) {
  std::ostringstream os;
  os << "branch coverage:   " << format_fixed(report.final_coverage * 100.0, 2) << "%\n"
     << "iterations:        " << report.iterations.size() << "\n"
     << "generators:        " << report.generator_count << "\n"
     << "unique seeds:      " << report.seeds_produced << " (" << report.seeds_deduped
     << " duplicates dropped)\n"
     << "cost:              $" << format_fixed(report.dollars, 4) << " (" << report.prompt_tokens
     << " prompt / " << report.completion_tokens << " completion tokens)\n"
     << "termination:       " << to_string(report.reason) << " (" << report.stop_note << ")\n";
  return os.str();
}

}  // namespace seedforge
