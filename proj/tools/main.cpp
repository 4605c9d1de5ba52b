// seedforge: LLM-driven synthesis of test-case generators, guided by branch
// coverage on the target's dynamic call graph.

#include <filesystem>
#include <iostream>
#include <map>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "seedforge/orchestrator.hpp"
#include "seedforge/util.hpp"

namespace {

using seedforge::ProviderProfile;

std::map<std::string, ProviderProfile> builtin_profiles() {
  std::map<std::string, ProviderProfile> profiles;
  // Context windows per model family; prices are editable configuration
  // (see --models) and default to current public list prices.
  profiles["gpt-4o"] =
      ProviderProfile{"gpt-4o", 128000, 2.50, 10.00, "https://api.openai.com", "OPENAI_API_KEY", {}};
  profiles["gpt-3.5-turbo"] = ProviderProfile{
      "gpt-3.5-turbo", 16385, 0.50, 1.50, "https://api.openai.com", "OPENAI_API_KEY", {}};
  profiles["claude-3.5-sonnet"] = ProviderProfile{"claude-3.5-sonnet", 200000, 3.00, 15.00,
                                                  "https://api.openai.com", "OPENAI_API_KEY", {}};
  return profiles;
}

ProviderProfile resolve_profile(const std::string& model, const std::string& models_file) {
  auto profiles = builtin_profiles();
  if (!models_file.empty()) {
    nlohmann::json doc = nlohmann::json::parse(seedforge::read_file(models_file));
    for (const auto& [name, entry] : doc.items()) {
      ProviderProfile profile = profiles.count(name) ? profiles[name] : ProviderProfile{};
      profile.model = name;
      profile.context_window_tokens =
          entry.value("context_window_tokens", profile.context_window_tokens);
      profile.prompt_price_per_mtok =
          entry.value("prompt_price_per_mtok", profile.prompt_price_per_mtok);
      profile.completion_price_per_mtok =
          entry.value("completion_price_per_mtok", profile.completion_price_per_mtok);
      profile.base_url = entry.value("base_url", profile.base_url);
      profile.api_key_env = entry.value("api_key_env", profile.api_key_env);
      if (entry.contains("temperature")) profile.temperature = entry["temperature"].get<double>();
      profiles[name] = profile;
    }
  }
  auto it = profiles.find(model);
  if (it == profiles.end()) {
    throw seedforge::ConfigError("unknown model '" + model +
                                 "'; add it to a --models file to define a profile");
  }
  return it->second;
}

struct RunOptions {
  std::vector<std::string> targets;
  std::string entry = "LLVMFuzzerTestOneInput";
  std::string model = "gpt-4o";
  std::string models_file;
  double wall_limit_s = 1800.0;
  double cost_limit = 0.5;
  int seeds_per_gen = 1000;
  double batch_timeout_s = 30.0;
  std::string workspace = "seedforge-out";
  std::string replay;
  int jobs = 1;
  int parallelism = 4;
  std::size_t reserved_tokens = 4096;
  int max_iterations = 0;
  bool converge_early = false;
  bool no_sandbox = false;
};

seedforge::RunConfig make_config(const RunOptions& options, const std::string& target_file,
                                 const std::filesystem::path& workspace) {
  seedforge::RunConfig config;
  config.target = seedforge::TargetSpec::from_file(target_file);
  config.target.entry = options.entry;
  config.profile = resolve_profile(options.model, options.models_file);
  config.wall_limit =
      std::chrono::milliseconds(static_cast<std::int64_t>(options.wall_limit_s * 1000.0));
  config.soft_limit_dollars = options.cost_limit;
  config.policy.seeds_per_generator = options.seeds_per_gen;
  config.policy.batch_timeout =
      std::chrono::milliseconds(static_cast<std::int64_t>(options.batch_timeout_s * 1000.0));
  config.policy.parallelism = options.parallelism;
  config.policy.isolate_network = !options.no_sandbox;
  config.workspace = workspace;
  if (!options.replay.empty()) config.replay_transcript = options.replay;
  config.reserved_tokens = options.reserved_tokens;
  config.max_iterations = options.max_iterations;
  config.converge_early = options.converge_early;
  return config;
}

int run_sessions(const RunOptions& options) {
  if (options.targets.empty()) {
    std::cerr << "seedforge run: at least one --target is required\n";
    return 2;
  }

  struct Job {
    std::string target_file;
    std::filesystem::path workspace;
    int exit_code = 1;
    std::string error;
  };
  std::vector<Job> jobs;
  for (const auto& target_file : options.targets) {
    Job job;
    job.target_file = target_file;
    if (options.targets.size() == 1) {
      job.workspace = options.workspace;
    } else {
      job.workspace = std::filesystem::path(options.workspace) /
                      std::filesystem::path(target_file).stem();
    }
    jobs.push_back(std::move(job));
  }

  auto run_one = [&options](Job& job) {
    try {
      const auto config = make_config(options, job.target_file, job.workspace);
      const auto report = seedforge::run(config);
      job.exit_code = report.exit_code();
      std::ostringstream os;
      os << "== " << job.target_file << " -> " << job.workspace.string() << "\n"
         << seedforge::format_report(report);
      std::cout << os.str();
    } catch (const std::exception& e) {
      job.error = e.what();
      job.exit_code = 2;
      std::cerr << "seedforge run: " << job.target_file << ": " << e.what() << "\n";
    }
  };

  const int parallel = std::max(1, std::min<int>(options.jobs, static_cast<int>(jobs.size())));
  if (parallel == 1) {
    for (auto& job : jobs) run_one(job);
  } else {
    std::vector<std::thread> workers;
    std::atomic<std::size_t> next{0};
    for (int i = 0; i < parallel; ++i) {
      workers.emplace_back([&] {
        for (;;) {
          const std::size_t index = next.fetch_add(1);
          if (index >= jobs.size()) return;
          run_one(jobs[index]);
        }
      });
    }
    for (auto& worker : workers) worker.join();
  }

  int exit_code = 0;
  for (const auto& job : jobs) exit_code = std::max(exit_code, job.exit_code);
  return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seedforge: coverage-guided LLM synthesis of seed generators"};
  app.require_subcommand(1);

  RunOptions options;
  auto* run_cmd = app.add_subcommand("run", "Run one session per target harness");
  run_cmd->add_option("--target", options.targets,
                      "Target spec JSON file (repeatable for multiple harnesses)")
      ->required();
  run_cmd->add_option("--entry", options.entry, "Harness entry function name");
  run_cmd->add_option("--model", options.model, "Model profile name");
  run_cmd->add_option("--models", options.models_file,
                      "JSON file overriding/adding model profiles");
  run_cmd->add_option("--wall-limit", options.wall_limit_s, "Wall-clock limit per session, seconds");
  run_cmd->add_option("--cost-limit", options.cost_limit, "Soft dollar budget per session");
  run_cmd->add_option("--seeds-per-gen", options.seeds_per_gen, "Seeds produced per generator");
  run_cmd->add_option("--batch-timeout", options.batch_timeout_s,
                      "Generator batch timeout, seconds");
  run_cmd->add_option("--workspace", options.workspace, "Artifact directory");
  run_cmd->add_option("--replay", options.replay,
                      "Replay transcript (activates the scripted provider)");
  run_cmd->add_option("--jobs", options.jobs, "Parallel sessions when multiple targets are given");
  run_cmd->add_option("--exec-parallelism", options.parallelism,
                      "Concurrent generator invocations within a batch");
  run_cmd->add_option("--reserved-tokens", options.reserved_tokens,
                      "Context tokens held back for instructions and reply");
  run_cmd->add_option("--max-iterations", options.max_iterations,
                      "Stop after N iterations (0 = budgets only)");
  run_cmd->add_flag("--converge-early", options.converge_early,
                    "Stop after two iterations without new coverage");
  run_cmd->add_flag("--no-sandbox", options.no_sandbox,
                    "Disable network isolation for generator scripts");
  run_cmd->set_config("--config", "", "Config file (INI/TOML, keys match long flags)");

  std::string report_workspace;
  auto* report_cmd = app.add_subcommand("report", "Summarize a completed workspace");
  report_cmd->add_option("workspace", report_workspace, "Workspace directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return run_sessions(options);
    }
    if (report_cmd->parsed()) {
      const auto report = seedforge::load_report(report_workspace);
      std::cout << seedforge::format_report(report);
      return 0;
    }
  } catch (const seedforge::MissingReport& e) {
    std::cerr << "seedforge report: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "seedforge: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
