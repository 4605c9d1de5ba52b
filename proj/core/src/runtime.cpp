#include "seedforge/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

#include "json.hpp"

#include "seedforge/subprocess.hpp"
#include "seedforge/util.hpp"

namespace seedforge {

const char* to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::kParseFailure: return "parse-failure";
    case FailureKind::kExecFailure: return "exec-failure";
    case FailureKind::kEmptyOutput: return "empty-output";
  }
  return "unknown";
}

std::string cap_evidence(std::string text) {
  if (text.size() > kEvidenceCapBytes) {
    text.erase(0, text.size() - kEvidenceCapBytes);
  }
  return text;
}

namespace {

/// Python tracebacks end with the cause, so the tail is what matters.
std::string extract_stack_trace(const std::string& stderr_text) {
  const std::size_t pos = stderr_text.find("Traceback (most recent call last):");
  if (pos == std::string::npos) return {};
  return stderr_text.substr(pos);
}

}  // namespace

FailureEvidence make_parse_failure(std::string reply_text) {
  FailureEvidence evidence;
  evidence.kind = FailureKind::kParseFailure;
  evidence.stderr_text = cap_evidence(std::move(reply_text));
  return evidence;
}

FailureEvidence make_exec_failure(std::string stderr_text, std::optional<int> exit_code,
                                  bool timed_out) {
  FailureEvidence evidence;
  evidence.kind = FailureKind::kExecFailure;
  evidence.stack_trace = cap_evidence(extract_stack_trace(stderr_text));
  evidence.stderr_text = cap_evidence(std::move(stderr_text));
  evidence.exit_code = exit_code;
  evidence.timed_out = timed_out;
  return evidence;
}

FailureEvidence make_empty_output(std::string stderr_text) {
  FailureEvidence evidence;
  evidence.kind = FailureKind::kEmptyOutput;
  evidence.stderr_text = cap_evidence(std::move(stderr_text));
  return evidence;
}

SeedCorpus::SeedCorpus(std::filesystem::path directory) : directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
  load_manifest();
}

void SeedCorpus::load_manifest() {
  const auto manifest = directory_ / "manifest.json";
  if (!std::filesystem::exists(manifest)) return;
  nlohmann::json doc = nlohmann::json::parse(read_file(manifest));
  for (const auto& entry : doc.at("seeds")) {
    SeedEntry seed;
    seed.file_name = entry.at("file").get<std::string>();
    seed.byte_length = entry.at("bytes").get<std::uint64_t>();
    seed.producer_version = entry.at("producer_version").get<int>();
    entries_.emplace(entry.at("hash").get<std::string>(), std::move(seed));
  }
}

void SeedCorpus::save_manifest() const {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& [hash, entry] : entries_) {  // map order keeps this deterministic
    seeds.push_back({{"hash", hash},
                     {"file", entry.file_name},
                     {"bytes", entry.byte_length},
                     {"producer_version", entry.producer_version}});
  }
  nlohmann::json doc{{"seeds", std::move(seeds)}};
  write_file(directory_ / "manifest.json", doc.dump(2) + "\n");
}

SeedCorpus::AddResult SeedCorpus::add_bytes(std::string_view bytes, int producer_version) {
  const std::string hash = sha256_hex(bytes);
  auto it = entries_.find(hash);
  if (it != entries_.end()) {
    return {false, hash};
  }
  SeedEntry entry;
  entry.file_name = hash.substr(0, 16) + ".bin";
  entry.byte_length = bytes.size();
  entry.producer_version = producer_version;
  write_file(directory_ / entry.file_name, bytes);
  entries_.emplace(hash, std::move(entry));
  return {true, hash};
}

std::filesystem::path SeedCorpus::path_for(const std::string& hash) const {
  auto it = entries_.find(hash);
  if (it == entries_.end()) {
    throw std::invalid_argument("seed hash not in corpus: " + hash);
  }
  return directory_ / it->second.file_name;
}

std::vector<std::filesystem::path> SeedCorpus::files() const {
  std::vector<std::filesystem::path> out;
  out.reserve(entries_.size());
  for (const auto& [hash, entry] : entries_) {
    out.push_back(directory_ / entry.file_name);
  }
  return out;
}

GeneratorRunner::GeneratorRunner(ExecutionPolicy policy, std::filesystem::path scratch_root)
    : policy_(std::move(policy)), scratch_root_(std::move(scratch_root)) {
  if (policy_.seeds_per_generator <= 0) {
    throw std::invalid_argument("seeds_per_generator must be positive");
  }
  if (policy_.batch_timeout.count() <= 0) {
    throw std::invalid_argument("batch_timeout must be positive");
  }
  std::filesystem::create_directories(scratch_root_);
  if (policy_.isolate_network && !sandbox_supports_network_isolation()) {
    policy_.isolate_network = false;
  }
}

namespace {

struct InvocationOutcome {
  enum class Status { kOk, kExecFailure, kEmptyOutput, kTimeout, kOversize } status;
  std::string seed_bytes;
  SpawnResult spawn;
};

InvocationOutcome run_invocation(const ExecutionPolicy& policy,
                                 const std::filesystem::path& script_path,
                                 const std::filesystem::path& invocation_dir,
                                 std::chrono::milliseconds timeout) {
  std::filesystem::create_directories(invocation_dir);
  const auto output_path = invocation_dir / "out.bin";

  SpawnOptions options;
  options.argv = policy.interpreter_argv;
  options.argv.push_back(script_path.string());
  options.argv.push_back(output_path.string());
  options.cwd = invocation_dir;
  options.timeout = timeout;
  options.isolate_network = policy.isolate_network;
  if (policy.entropy_file) {
    options.extra_env.emplace_back("SEEDFORGE_ENTROPY_FILE", policy.entropy_file->string());
  }

  InvocationOutcome outcome;
  outcome.spawn = run_process(options);

  if (outcome.spawn.timed_out) {
    outcome.status = InvocationOutcome::Status::kTimeout;
    return outcome;
  }
  if (outcome.spawn.signaled || outcome.spawn.exit_code != 0) {
    outcome.status = InvocationOutcome::Status::kExecFailure;
    return outcome;
  }
  std::error_code ec;
  const auto size = std::filesystem::file_size(output_path, ec);
  if (ec || size == 0) {
    outcome.status = InvocationOutcome::Status::kEmptyOutput;
    return outcome;
  }
  if (size > policy.max_seed_bytes) {
    outcome.status = InvocationOutcome::Status::kOversize;
    return outcome;
  }
  outcome.seed_bytes = read_file(output_path);
  outcome.status = InvocationOutcome::Status::kOk;
  return outcome;
}

FailureEvidence evidence_from(const InvocationOutcome& outcome,
                              std::chrono::milliseconds timeout) {
  switch (outcome.status) {
    case InvocationOutcome::Status::kTimeout: {
      std::string text = "generator timed out after " + std::to_string(timeout.count()) +
                         " ms and was killed";
      if (!outcome.spawn.stderr_text.empty()) {
        text += "\npartial stderr:\n" + outcome.spawn.stderr_text;
      }
      return make_exec_failure(std::move(text), std::nullopt, /*timed_out=*/true);
    }
    case InvocationOutcome::Status::kExecFailure: {
      std::optional<int> code;
      std::string text = outcome.spawn.stderr_text;
      if (outcome.spawn.signaled) {
        text += "\nprocess killed by signal " + std::to_string(outcome.spawn.term_signal);
      } else {
        code = outcome.spawn.exit_code;
      }
      return make_exec_failure(std::move(text), code);
    }
    case InvocationOutcome::Status::kOversize:
      return make_empty_output("generator output exceeded the per-seed byte cap");
    case InvocationOutcome::Status::kEmptyOutput:
    default:
      return make_empty_output(outcome.spawn.stderr_text);
  }
}

}  // namespace

std::variant<GeneratorScript, FailureEvidence> GeneratorRunner::validate(GeneratorScript script) {
  const auto dir = scratch_root_ / ("validate_v" + std::to_string(script.version));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto script_path = dir / "generator.py";
  write_file(script_path, script.source);

  const auto timeout = policy_.per_invocation_timeout.count() > 0 ? policy_.per_invocation_timeout
                                                                  : policy_.batch_timeout;
  const InvocationOutcome outcome = run_invocation(policy_, script_path, dir / "run", timeout);
  std::filesystem::remove_all(dir);

  if (outcome.status == InvocationOutcome::Status::kOk ||
      outcome.status == InvocationOutcome::Status::kOversize) {
    // A dry run that produces an oversize seed still proves the script runs.
    script.validated = true;
    return script;
  }
  return evidence_from(outcome, timeout);
}

BatchResult GeneratorRunner::produce_seeds(const GeneratorScript& script, SeedCorpus& corpus) {
  if (!script.validated) {
    throw std::invalid_argument("produce_seeds requires a validated script");
  }

  const auto batch_dir = scratch_root_ / ("batch_v" + std::to_string(script.version));
  std::filesystem::remove_all(batch_dir);
  std::filesystem::create_directories(batch_dir);
  const auto script_path = batch_dir / "generator.py";
  write_file(script_path, script.source);

  const auto deadline = std::chrono::steady_clock::now() + policy_.batch_timeout;

  BatchResult result;
  std::optional<InvocationOutcome> last_failure;
  std::atomic<int> next_ordinal{0};
  std::mutex state_mutex;

  auto worker = [&] {
    for (;;) {
      const int ordinal = next_ordinal.fetch_add(1);
      if (ordinal >= policy_.seeds_per_generator) return;

      const auto now = std::chrono::steady_clock::now();
      if (now >= deadline) {
        std::lock_guard lock(state_mutex);
        result.timed_out = true;
        return;
      }
      auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
      if (policy_.per_invocation_timeout.count() > 0) {
        remaining = std::min(remaining, policy_.per_invocation_timeout);
      }

      const auto invocation_dir = batch_dir / ("inv_" + std::to_string(ordinal));
      InvocationOutcome outcome = run_invocation(policy_, script_path, invocation_dir, remaining);
      std::error_code ec;
      std::filesystem::remove_all(invocation_dir, ec);

      std::lock_guard lock(state_mutex);
      switch (outcome.status) {
        case InvocationOutcome::Status::kOk: {
          const auto added = corpus.add_bytes(outcome.seed_bytes, script.version);
          if (added.inserted) {
            result.produced += 1;
            result.new_hashes.push_back(added.hash);
          } else {
            result.duplicates += 1;
          }
          break;
        }
        case InvocationOutcome::Status::kOversize:
          result.oversize += 1;
          last_failure = std::move(outcome);
          break;
        case InvocationOutcome::Status::kTimeout:
          result.failures += 1;
          result.timed_out = true;
          last_failure = std::move(outcome);
          break;
        default:
          result.failures += 1;
          last_failure = std::move(outcome);
          break;
      }
    }
  };

  const int thread_count = std::max(1, std::min(policy_.parallelism, policy_.seeds_per_generator));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(thread_count));
  for (int i = 0; i < thread_count; ++i) threads.emplace_back(worker);
  for (auto& thread : threads) thread.join();

  std::error_code ec;
  std::filesystem::remove_all(batch_dir, ec);
  corpus.save_manifest();

  if (result.produced + result.duplicates == 0) {
    if (last_failure) {
      result.evidence = evidence_from(*last_failure, policy_.batch_timeout);
    } else {
      result.evidence = make_empty_output("batch produced no usable seeds");
    }
  }
  return result;
}

}  // namespace seedforge
