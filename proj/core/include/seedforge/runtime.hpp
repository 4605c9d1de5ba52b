#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "seedforge/evidence.hpp"
#include "seedforge/script.hpp"

namespace seedforge {

/// Budgets and isolation settings for running generator scripts.
struct ExecutionPolicy {
  int seeds_per_generator = 1000;
  std::chrono::milliseconds batch_timeout{30'000};
  /// 0 means derived: an invocation may use whatever remains of the batch.
  std::chrono::milliseconds per_invocation_timeout{0};
  std::uint64_t max_seed_bytes = 1 << 20;
  int parallelism = 4;
  bool isolate_network = true;  // downgraded automatically when unsupported
  /// Exported to the child as SEEDFORGE_ENTROPY_FILE for reproducible runs;
  /// cooperative scripts may read it instead of /dev/urandom.
  std::optional<std::filesystem::path> entropy_file;
  std::vector<std::string> interpreter_argv{"python3"};
};

struct SeedEntry {
  std::string file_name;
  std::uint64_t byte_length = 0;
  int producer_version = 0;
};

/// Content-addressed seed store: one file per unique seed, named by hash
/// prefix, plus a manifest mapping hash to producer version.
class SeedCorpus {
 public:
  explicit SeedCorpus(std::filesystem::path directory);

  struct AddResult {
    bool inserted = false;
    std::string hash;
  };

  AddResult add_bytes(std::string_view bytes, int producer_version);

  const std::map<std::string, SeedEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const std::filesystem::path& directory() const { return directory_; }

  std::filesystem::path path_for(const std::string& hash) const;
  std::vector<std::filesystem::path> files() const;

  void save_manifest() const;

 private:
  void load_manifest();

  std::filesystem::path directory_;
  std::map<std::string, SeedEntry> entries_;
};

struct BatchResult {
  int produced = 0;    // newly inserted unique seeds
  int duplicates = 0;  // valid outputs already in the corpus
  int oversize = 0;    // rejected by max_seed_bytes
  int failures = 0;    // invocations that crashed or timed out
  bool timed_out = false;
  std::vector<std::string> new_hashes;
  /// Set when not a single invocation yielded a usable seed.
  std::optional<FailureEvidence> evidence;
};

/// Executes generator scripts in throwaway working directories under the
/// child-process contract: argv = [interpreter..., script, output_path],
/// stdin closed, stdout/stderr captured.
class GeneratorRunner {
 public:
  GeneratorRunner(ExecutionPolicy policy, std::filesystem::path scratch_root);

  /// One dry run with a fresh output path. Success iff exit 0 and the output
  /// file exists non-empty; returns the script marked validated.
  std::variant<GeneratorScript, FailureEvidence> validate(GeneratorScript script);

  /// Invokes the script up to seeds_per_generator times, deduplicating into
  /// the corpus, stopping early at batch_timeout. Per-invocation failures
  /// are counted and skipped.
  BatchResult produce_seeds(const GeneratorScript& script, SeedCorpus& corpus);

  const ExecutionPolicy& policy() const { return policy_; }

 private:
  ExecutionPolicy policy_;
  std::filesystem::path scratch_root_;
  std::mutex corpus_mutex_;
};

}  // namespace seedforge
