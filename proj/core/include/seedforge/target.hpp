#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "seedforge/coverage.hpp"
#include "seedforge/error.hpp"
#include "seedforge/runtime.hpp"
#include "seedforge/synthetic.hpp"

namespace seedforge {

struct BuildFailure : Error {
  using Error::Error;
};

struct MalformedExport : Error {
  using Error::Error;
};

enum class TargetKind { kToolchain, kSynthetic };

struct ToolPaths {
  std::string clang = "clang";
  std::string llvm_profdata = "llvm-profdata";
  std::string llvm_cov = "llvm-cov";
};

/// Description of the fuzzing target. Toolchain targets are built by the
/// given command into an instrumented binary; synthetic targets are
/// interpreted in-process with exact coverage bookkeeping.
struct TargetSpec {
  TargetKind kind = TargetKind::kSynthetic;
  std::string entry = "LLVMFuzzerTestOneInput";

  // synthetic
  std::string program_json;  // inline program document

  // toolchain
  std::filesystem::path source_root;
  std::string build_cmd;  // must produce `binary` with branch instrumentation
  std::filesystem::path binary;
  std::filesystem::path harness_file;
  ToolPaths tools;
  std::chrono::milliseconds seed_run_timeout{5000};

  static TargetSpec from_file(const std::filesystem::path& spec_file);
  static TargetSpec from_json(std::string_view json_text,
                              const std::filesystem::path& base_dir = {});
};

/// A buildable/loaded target that can execute a seed corpus and report
/// branch coverage with call edges and source snippets.
class BuiltTarget {
 public:
  /// Crashing seeds are copied into crashes_dir and recorded, never fatal.
  CoverageReport run_seed_files(const std::vector<std::filesystem::path>& seeds,
                                const std::filesystem::path& crashes_dir);

  /// Source handed to the {harness_code} prompt slot.
  std::string harness_source() const;

  const TargetSpec& spec() const { return spec_; }
  const std::vector<std::string>& crashing_seeds() const { return crashing_seeds_; }
  bool was_cached() const { return cached_; }

  /// The function id of the configured entry inside reports this target
  /// produces (resolves the bare entry name against report ids).
  std::string entry_function_id(const CoverageReport& report) const;

 private:
  friend BuiltTarget build(const TargetSpec&);

  TargetSpec spec_;
  std::unique_ptr<SyntheticProgram> synthetic_;
  bool cached_ = false;
  std::vector<std::string> crashing_seeds_;
};

/// Compiles/instruments a toolchain target (reusing the cached artifact when
/// the command and sources are unchanged) or loads a synthetic program.
/// Throws BuildFailure with the captured build log.
BuiltTarget build(const TargetSpec& spec);

/// Runs every corpus seed through the target. Pre: corpus non-empty.
CoverageReport run_corpus(BuiltTarget& target, const SeedCorpus& corpus,
                          const std::filesystem::path& crashes_dir);

/// Normalizes a coverage export document into a CoverageReport. Accepts the
/// interchange schema produced by serialize_report() and the llvm-cov JSON
/// export (type "llvm.coverage.json.export"). Source snippets are resolved
/// relative to `source_base` when given; failures degrade to empty text.
CoverageReport ingest_coverage_export(std::string_view raw,
                                      const std::filesystem::path& source_base = {});

/// Interchange schema:
///   {"functions": [{"id", "file", "executed",
///                   "branches": [{"id", "covered"}], "source"?}],
///    "edges": [[caller, callee]], "seed_count": n}
std::string serialize_report(const CoverageReport& report);

/// Static call-edge approximation: scans each function's source snippet for
/// calls to other functions known to the report. Stands in for dynamic call
/// instrumentation; edges start only from executed functions.
void approximate_call_edges(CoverageReport& report);

/// Brace-matched extraction of one function definition from a source file.
/// Returns the block from the signature line through the closing brace, or
/// empty when the name is not found.
std::string extract_function_snippet(std::string_view source, std::string_view function_name);

}  // namespace seedforge
