#pragma once

// Scriptable in-memory TargetPort: no processes, no filesystem. Used to
// drive the agent state machine deterministically and fast.

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "seedforge/agent.hpp"

namespace seedforge::testutil {

class FakePort : public TargetPort {
 public:
  /// Outcome of the next validate() call; defaults to success.
  std::deque<std::optional<FailureEvidence>> validate_failures;
  /// Outcome of the next produce_seeds() call; defaults to a 10-seed batch.
  std::deque<std::optional<FailureEvidence>> batch_failures;
  /// Coverage reports returned by successive collect_coverage() calls; the
  /// last one repeats once the queue is exhausted.
  std::vector<CoverageReport> reports;
  std::string harness = "int LLVMFuzzerTestOneInput(const uint8_t *data, size_t size) { return 0; }";
  std::string entry_id = "LLVMFuzzerTestOneInput";

  int validate_calls = 0;
  int batch_calls = 0;
  int collect_calls = 0;

  std::variant<GeneratorScript, FailureEvidence> validate(const GeneratorScript& script) override {
    validate_calls += 1;
    if (!validate_failures.empty()) {
      auto next = std::move(validate_failures.front());
      validate_failures.pop_front();
      if (next) return *next;
    }
    GeneratorScript validated = script;
    validated.validated = true;
    return validated;
  }

  BatchResult produce_seeds(const GeneratorScript&) override {
    batch_calls += 1;
    BatchResult batch;
    if (!batch_failures.empty()) {
      auto next = std::move(batch_failures.front());
      batch_failures.pop_front();
      if (next) {
        batch.evidence = *next;
        return batch;
      }
    }
    batch.produced = 10;
    batch.duplicates = 2;
    for (int i = 0; i < batch.produced; ++i) {
      batch.new_hashes.push_back("hash" + std::to_string(batch_calls) + "_" + std::to_string(i));
    }
    return batch;
  }

  CoverageReport collect_coverage(const std::vector<std::string>&) override {
    const std::size_t index = static_cast<std::size_t>(collect_calls);
    collect_calls += 1;
    if (reports.empty()) return CoverageReport{};
    return reports[std::min(index, reports.size() - 1)];
  }

  std::string harness_source() override { return harness; }
  std::string entry_snippet() override { return harness; }

  std::string entry_function_id(const CoverageReport& total) override {
    return total.contains(entry_id) ? entry_id : std::string{};
  }
};

/// A report over the fixed universe {entry with `total_branches` branches},
/// with the first `covered` branches covered.
inline CoverageReport simple_report(const std::string& entry_id, int total_branches, int covered) {
  CoverageReport report;
  FunctionCoverage fc;
  fc.function_id = entry_id;
  fc.executed = true;
  fc.source_text = "void " + entry_id + "() { }";
  for (int i = 0; i < total_branches; ++i) {
    fc.branches.push_back({"b" + std::to_string(i), i < covered});
  }
  report.add_function(std::move(fc));
  report.set_seed_count(10);
  return report;
}

}  // namespace seedforge::testutil
