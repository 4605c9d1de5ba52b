#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "seedforge/error.hpp"

namespace seedforge {

/// Same function id reported with two different branch-id sets. Reports from
/// different builds of a target must not be merged.
struct ConflictingBranchSets : Error {
  using Error::Error;
};

struct RootUnknown : Error {
  using Error::Error;
};

struct NoBranches : Error {
  using Error::Error;
};

/// One conditional outcome inside a function. The id is opaque but stable
/// across runs of the same binary: (file, function, ordinal within export).
struct BranchRecord {
  std::string branch_id;
  bool covered = false;
};

struct FunctionCoverage {
  std::string function_id;  // qualified name + source path, e.g. "parse@src/x.c"
  std::vector<BranchRecord> branches;
  bool executed = false;
  std::string source_text;  // empty when the source could not be resolved

  std::size_t covered_count() const;
  std::vector<std::string> uncovered_branch_ids() const;
};

enum class CoverageState {
  kFullyCovered,
  kPartiallyCovered,
  kNonCovered,
};

const char* to_string(CoverageState state);

/// FullyCovered iff executed and every branch covered (an executed function
/// with zero branches counts as fully covered); PartiallyCovered iff executed
/// with at least one uncovered branch; NonCovered iff never executed.
CoverageState classify(const FunctionCoverage& fc);

using CallEdge = std::pair<std::string, std::string>;  // caller -> callee

/// Per-function branch coverage plus call edges observed for a batch of
/// seeds. The mergeable unit of feedback.
class CoverageReport {
 public:
  CoverageReport() = default;

  /// Inserts a function, or folds it into an existing entry with the same id
  /// (branch covered flags OR together, executed ORs, first non-empty source
  /// text wins). Throws ConflictingBranchSets when the id is already present
  /// with a different branch-id set, std::invalid_argument when a
  /// non-executed function claims covered branches.
  void add_function(FunctionCoverage fc);

  /// Both endpoints must already be present in the function map.
  void add_call_edge(std::string caller, std::string callee);

  bool contains(const std::string& function_id) const;
  const FunctionCoverage* find(const std::string& function_id) const;

  const std::map<std::string, FunctionCoverage>& functions() const { return functions_; }
  const std::set<CallEdge>& call_edges() const { return call_edges_; }

  std::uint64_t seed_count() const { return seed_count_; }
  void set_seed_count(std::uint64_t n) { seed_count_ = n; }

  bool empty() const { return functions_.empty(); }

 private:
  std::map<std::string, FunctionCoverage> functions_;
  std::set<CallEdge> call_edges_;
  std::uint64_t seed_count_ = 0;
};

/// Union of both reports: a branch is covered iff covered in either input,
/// executed flags OR, call edges union, seed counts sum. Throws
/// ConflictingBranchSets when a shared function id carries different
/// branch-id sets.
CoverageReport merge(const CoverageReport& a, const CoverageReport& b);

struct BranchTally {
  std::uint64_t covered = 0;
  std::uint64_t total = 0;
};

BranchTally tally_branches(const CoverageReport& report);

/// Covered branches / total branches over all functions, in [0,1].
/// Throws NoBranches when the report has no branches at all.
double total_branch_coverage(const CoverageReport& total);

struct CallGraphNode {
  FunctionCoverage coverage;
  CoverageState state = CoverageState::kNonCovered;
  int depth = 0;
};

/// Call graph restricted to functions reachable from the entry function.
/// Depth is the shortest edge-path distance from the root.
class DynamicCallGraph {
 public:
  const std::string& root() const { return root_; }
  const std::map<std::string, CallGraphNode>& nodes() const { return nodes_; }
  const std::set<CallEdge>& edges() const { return edges_; }

  bool contains(const std::string& function_id) const { return nodes_.count(function_id) > 0; }
  const CallGraphNode* find(const std::string& function_id) const;

 private:
  friend DynamicCallGraph build_call_graph(const CoverageReport&, const std::string&);

  std::string root_;
  std::map<std::string, CallGraphNode> nodes_;
  std::set<CallEdge> edges_;
};

/// BFS from `root` over the report's call edges. Throws RootUnknown when the
/// root is not in the report.
DynamicCallGraph build_call_graph(const CoverageReport& total, const std::string& root);

}  // namespace seedforge
