#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "seedforge/coverage.hpp"

namespace seedforge {

/// Guard over one input byte. A missing byte (input shorter than the index)
/// evaluates to false.
struct BytePredicate {
  enum class Op { kEq, kNe, kLt, kLe, kGt, kGe };

  std::size_t byte_index = 0;
  Op op = Op::kEq;
  std::uint8_t value = 0;

  bool eval(std::string_view input) const;
  std::string render() const;
};

struct SyntheticStatement;

struct SyntheticBranch {
  BytePredicate predicate;
  int site = 0;  // pre-order ordinal within the owning function
  std::vector<SyntheticStatement> then_body;
  std::vector<SyntheticStatement> else_body;
};

struct SyntheticCall {
  std::string callee;
};

struct SyntheticStatement {
  // Exactly one is set.
  std::unique_ptr<SyntheticBranch> branch;
  std::unique_ptr<SyntheticCall> call;
};

struct SyntheticFunction {
  std::string id;
  std::vector<SyntheticStatement> body;
  int branch_sites = 0;
  std::vector<std::string> callees;  // every call statement, in document order
  std::string source_text;           // rendered pseudo-C
};

/// A small interpreted fuzzing target with exact coverage bookkeeping: byte
/// guards are the branches, call statements the edges. Per seed, each
/// function body is walked at most once (execution is input-determined, so
/// re-walks cannot cover anything new); this also makes call cycles safe.
///
/// Program document (JSON):
///   {"entry": "fn", "functions": [{"id": "fn", "body": [STMT...]}, ...]}
///   STMT := {"call": "fn"}
///         | {"if": {"byte": N, "op": "eq|ne|lt|le|gt|ge", "value": 0-255},
///            "then": [STMT...], "else": [STMT...]}
class SyntheticProgram {
 public:
  static SyntheticProgram parse(std::string_view json_text);

  const std::string& entry() const { return entry_; }
  const std::map<std::string, SyntheticFunction>& functions() const { return functions_; }

  struct Observation {
    std::set<std::string> executed;
    /// (function id, branch site, taken-arm is the true arm)
    std::set<std::tuple<std::string, int, bool>> covered_arms;
  };

  Observation execute(std::string_view input) const;

  /// Exact merged coverage for a batch of inputs: every program function is
  /// present; call edges are those of functions that executed at least once.
  CoverageReport run_inputs(const std::vector<std::string>& inputs) const;

  std::string render_source(const std::string& function_id) const;

 private:
  std::string entry_;
  std::map<std::string, SyntheticFunction> functions_;
};

}  // namespace seedforge
