#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "seedforge/coverage.hpp"
#include "seedforge/error.hpp"
#include "seedforge/script.hpp"

namespace seedforge {

struct EmptyBudget : Error {
  using Error::Error;
};

/// Token space available for the coverage feedback, after holding back room
/// for instructions and the expected response.
struct ContextBudget {
  std::size_t max_tokens = 128000;
  std::size_t reserved_tokens = 4096;

  std::size_t available() const {
    return reserved_tokens < max_tokens ? max_tokens - reserved_tokens : 0;
  }
};

/// Deterministic upper-bound token estimate, pluggable per provider.
using TokenEstimator = std::function<std::size_t(std::string_view)>;

/// Default heuristic: ceil(character count / 4).
std::size_t estimate_tokens(std::string_view text);

struct ContextSection {
  std::string function_id;
  std::string source_text;
  std::string uncovered_summary;
  int depth = 0;
  std::size_t estimated_tokens = 0;
  bool truncated = false;
};

struct ContextSlice {
  std::vector<ContextSection> functions;
  std::size_t estimated_tokens = 0;
  int pruned_levels = 0;
  bool truncated = false;  // some function's source was cut to fit
};

/// Exactly the partially covered nodes, ordered by (depth ascending,
/// function_id lexicographic).
std::vector<std::string> select_partially_covered(const DynamicCallGraph& graph);

/// Two-stage pruning: if the candidates fit, keep them all; otherwise drop
/// whole depth levels deepest-first until the estimate fits or one level
/// remains, then drop largest-estimate functions within that level, and as a
/// last resort truncate the one remaining function's source to the budget.
ContextSlice prune_to_budget(const std::vector<std::string>& candidates,
                             const DynamicCallGraph& graph, const ContextBudget& budget,
                             const TokenEstimator& estimator = {});

/// Fills the {coverage_report} slot of the summary prompt: the latest
/// generator, one section per partially covered function with uncovered
/// branch markers, then the overall coverage line. Byte-deterministic.
std::string render_feedback_context(const ContextSlice& slice, const GeneratorScript& latest,
                                    const std::string& coverage_summary);

}  // namespace seedforge
