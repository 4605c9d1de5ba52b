#include "seedforge/context.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace seedforge {

std::size_t estimate_tokens(std::string_view text) {
  return (text.size() + 3) / 4;
}

std::vector<std::string> select_partially_covered(const DynamicCallGraph& graph) {
  std::vector<std::pair<int, std::string>> picked;
  for (const auto& [id, node] : graph.nodes()) {
    if (node.state == CoverageState::kPartiallyCovered) {
      picked.emplace_back(node.depth, id);
    }
  }
  std::sort(picked.begin(), picked.end());
  std::vector<std::string> out;
  out.reserve(picked.size());
  for (auto& [depth, id] : picked) out.push_back(std::move(id));
  return out;
}

namespace {

constexpr std::string_view kTruncationMarker = "\n... (truncated)";

std::string render_section(const ContextSection& section) {
  std::ostringstream os;
  os << "### Function: " << section.function_id << " (depth " << section.depth << ")\n"
     << section.uncovered_summary << "\n"
     << "```\n"
     << section.source_text;
  if (section.truncated) os << kTruncationMarker;
  os << "\n```\n\n";
  return os.str();
}

std::size_t section_tokens(const ContextSection& section, const TokenEstimator& estimate) {
  return estimate(render_section(section));
}

std::string uncovered_summary(const FunctionCoverage& fc) {
  const auto ids = fc.uncovered_branch_ids();
  std::ostringstream os;
  os << "Uncovered branches (" << ids.size() << " of " << fc.branches.size() << "): ";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) os << ", ";
    os << ids[i];
  }
  return os.str();
}

/// Largest source prefix whose section still fits `limit` tokens. The
/// estimator is monotone in string length, so binary search applies.
void truncate_to_fit(ContextSection& section, std::size_t limit, const TokenEstimator& estimate) {
  const std::string full = section.source_text;
  section.truncated = true;
  std::size_t lo = 0;
  std::size_t hi = full.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    section.source_text = full.substr(0, mid);
    if (section_tokens(section, estimate) <= limit) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  section.source_text = full.substr(0, lo);
  section.estimated_tokens = section_tokens(section, estimate);
}

}  // namespace

ContextSlice prune_to_budget(const std::vector<std::string>& candidates,
                             const DynamicCallGraph& graph, const ContextBudget& budget,
                             const TokenEstimator& estimator) {
  const TokenEstimator estimate =
      estimator ? estimator : TokenEstimator([](std::string_view s) { return estimate_tokens(s); });

  const std::size_t available = budget.available();
  if (available == 0) {
    throw EmptyBudget("context budget leaves no tokens for the coverage report");
  }

  std::vector<ContextSection> sections;
  sections.reserve(candidates.size());
  for (const auto& id : candidates) {
    const CallGraphNode* node = graph.find(id);
    if (node == nullptr) {
      throw std::invalid_argument("prune candidate '" + id + "' not in call graph");
    }
    ContextSection section;
    section.function_id = id;
    section.source_text = node->coverage.source_text;
    section.uncovered_summary = uncovered_summary(node->coverage);
    section.depth = node->depth;
    section.estimated_tokens = section_tokens(section, estimate);
    sections.push_back(std::move(section));
  }

  auto total = [&sections] {
    std::size_t sum = 0;
    for (const auto& s : sections) sum += s.estimated_tokens;
    return sum;
  };
  auto distinct_depths = [&sections] {
    std::set<int> depths;
    for (const auto& s : sections) depths.insert(s.depth);
    return depths;
  };

  ContextSlice slice;

  // Stage one: drop whole depth levels, deepest first.
  while (total() > available) {
    const auto depths = distinct_depths();
    if (depths.size() <= 1) break;
    const int deepest = *depths.rbegin();
    std::erase_if(sections, [deepest](const ContextSection& s) { return s.depth == deepest; });
    slice.pruned_levels += 1;
  }

  // Stage two: within the last level, drop largest-estimate functions first.
  while (total() > available && sections.size() > 1) {
    auto victim = std::max_element(
        sections.begin(), sections.end(), [](const ContextSection& a, const ContextSection& b) {
          return std::tie(a.estimated_tokens, a.function_id) <
                 std::tie(b.estimated_tokens, b.function_id);
        });
    sections.erase(victim);
  }

  // Last resort: cut the single remaining function's source to the budget.
  if (total() > available && sections.size() == 1) {
    truncate_to_fit(sections.front(), available, estimate);
    slice.truncated = true;
    if (sections.front().estimated_tokens > available) {
      // Even an empty source overflows; nothing representable fits.
      sections.clear();
      slice.truncated = false;
    }
  }

  std::sort(sections.begin(), sections.end(),
            [](const ContextSection& a, const ContextSection& b) {
              return std::tie(a.depth, a.function_id) < std::tie(b.depth, b.function_id);
            });
  slice.estimated_tokens = 0;
  for (const auto& s : sections) slice.estimated_tokens += s.estimated_tokens;
  slice.functions = std::move(sections);
  return slice;
}

std::string render_feedback_context(const ContextSlice& slice, const GeneratorScript& latest,
                                    const std::string& coverage_summary) {
  std::ostringstream os;
  os << "## Current Generator Script (version " << latest.version << "):\n"
     << "```python\n"
     << latest.source;
  if (!latest.source.empty() && latest.source.back() != '\n') os << "\n";
  os << "```\n\n"
     << "## Partially Covered Functions:\n";
  if (slice.functions.empty()) {
    os << "No partially covered functions.\n\n";
  } else {
    for (const auto& section : slice.functions) {
      os << render_section(section);
    }
  }
  os << "## Overall Coverage:\n" << coverage_summary << "\n";
  return os.str();
}

}  // namespace seedforge
