#pragma once

// Randomized model builders shared by the property tests.

#include <random>
#include <string>
#include <vector>

#include "seedforge/context.hpp"
#include "seedforge/coverage.hpp"

namespace seedforge::testutil {

/// Reports drawn from a fixed universe of functions (f0..f11, branch counts
/// fixed per function) so any two of them are merge-compatible.
inline CoverageReport random_report(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count_dist(1, 12);
  std::bernoulli_distribution coin(0.5);

  CoverageReport report;
  const int function_count = count_dist(rng);
  std::vector<std::string> present;
  for (int i = 0; i < function_count; ++i) {
    const std::string id = "f" + std::to_string(i);
    FunctionCoverage fc;
    fc.function_id = id;
    fc.executed = coin(rng);
    const int branch_count = (i * 3) % 5;  // fixed per function id
    for (int b = 0; b < branch_count; ++b) {
      fc.branches.push_back({"b" + std::to_string(b), fc.executed && coin(rng)});
    }
    report.add_function(std::move(fc));
    present.push_back(id);
  }
  std::uniform_int_distribution<std::size_t> pick(0, present.size() - 1);
  const int edge_count = count_dist(rng) / 2;
  for (int e = 0; e < edge_count; ++e) {
    report.add_call_edge(present[pick(rng)], present[pick(rng)]);
  }
  report.set_seed_count(count_dist(rng));
  return report;
}

/// Coverage ratio of `report` computed over the union branch universe of
/// `universe` (branches absent from `report` count uncovered).
inline double coverage_over_universe(const CoverageReport& report, const CoverageReport& universe) {
  std::uint64_t total = 0;
  std::uint64_t covered = 0;
  for (const auto& [id, fc] : universe.functions()) {
    total += fc.branches.size();
    const FunctionCoverage* mine = report.find(id);
    if (mine != nullptr) covered += mine->covered_count();
  }
  return total == 0 ? 0.0 : static_cast<double>(covered) / static_cast<double>(total);
}

struct RandomGraph {
  CoverageReport report;
  std::string root = "n0_0";
};

/// Layered random call graph: every node at depth d has one parent at depth
/// d-1, every node executed and partially covered, source sizes random.
inline RandomGraph random_layered_graph(std::mt19937_64& rng, int max_depth = 5,
                                        int max_width = 4, std::size_t max_source_chars = 600) {
  std::uniform_int_distribution<int> depth_dist(1, max_depth);
  std::uniform_int_distribution<int> width_dist(1, max_width);
  std::uniform_int_distribution<std::size_t> source_dist(8, max_source_chars);
  std::bernoulli_distribution coin(0.5);

  RandomGraph out;
  const int depth = depth_dist(rng);
  std::vector<std::vector<std::string>> levels;
  for (int d = 0; d < depth; ++d) {
    const int width = d == 0 ? 1 : width_dist(rng);
    std::vector<std::string> level;
    for (int i = 0; i < width; ++i) {
      const std::string id = "n" + std::to_string(d) + "_" + std::to_string(i);
      FunctionCoverage fc;
      fc.function_id = id;
      fc.executed = true;
      fc.branches.push_back({"b0", true});
      fc.branches.push_back({"b1", false});  // keeps every node partially covered
      if (coin(rng)) fc.branches.push_back({"b2", coin(rng)});
      fc.source_text = std::string(source_dist(rng), 'x');
      out.report.add_function(std::move(fc));
      level.push_back(id);
    }
    levels.push_back(std::move(level));
  }
  for (std::size_t d = 1; d < levels.size(); ++d) {
    std::uniform_int_distribution<std::size_t> parent(0, levels[d - 1].size() - 1);
    for (const auto& id : levels[d]) {
      out.report.add_call_edge(levels[d - 1][parent(rng)], id);
    }
  }
  out.report.set_seed_count(1);
  return out;
}

}  // namespace seedforge::testutil
