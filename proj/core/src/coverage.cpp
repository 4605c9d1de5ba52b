#include "seedforge/coverage.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace seedforge {

std::size_t FunctionCoverage::covered_count() const {
  return static_cast<std::size_t>(
      std::count_if(branches.begin(), branches.end(),
                    [](const BranchRecord& b) { return b.covered; }));
}

std::vector<std::string> FunctionCoverage::uncovered_branch_ids() const {
  std::vector<std::string> ids;
  for (const auto& b : branches) {
    if (!b.covered) ids.push_back(b.branch_id);
  }
  return ids;
}

const char* to_string(CoverageState state) {
  switch (state) {
    case CoverageState::kFullyCovered: return "fully-covered";
    case CoverageState::kPartiallyCovered: return "partially-covered";
    case CoverageState::kNonCovered: return "non-covered";
  }
  return "unknown";
}

CoverageState classify(const FunctionCoverage& fc) {
  if (!fc.executed) return CoverageState::kNonCovered;
  for (const auto& b : fc.branches) {
    if (!b.covered) return CoverageState::kPartiallyCovered;
  }
  return CoverageState::kFullyCovered;
}

namespace {

void check_invariants(const FunctionCoverage& fc) {
  if (fc.function_id.empty()) {
    throw std::invalid_argument("FunctionCoverage requires a non-empty function_id");
  }
  if (!fc.executed) {
    for (const auto& b : fc.branches) {
      if (b.covered) {
        throw std::invalid_argument("non-executed function '" + fc.function_id +
                                    "' claims covered branch '" + b.branch_id + "'");
      }
    }
  }
}

bool same_branch_ids(const FunctionCoverage& a, const FunctionCoverage& b) {
  if (a.branches.size() != b.branches.size()) return false;
  for (std::size_t i = 0; i < a.branches.size(); ++i) {
    if (a.branches[i].branch_id != b.branches[i].branch_id) return false;
  }
  return true;
}

FunctionCoverage fold(const FunctionCoverage& base, const FunctionCoverage& other) {
  if (!same_branch_ids(base, other)) {
    throw ConflictingBranchSets("function '" + base.function_id +
                                "' reported with conflicting branch sets");
  }
  FunctionCoverage out = base;
  out.executed = base.executed || other.executed;
  for (std::size_t i = 0; i < out.branches.size(); ++i) {
    out.branches[i].covered = out.branches[i].covered || other.branches[i].covered;
  }
  if (out.source_text.empty()) out.source_text = other.source_text;
  return out;
}

}  // namespace

void CoverageReport::add_function(FunctionCoverage fc) {
  check_invariants(fc);
  auto it = functions_.find(fc.function_id);
  if (it == functions_.end()) {
    functions_.emplace(fc.function_id, std::move(fc));
  } else {
    it->second = fold(it->second, fc);
  }
}

void CoverageReport::add_call_edge(std::string caller, std::string callee) {
  if (!contains(caller)) {
    throw std::invalid_argument("call edge caller '" + caller + "' not in report");
  }
  if (!contains(callee)) {
    throw std::invalid_argument("call edge callee '" + callee + "' not in report");
  }
  call_edges_.emplace(std::move(caller), std::move(callee));
}

bool CoverageReport::contains(const std::string& function_id) const {
  return functions_.count(function_id) > 0;
}

const FunctionCoverage* CoverageReport::find(const std::string& function_id) const {
  auto it = functions_.find(function_id);
  return it == functions_.end() ? nullptr : &it->second;
}

CoverageReport merge(const CoverageReport& a, const CoverageReport& b) {
  CoverageReport out;
  for (const auto& [id, fc] : a.functions()) out.add_function(fc);
  for (const auto& [id, fc] : b.functions()) out.add_function(fc);
  for (const auto& [caller, callee] : a.call_edges()) out.add_call_edge(caller, callee);
  for (const auto& [caller, callee] : b.call_edges()) out.add_call_edge(caller, callee);
  out.set_seed_count(a.seed_count() + b.seed_count());
  return out;
}

BranchTally tally_branches(const CoverageReport& report) {
  BranchTally tally;
  for (const auto& [id, fc] : report.functions()) {
    tally.total += fc.branches.size();
    tally.covered += fc.covered_count();
  }
  return tally;
}

double total_branch_coverage(const CoverageReport& total) {
  const BranchTally tally = tally_branches(total);
  if (tally.total == 0) {
    throw NoBranches("coverage ratio undefined: report has no branches");
  }
  return static_cast<double>(tally.covered) / static_cast<double>(tally.total);
}

const CallGraphNode* DynamicCallGraph::find(const std::string& function_id) const {
  auto it = nodes_.find(function_id);
  return it == nodes_.end() ? nullptr : &it->second;
}

DynamicCallGraph build_call_graph(const CoverageReport& total, const std::string& root) {
  if (!total.contains(root)) {
    throw RootUnknown("entry function '" + root + "' not present in coverage report");
  }

  std::map<std::string, std::vector<std::string>> adjacency;
  for (const auto& [caller, callee] : total.call_edges()) {
    adjacency[caller].push_back(callee);
  }

  DynamicCallGraph graph;
  graph.root_ = root;

  std::deque<std::string> frontier{root};
  std::map<std::string, int> depth{{root, 0}};
  while (!frontier.empty()) {
    const std::string current = frontier.front();
    frontier.pop_front();
    for (const auto& next : adjacency[current]) {
      if (depth.emplace(next, depth[current] + 1).second) {
        frontier.push_back(next);
      }
    }
  }

  for (const auto& [id, d] : depth) {
    const FunctionCoverage* fc = total.find(id);
    graph.nodes_.emplace(id, CallGraphNode{*fc, classify(*fc), d});
  }
  for (const auto& edge : total.call_edges()) {
    if (depth.count(edge.first) && depth.count(edge.second)) {
      graph.edges_.insert(edge);
    }
  }
  return graph;
}

}  // namespace seedforge
