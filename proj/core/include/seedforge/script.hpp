#pragma once

#include <string>

namespace seedforge {

/// One LLM-produced test-case generator. `version` is the 1-based iteration
/// that the script drives; `validated` is set once a dry run produced a
/// non-empty seed file within the timeout.
struct GeneratorScript {
  std::string source;
  int version = 1;
  bool validated = false;
  std::string interpreter_tag = "python3";
};

}  // namespace seedforge
