#pragma once

#include <optional>
#include <string>

namespace seedforge {

enum class FailureKind {
  kParseFailure,  // reply carried no fenced code block
  kExecFailure,   // non-zero exit, signal, or timeout
  kEmptyOutput,   // exit 0 but no/empty seed file
};

const char* to_string(FailureKind kind);

/// Captured evidence for a deviant LLM behavior, fed back verbatim in the
/// realignment prompt. Text fields are capped to the tail of
/// kEvidenceCapBytes so realignment prompts stay small; tracebacks end with
/// the cause, so the tail is the useful part.
struct FailureEvidence {
  FailureKind kind = FailureKind::kExecFailure;
  std::string stderr_text;
  std::string stack_trace;
  std::optional<int> exit_code;
  bool timed_out = false;
};

inline constexpr std::size_t kEvidenceCapBytes = 4096;

/// Returns the last `kEvidenceCapBytes` bytes of `text`.
std::string cap_evidence(std::string text);

FailureEvidence make_parse_failure(std::string reply_text);
FailureEvidence make_exec_failure(std::string stderr_text, std::optional<int> exit_code,
                                  bool timed_out = false);
FailureEvidence make_empty_output(std::string stderr_text);

}  // namespace seedforge
