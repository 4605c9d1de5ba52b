#pragma once

#include <map>
#include <string>
#include <string_view>

#include "seedforge/error.hpp"
#include "seedforge/evidence.hpp"

namespace seedforge {

struct MissingSlot : Error {
  using Error::Error;
};

struct UnknownSlot : Error {
  using Error::Error;
};

/// The four published prompts plus the realignment prompt. The first four
/// render byte-identically to their stored template files modulo slot
/// substitution.
enum class PromptKind {
  kSystemPrompt,
  kUserPrompt,          // slot: {harness_code}
  kExampleScriptPrompt,
  kSummaryPrompt,       // slot: {coverage_report}
  kRealignPrompt,       // rendered through render_realign()
};

/// Raw stored template text for `kind`. For kRealignPrompt this is the
/// execution-failure variant; render_realign() picks the right one.
std::string_view prompt_template(PromptKind kind);

/// Substitutes every declared slot of the template. Throws MissingSlot when
/// a declared slot has no value, UnknownSlot when `slots` carries a name the
/// template does not declare.
std::string render(PromptKind kind, const std::map<std::string, std::string>& slots);

/// Behavior-amending instruction embedding the captured evidence verbatim.
/// Deterministic for a fixed failure.
std::string render_realign(const FailureEvidence& failure);

/// Replaces the example-script prompt from the second iteration on: the
/// previous iteration's script, fenced.
std::string render_script_section(std::string_view latest_script);

}  // namespace seedforge
