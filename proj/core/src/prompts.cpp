#include "seedforge/prompts.hpp"

#include <array>
#include <set>
#include <sstream>

#include "seedforge/prompts_data.hpp"

namespace seedforge {

namespace {

struct TemplateInfo {
  std::string_view text;
  std::set<std::string, std::less<>> slots;
};

const TemplateInfo& info_for(PromptKind kind) {
  static const TemplateInfo system{prompt_data::k_system_prompt, {}};
  static const TemplateInfo user{prompt_data::k_user_prompt, {"harness_code"}};
  static const TemplateInfo example{prompt_data::k_example_script_prompt, {}};
  static const TemplateInfo summary{prompt_data::k_summary_prompt, {"coverage_report"}};
  static const TemplateInfo realign{prompt_data::k_realign_exec,
                                    {"exit_code", "stderr", "stack_trace"}};
  switch (kind) {
    case PromptKind::kSystemPrompt: return system;
    case PromptKind::kUserPrompt: return user;
    case PromptKind::kExampleScriptPrompt: return example;
    case PromptKind::kSummaryPrompt: return summary;
    case PromptKind::kRealignPrompt: return realign;
  }
  throw std::invalid_argument("unknown prompt kind");
}

std::string substitute(std::string_view text, const std::set<std::string, std::less<>>& declared,
                       const std::map<std::string, std::string>& slots) {
  for (const auto& [name, value] : slots) {
    if (!declared.count(name)) {
      throw UnknownSlot("slot '" + name + "' is not declared by this template");
    }
  }
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(text.substr(pos));
      break;
    }
    const std::size_t close = text.find('}', open);
    const std::string_view name =
        close == std::string_view::npos ? std::string_view{} : text.substr(open + 1, close - open - 1);
    if (close != std::string_view::npos && declared.count(name)) {
      auto it = slots.find(std::string(name));
      if (it == slots.end()) {
        throw MissingSlot("no value supplied for slot '" + std::string(name) + "'");
      }
      out.append(text.substr(pos, open - pos));
      out.append(it->second);
      pos = close + 1;
    } else {
      // Brace that is not a declared slot (e.g. code in the template text).
      out.append(text.substr(pos, open - pos + 1));
      pos = open + 1;
    }
  }
  return out;
}

}  // namespace

std::string_view prompt_template(PromptKind kind) {
  return info_for(kind).text;
}

std::string render(PromptKind kind, const std::map<std::string, std::string>& slots) {
  const TemplateInfo& info = info_for(kind);
  return substitute(info.text, info.slots, slots);
}

std::string render_realign(const FailureEvidence& failure) {
  switch (failure.kind) {
    case FailureKind::kParseFailure:
      return substitute(prompt_data::k_realign_parse, {"evidence"},
                        {{"evidence", failure.stderr_text}});
    case FailureKind::kEmptyOutput:
      return substitute(prompt_data::k_realign_empty, {"stderr"},
                        {{"stderr", failure.stderr_text}});
    case FailureKind::kExecFailure: {
      std::ostringstream exit_code;
      if (failure.timed_out) {
        exit_code << "none (killed on timeout)";
      } else if (failure.exit_code.has_value()) {
        exit_code << *failure.exit_code;
      } else {
        exit_code << "none";
      }
      return substitute(prompt_data::k_realign_exec, {"exit_code", "stderr", "stack_trace"},
                        {{"exit_code", exit_code.str()},
                         {"stderr", failure.stderr_text},
                         {"stack_trace", failure.stack_trace}});
    }
  }
  throw std::invalid_argument("unknown failure kind");
}

std::string render_script_section(std::string_view latest_script) {
  // The template already supplies the newline before the closing fence.
  std::string source(latest_script);
  while (!source.empty() && source.back() == '\n') source.pop_back();
  return substitute(prompt_data::k_script_section, {"latest_script"},
                    {{"latest_script", source}});
}

}  // namespace seedforge
