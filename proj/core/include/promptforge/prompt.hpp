#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "promptforge/retrieval.hpp"
#include "promptforge/signature.hpp"

namespace promptforge {

struct Demo {
  std::map<std::string, std::string> inputs;
  std::string output;  // primary output field value

  bool operator==(const Demo&) const = default;
};

// the optimizable parameter: everything the search is allowed to vary
struct PromptParams {
  std::string instruction;
  std::vector<Demo> demos;
  bool use_reasoning = false;
  RetrievalParams retrieval;

  bool operator==(const PromptParams&) const = default;
};

inline constexpr std::string_view kReasoningDirective =
    "Let's think step by step.";

// bit-exact layout (LF newlines):
//   {instruction}\n
//   [Let's think step by step.\n]                      iff use_reasoning
//   [### Example\n{field}: {val}\n...{out_field}: {out}\n]   per demo
//   [### Context\n{passage}\n]                         per passage, rank order
//   ### Input\n{field}: {val}\n...                     signature input order
//   {out_field}:                                       no trailing newline
std::string render_prompt(const TaskSignature& sig, const PromptParams& params,
                          const std::map<std::string, std::string>& x,
                          const std::vector<std::string>& context);

// whitespace-separated token count
int prompt_length(std::string_view prompt);

// canonical JSON rendering (the same object embedded in artifact files)
std::string params_to_json_text(const PromptParams& params);
PromptParams params_from_json_text(const std::string& text);

// stable digest of params (canonical serialization), used in history entries
std::string params_digest(const PromptParams& params);

}  // namespace promptforge
