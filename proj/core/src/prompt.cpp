#include "promptforge/prompt.hpp"

#include "params_json.hpp"
#include "promptforge/errors.hpp"
#include "promptforge/hashing.hpp"

namespace promptforge {

namespace {

const std::string& field_value(const std::map<std::string, std::string>& m,
                               const std::string& name,
                               const std::string& what) {
  auto it = m.find(name);
  if (it == m.end()) {
    throw ValidationError(what + ": missing input field \"" + name + "\"");
  }
  return it->second;
}

}  // namespace

std::string render_prompt(const TaskSignature& sig, const PromptParams& params,
                          const std::map<std::string, std::string>& x,
                          const std::vector<std::string>& context) {
  std::string out = params.instruction;
  out += '\n';
  if (params.use_reasoning) {
    out += kReasoningDirective;
    out += '\n';
  }
  const std::string& out_field = sig.primary_output();
  for (const Demo& demo : params.demos) {
    out += "### Example\n";
    for (const FieldSpec& f : sig.inputs) {
      out += f.name;
      out += ": ";
      out += field_value(demo.inputs, f.name, "demo");
      out += '\n';
    }
    out += out_field;
    out += ": ";
    out += demo.output;
    out += '\n';
  }
  for (const std::string& passage : context) {
    out += "### Context\n";
    out += passage;
    out += '\n';
  }
  out += "### Input\n";
  for (const FieldSpec& f : sig.inputs) {
    out += f.name;
    out += ": ";
    out += field_value(x, f.name, "render_prompt");
    out += '\n';
  }
  out += out_field;
  out += ':';
  return out;
}

int prompt_length(std::string_view prompt) {
  int count = 0;
  bool in_token = false;
  for (unsigned char c : prompt) {
    if (std::isspace(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

std::string params_to_json_text(const PromptParams& params) {
  return params_to_json(params).dump(2) + "\n";
}

PromptParams params_from_json_text(const std::string& text) {
  return params_from_json(parse_json(text, "params"));
}

std::string params_digest(const PromptParams& params) {
  return to_hex(fnv1a64(params_to_json(params).dump()));
}

}  // namespace promptforge
