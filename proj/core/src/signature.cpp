#include "promptforge/signature.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "promptforge/errors.hpp"

namespace promptforge {

bool is_identifier(std::string_view s) {
  if (s.empty() || s[0] < 'a' || s[0] > 'z') return false;
  for (char c : s) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

void validate_signature(const TaskSignature& sig) {
  if (!is_identifier(sig.name)) {
    throw ValidationError("signature: invalid \"name\": " + sig.name);
  }
  if (sig.instruction.empty()) {
    throw ValidationError("signature: \"instruction\" must be nonempty");
  }
  if (sig.inputs.empty()) {
    throw ValidationError("signature: \"inputs\" must list at least one field");
  }
  if (sig.outputs.empty()) {
    throw ValidationError("signature: \"outputs\" must list at least one field");
  }
  std::set<std::string> seen;
  for (const auto* fields : {&sig.inputs, &sig.outputs}) {
    for (const FieldSpec& f : *fields) {
      if (!is_identifier(f.name)) {
        throw ValidationError("signature: invalid field name: \"" + f.name +
                              "\"");
      }
      if (!seen.insert(f.name).second) {
        throw ValidationError("signature: duplicate field name: \"" + f.name +
                              "\"");
      }
    }
  }
  const ConstraintSet& c = sig.constraints;
  if (c.max_output_tokens <= 0) {
    throw ValidationError("signature: \"max_output_tokens\" must be positive");
  }
  if (c.epsilon < 0.0 || c.epsilon > 1.0) {
    throw ValidationError("signature: \"epsilon\" must be in [0, 1]");
  }
  if (c.alpha < 0.0 || c.beta < 0.0) {
    throw ValidationError("signature: \"alpha\" and \"beta\" must be >= 0");
  }
}

namespace {

std::vector<FieldSpec> parse_fields(const json& arr, const std::string& key) {
  if (!arr.is_array()) {
    throw ValidationError("signature: \"" + key + "\" must be an array");
  }
  std::vector<FieldSpec> out;
  for (const json& f : arr) {
    FieldSpec spec;
    spec.name = require_string(f, "name", "signature field");
    if (f.contains("desc")) spec.desc = f.at("desc").get<std::string>();
    out.push_back(std::move(spec));
  }
  return out;
}

}  // namespace

TaskSignature parse_signature(const std::string& doc) {
  json j = parse_json(doc, "signature");
  TaskSignature sig;
  sig.name = require_string(j, "name", "signature");
  sig.instruction = require_string(j, "instruction", "signature");
  sig.inputs = parse_fields(require_key(j, "inputs", "signature"), "inputs");
  sig.outputs = parse_fields(require_key(j, "outputs", "signature"), "outputs");
  if (j.contains("constraints")) {
    const json& c = j.at("constraints");
    ConstraintSet cs;
    cs.max_output_tokens = c.value("max_output_tokens", cs.max_output_tokens);
    cs.epsilon = c.value("epsilon", cs.epsilon);
    cs.alpha = c.value("alpha", cs.alpha);
    cs.beta = c.value("beta", cs.beta);
    sig.constraints = cs;
  }
  validate_signature(sig);
  return sig;
}

std::string serialize_signature(const TaskSignature& sig) {
  json j;
  j["name"] = sig.name;
  j["instruction"] = sig.instruction;
  for (const auto& [fields, key] :
       {std::pair{&sig.inputs, "inputs"}, std::pair{&sig.outputs, "outputs"}}) {
    json arr = json::array();
    for (const FieldSpec& f : *fields) {
      arr.push_back(json{{"name", f.name}, {"desc", f.desc}});
    }
    j[key] = std::move(arr);
  }
  j["constraints"] = json{{"max_output_tokens", sig.constraints.max_output_tokens},
                          {"epsilon", sig.constraints.epsilon},
                          {"alpha", sig.constraints.alpha},
                          {"beta", sig.constraints.beta}};
  return j.dump(2) + "\n";
}

TaskSignature load_signature_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open signature file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_signature(buf.str());
}

}  // namespace promptforge
