#pragma once

// canonical JSON form of PromptParams, shared by the params digest and the
// artifact serializer so the two can never drift apart

#include "json_util.hpp"
#include "promptforge/prompt.hpp"

namespace promptforge {

inline json params_to_json(const PromptParams& params) {
  json j;
  j["instruction"] = params.instruction;
  json demos = json::array();
  for (const Demo& d : params.demos) {
    json inputs;
    for (const auto& [k, v] : d.inputs) inputs[k] = v;
    demos.push_back(json{{"inputs", std::move(inputs)}, {"output", d.output}});
  }
  j["demos"] = std::move(demos);
  j["use_reasoning"] = params.use_reasoning;
  j["retrieval"] = json{{"k", params.retrieval.k},
                        {"query_template",
                         query_template_name(params.retrieval.query_template)}};
  return j;
}

inline PromptParams params_from_json(const json& j) {
  PromptParams params;
  params.instruction = require_string(j, "instruction", "params");
  if (j.contains("demos")) {
    for (const json& d : j.at("demos")) {
      Demo demo;
      if (d.contains("inputs")) {
        for (const auto& [k, v] : d.at("inputs").items()) {
          demo.inputs[k] = v.get<std::string>();
        }
      }
      demo.output = d.value("output", "");
      params.demos.push_back(std::move(demo));
    }
  }
  params.use_reasoning = j.value("use_reasoning", false);
  if (j.contains("retrieval")) {
    const json& r = j.at("retrieval");
    params.retrieval.k = r.value("k", 0);
    params.retrieval.query_template =
        query_template_from_name(r.value("query_template", "raw_input"));
  }
  return params;
}

}  // namespace promptforge
