#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "promptforge/lm_client.hpp"
#include "promptforge/prompt.hpp"
#include "promptforge/retrieval.hpp"
#include "promptforge/signature.hpp"

namespace promptforge {

enum class StepKind { retrieve, generate };

struct TraceStep {
  StepKind kind;
  std::uint64_t input_digest;
  std::uint64_t output_digest;
  double latency_s;
};

struct Trace {
  std::vector<TraceStep> steps;
  std::string final_text;
};

// compiled composition: optional retrieval stage feeding one generate call
struct Pipeline {
  TaskSignature signature;
  PromptParams params;
  std::shared_ptr<LMClient> lm;
  std::shared_ptr<const Index> retriever;  // required iff retrieval.k > 0
  std::string model_id = "sim";
};

struct PipelineResult {
  std::string output;  // whitespace-stripped model text
  Trace trace;
  std::vector<std::string> context;  // retrieved passage texts, rank order
  std::string prompt;                // rendered prompt actually sent
};

void validate_pipeline(const Pipeline& pl);

// example_tag is forwarded to the LM request (simulator routing)
PipelineResult run_pipeline(const Pipeline& pl,
                            const std::map<std::string, std::string>& x,
                            const std::string& example_tag = "");

}  // namespace promptforge
