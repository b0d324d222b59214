#include "promptforge/pipeline.hpp"

#include <chrono>

#include "promptforge/errors.hpp"
#include "promptforge/hashing.hpp"

namespace promptforge {

void validate_pipeline(const Pipeline& pl) {
  validate_signature(pl.signature);
  if (pl.params.instruction.empty()) {
    throw ValidationError("pipeline: instruction must be nonempty");
  }
  if (pl.params.demos.size() > 8) {
    throw ValidationError("pipeline: at most 8 demos");
  }
  if (pl.params.retrieval.k < 0 || pl.params.retrieval.k > 16) {
    throw ValidationError("pipeline: retrieval k must be in [0, 16]");
  }
  if (pl.params.retrieval.k > 0 && !pl.retriever) {
    throw ValidationError("pipeline: retrieval.k > 0 requires an index");
  }
  if (!pl.lm) throw ValidationError("pipeline: missing LM client");
}

namespace {

std::string build_query(const Pipeline& pl,
                        const std::map<std::string, std::string>& x) {
  std::string q;
  if (pl.params.retrieval.query_template ==
      QueryTemplate::instruction_prefixed) {
    q = pl.params.instruction;
  }
  for (const FieldSpec& f : pl.signature.inputs) {
    auto it = x.find(f.name);
    if (it == x.end()) continue;  // render_prompt reports the miss later
    if (!q.empty()) q += ' ';
    q += it->second;
  }
  return q;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

PipelineResult run_pipeline(const Pipeline& pl,
                            const std::map<std::string, std::string>& x,
                            const std::string& example_tag) {
  validate_pipeline(pl);
  PipelineResult result;

  if (pl.params.retrieval.k > 0) {
    const auto start = std::chrono::steady_clock::now();
    const std::string query = build_query(pl, x);
    std::string joined;
    for (const ScoredDoc& doc :
         pl.retriever->retrieve(query, pl.params.retrieval.k)) {
      result.context.push_back(pl.retriever->passage(doc.doc_id));
      joined += doc.doc_id;
      joined += '\x1f';
      joined += result.context.back();
      joined += '\x1f';
    }
    result.trace.steps.push_back({StepKind::retrieve, fnv1a64(query),
                                  fnv1a64(joined), seconds_since(start)});
  }

  result.prompt = render_prompt(pl.signature, pl.params, x, result.context);

  LMRequest req;
  req.prompt = result.prompt;
  req.max_tokens = pl.signature.constraints.max_output_tokens;
  req.model_id = pl.model_id;
  req.example_tag = example_tag;

  const auto start = std::chrono::steady_clock::now();
  LMResponse resp = pl.lm->generate(req);
  result.trace.steps.push_back({StepKind::generate, fnv1a64(result.prompt),
                                fnv1a64(resp.text), seconds_since(start)});

  // strip surrounding whitespace only; metrics handle the rest
  std::string& text = resp.text;
  const auto first = text.find_first_not_of(" \t\r\n");
  const auto last = text.find_last_not_of(" \t\r\n");
  result.output =
      first == std::string::npos ? "" : text.substr(first, last - first + 1);
  result.trace.final_text = result.output;
  return result;
}

}  // namespace promptforge
