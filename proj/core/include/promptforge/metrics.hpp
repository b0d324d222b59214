#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "promptforge/dataset.hpp"
#include "promptforge/pipeline.hpp"

namespace promptforge {

enum class MetricKind { exact_match, token_f1, bleu };

std::string metric_name(MetricKind m);
MetricKind metric_from_name(std::string_view name);  // em | f1 | bleu

// lowercase, strip punctuation, collapse whitespace, drop a/an/the
std::string normalize_text(const std::string& text);

double exact_match(const std::string& pred, const std::string& gold);
double token_f1(const std::string& pred, const std::string& gold);
// sentence BLEU, n=1..4 uniform weights, unigram unsmoothed, add-one
// smoothing for n>=2, brevity penalty min(1, e^(1 - r/c)); tokens are the
// whitespace split of the raw lowercased strings
double bleu(const std::string& pred, const std::string& gold);

double metric_score(MetricKind m, const std::string& pred,
                    const std::string& gold);

// fixed stopword list used by the grounding heuristic
const std::vector<std::string>& grounding_stopwords();

inline constexpr double kSupportThreshold = 0.5;
inline constexpr double kTokenNormalizer = 256.0;

struct GroundingResult {
  int flag = 0;           // 1 iff some sentence is unsupported
  bool ungrounded = false;  // support set was empty; flag forced to 0
};

// sentence-level lexical grounding: content tokens are normalized tokens of
// length >= 3 minus the stopword list; a sentence is unsupported iff fewer
// than kSupportThreshold of its content tokens appear in the support set
// built from evidence plus all input field values
GroundingResult grounding_check(const std::string& output,
                                const std::vector<std::string>& evidence,
                                const std::map<std::string, std::string>& x);

int hallucination_flag(const std::string& output,
                       const std::vector<std::string>& evidence,
                       const std::map<std::string, std::string>& x);

struct ObjectiveWeights {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.1;
  double epsilon = 0.1;

  bool operator==(const ObjectiveWeights&) const = default;
};

// alpha*A - beta*H - gamma*(mean_tokens / 256)
double composite_objective(double accuracy, double hallucination_rate,
                           double mean_tokens, const ObjectiveWeights& w);

struct ExampleResult {
  std::string id;
  double score = 0.0;
  bool hallucinated = false;
  bool errored = false;

  bool operator==(const ExampleResult&) const = default;
};

struct EvalReport {
  double accuracy = 0.0;
  double hallucination_rate = 0.0;
  double mean_score = 0.0;  // composite J for the weights used
  double mean_prompt_tokens = 0.0;
  std::vector<ExampleResult> per_example;
  std::size_t n_evaluated = 0;
  std::size_t n_errored = 0;
  std::size_t n_ungrounded = 0;
  std::string metric;

  bool operator==(const EvalReport&) const = default;
};

// runs the pipeline over every example; per-example results are always
// assembled in dataset order so the report is identical for any thread count
EvalReport evaluate(const Pipeline& pl, const Dataset& d, MetricKind metric,
                    const ObjectiveWeights& weights, int threads = 1);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

}  // namespace promptforge
