#include "promptforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "parallel.hpp"
#include "promptforge/errors.hpp"

namespace promptforge {

std::string metric_name(MetricKind m) {
  switch (m) {
    case MetricKind::exact_match: return "em";
    case MetricKind::token_f1: return "f1";
    case MetricKind::bleu: return "bleu";
  }
  return "em";
}

MetricKind metric_from_name(std::string_view name) {
  if (name == "em" || name == "exact_match") return MetricKind::exact_match;
  if (name == "f1" || name == "token_f1") return MetricKind::token_f1;
  if (name == "bleu") return MetricKind::bleu;
  throw ValidationError("unknown metric: " + std::string(name));
}

std::string normalize_text(const std::string& text) {
  std::string lowered;
  lowered.reserve(text.size());
  for (unsigned char c : text) {
    lowered += std::ispunct(c) ? ' ' : static_cast<char>(std::tolower(c));
  }
  std::istringstream words(lowered);
  std::string word, out;
  while (words >> word) {
    if (word == "a" || word == "an" || word == "the") continue;
    if (!out.empty()) out += ' ';
    out += word;
  }
  return out;
}

namespace {

std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string word;
  while (in >> word) out.push_back(word);
  return out;
}

}  // namespace

double exact_match(const std::string& pred, const std::string& gold) {
  return normalize_text(pred) == normalize_text(gold) ? 1.0 : 0.0;
}

double token_f1(const std::string& pred, const std::string& gold) {
  const auto p = split_ws(normalize_text(pred));
  const auto g = split_ws(normalize_text(gold));
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::map<std::string, int> gold_counts;
  for (const auto& t : g) ++gold_counts[t];
  int overlap = 0;
  for (const auto& t : p) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++overlap;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / p.size();
  const double recall = static_cast<double>(overlap) / g.size();
  return 2.0 * precision * recall / (precision + recall);
}

double bleu(const std::string& pred, const std::string& gold) {
  std::string pred_lower = pred, gold_lower = gold;
  for (auto* s : {&pred_lower, &gold_lower}) {
    std::transform(s->begin(), s->end(), s->begin(),
                   [](unsigned char c) { return std::tolower(c); });
  }
  const auto p = split_ws(pred_lower);
  const auto g = split_ws(gold_lower);
  if (p.empty() || g.empty()) return p.empty() && g.empty() ? 1.0 : 0.0;

  auto ngram_counts = [](const std::vector<std::string>& toks, std::size_t n) {
    std::map<std::string, int> counts;
    if (toks.size() < n) return counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      std::string key;
      for (std::size_t j = 0; j < n; ++j) {
        key += toks[i + j];
        key += '\x1f';
      }
      ++counts[key];
    }
    return counts;
  };

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto pn = ngram_counts(p, n);
    const auto gn = ngram_counts(g, n);
    int match = 0, total = 0;
    for (const auto& [key, count] : pn) {
      total += count;
      auto it = gn.find(key);
      if (it != gn.end()) match += std::min(count, it->second);
    }
    double precision;
    if (n == 1) {
      if (match == 0) return 0.0;  // unigram precision unsmoothed
      precision = static_cast<double>(match) / total;
    } else {
      precision = (match + 1.0) / (total + 1.0);  // add-one smoothing
    }
    log_sum += std::log(precision);
  }
  const double bp =
      std::min(1.0, std::exp(1.0 - static_cast<double>(g.size()) / p.size()));
  return bp * std::exp(log_sum / 4.0);
}

double metric_score(MetricKind m, const std::string& pred,
                    const std::string& gold) {
  switch (m) {
    case MetricKind::exact_match: return exact_match(pred, gold);
    case MetricKind::token_f1: return token_f1(pred, gold);
    case MetricKind::bleu: return bleu(pred, gold);
  }
  return 0.0;
}

const std::vector<std::string>& grounding_stopwords() {
  static const std::vector<std::string> words = {
      "a",  "an", "the", "is",  "are",  "was", "were", "be",   "been", "of",
      "to", "in", "on",  "at",  "for",  "and", "or",   "not",  "it",   "its",
      "this", "that", "with", "as", "by", "from", "but", "if", "then", "so"};
  return words;
}

namespace {

std::set<std::string> content_tokens(const std::string& text) {
  static const std::set<std::string> stop(grounding_stopwords().begin(),
                                          grounding_stopwords().end());
  std::set<std::string> out;
  for (const std::string& t : split_ws(normalize_text(text))) {
    if (t.size() >= 3 && !stop.count(t)) out.insert(t);
  }
  return out;
}

}  // namespace

GroundingResult grounding_check(const std::string& output,
                                const std::vector<std::string>& evidence,
                                const std::map<std::string, std::string>& x) {
  std::set<std::string> support;
  for (const std::string& e : evidence) {
    auto toks = content_tokens(e);
    support.insert(toks.begin(), toks.end());
  }
  for (const auto& [_, value] : x) {
    auto toks = content_tokens(value);
    support.insert(toks.begin(), toks.end());
  }
  if (support.empty()) return {0, true};

  std::string sentence;
  auto unsupported = [&](const std::string& s) {
    const auto tokens = content_tokens(s);
    if (tokens.empty()) return false;  // sentences without content are skipped
    std::size_t hits = 0;
    for (const auto& t : tokens) hits += support.count(t);
    return static_cast<double>(hits) / tokens.size() < kSupportThreshold;
  };
  for (char c : output) {
    if (c == '.' || c == '?' || c == '!') {
      if (unsupported(sentence)) return {1, false};
      sentence.clear();
    } else {
      sentence += c;
    }
  }
  if (unsupported(sentence)) return {1, false};
  return {0, false};
}

int hallucination_flag(const std::string& output,
                       const std::vector<std::string>& evidence,
                       const std::map<std::string, std::string>& x) {
  return grounding_check(output, evidence, x).flag;
}

double composite_objective(double accuracy, double hallucination_rate,
                           double mean_tokens, const ObjectiveWeights& w) {
  return w.alpha * accuracy - w.beta * hallucination_rate -
         w.gamma * (mean_tokens / kTokenNormalizer);
}

EvalReport evaluate(const Pipeline& pl, const Dataset& d, MetricKind metric,
                    const ObjectiveWeights& weights, int threads) {
  if (d.examples.empty()) {
    throw ValidationError("evaluate: dataset must be nonempty");
  }
  validate_pipeline(pl);
  const std::string& primary = pl.signature.primary_output();

  struct Slot {
    ExampleResult result;
    bool ungrounded = false;
    int tokens = 0;
  };
  std::vector<Slot> slots(d.examples.size());

  parallel_for(d.examples.size(), threads, [&](std::size_t i) {
    const Example& ex = d.examples[i];
    Slot& slot = slots[i];
    slot.result.id = ex.id;
    try {
      PipelineResult run = run_pipeline(pl, ex.inputs, ex.id);
      slot.tokens = prompt_length(run.prompt);
      auto gold = ex.outputs.find(primary);
      slot.result.score =
          gold == ex.outputs.end()
              ? 0.0
              : metric_score(metric, run.output, gold->second);
      std::vector<std::string> evidence = ex.evidence;
      evidence.insert(evidence.end(), run.context.begin(), run.context.end());
      GroundingResult grounding =
          grounding_check(run.output, evidence, ex.inputs);
      slot.result.hallucinated = grounding.flag != 0;
      slot.ungrounded = grounding.ungrounded;
    } catch (const LMError&) {
      // LM failure after retries: scored 0, not counted as fabrication
      slot.result.errored = true;
      slot.result.score = 0.0;
      slot.result.hallucinated = false;
    }
  });

  EvalReport report;
  report.metric = metric_name(metric);
  double score_sum = 0.0, flag_sum = 0.0, token_sum = 0.0;
  for (Slot& slot : slots) {
    score_sum += slot.result.score;
    flag_sum += slot.result.hallucinated ? 1.0 : 0.0;
    token_sum += slot.tokens;
    report.n_errored += slot.result.errored ? 1 : 0;
    report.n_ungrounded += slot.ungrounded ? 1 : 0;
    report.per_example.push_back(std::move(slot.result));
  }
  report.n_evaluated = d.examples.size();
  const auto n = static_cast<double>(report.n_evaluated);
  if (report.n_errored * 5 > report.n_evaluated) {
    throw Error("evaluation failed: " + std::to_string(report.n_errored) +
                " of " + std::to_string(report.n_evaluated) +
                " examples errored");
  }
  report.accuracy = score_sum / n;
  report.hallucination_rate = flag_sum / n;
  report.mean_prompt_tokens = token_sum / n;
  report.mean_score = composite_objective(
      report.accuracy, report.hallucination_rate, report.mean_prompt_tokens,
      weights);
  return report;
}

std::string report_to_json(const EvalReport& report) {
  json j;
  j["A"] = report.accuracy;
  j["H"] = report.hallucination_rate;
  j["J"] = report.mean_score;
  j["mean_prompt_tokens"] = report.mean_prompt_tokens;
  j["n_evaluated"] = report.n_evaluated;
  j["n_errored"] = report.n_errored;
  j["n_ungrounded"] = report.n_ungrounded;
  j["metric"] = report.metric;
  json per = json::array();
  for (const ExampleResult& r : report.per_example) {
    per.push_back(json{{"id", r.id},
                       {"score", r.score},
                       {"hallucinated", r.hallucinated},
                       {"errored", r.errored}});
  }
  j["per_example"] = std::move(per);
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  json j = parse_json(text, "eval report");
  EvalReport report;
  report.accuracy = require_key(j, "A", "eval report").get<double>();
  report.hallucination_rate = require_key(j, "H", "eval report").get<double>();
  report.mean_score = require_key(j, "J", "eval report").get<double>();
  report.mean_prompt_tokens = j.value("mean_prompt_tokens", 0.0);
  report.n_evaluated = j.value("n_evaluated", std::size_t{0});
  report.n_errored = j.value("n_errored", std::size_t{0});
  report.n_ungrounded = j.value("n_ungrounded", std::size_t{0});
  report.metric = j.value("metric", "");
  if (j.contains("per_example")) {
    for (const json& r : j.at("per_example")) {
      ExampleResult res;
      res.id = r.value("id", "");
      res.score = r.value("score", 0.0);
      res.hallucinated = r.value("hallucinated", false);
      res.errored = r.value("errored", false);
      report.per_example.push_back(std::move(res));
    }
  }
  return report;
}

}  // namespace promptforge
