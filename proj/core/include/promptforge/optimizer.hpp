#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "promptforge/dataset.hpp"
#include "promptforge/metrics.hpp"
#include "promptforge/pipeline.hpp"
#include "promptforge/prompt.hpp"
#include "promptforge/retrieval.hpp"

namespace promptforge {

// discrete candidate space; canonical index order enumerates instructions
// outermost, then demo sets, then reasoning, then retrieval innermost
struct CandidateSpace {
  std::vector<std::string> instructions;
  std::vector<std::vector<Demo>> demo_sets;
  std::vector<bool> reasoning_options;
  std::vector<RetrievalParams> retrieval_options;

  std::size_t size() const {
    return instructions.size() * demo_sets.size() * reasoning_options.size() *
           retrieval_options.size();
  }
  PromptParams candidate(std::size_t index) const;
};

inline constexpr std::string_view kFormatConstraint =
    "Answer with the final value only.";

struct RewriteRule {
  enum class Kind {
    add_reasoning,
    remove_reasoning,
    compress_instruction,
    add_format_constraint,
    set_demo_count,
    set_retrieval,
  };

  Kind kind;
  int demo_count = 0;           // set_demo_count
  std::vector<Demo> demo_pool;  // set_demo_count source (prefix taken)
  RetrievalParams retrieval;    // set_retrieval
};

// pure; see RewriteRule kinds. compress_instruction deletes parenthesized
// clauses and collapses doubled spaces (keeps the original if that empties
// it); add_format_constraint is idempotent
PromptParams apply_rewrite(const PromptParams& p, const RewriteRule& r);

// seed instruction + deterministic template variants (+ LM paraphrases when
// the client is a real endpoint; LM failures fall back silently),
// de-duplicated, truncated to n
std::vector<std::string> propose_instructions(const TaskSignature& sig, int n,
                                              LMClient& lm, std::uint64_t seed,
                                              const std::string& model_id = "sim");

// run the zero-demo form of pl over train in order; keep (inputs, output)
// pairs scoring >= threshold, stop after 2*max_k collected; returns demo-set
// prefixes of sizes 0..min(max_k, collected)
std::vector<std::vector<Demo>> bootstrap_demos(const Pipeline& pl,
                                               const Dataset& train,
                                               MetricKind metric,
                                               double threshold, int max_k);

// evaluation context shared by search and refinement
struct SearchContext {
  TaskSignature signature;
  std::shared_ptr<LMClient> lm;
  std::shared_ptr<const Index> retriever;
  std::string model_id = "sim";
  int threads = 1;
};

struct RungStat {
  int rung = 0;
  std::size_t batch_size = 0;
  std::size_t candidates = 0;
  std::uint64_t misses = 0;
};

// budget counts search-phase cache misses (rung and refinement minibatches);
// the dev evaluation of finalists is mandatory for selection and is tracked
// separately rather than charged against the budget
struct BudgetLedger {
  std::uint64_t budget = 0;
  std::uint64_t rung_misses = 0;
  std::uint64_t dev_misses = 0;
  std::uint64_t refine_misses = 0;
};

struct SearchResult {
  PromptParams best;
  EvalReport report;  // dev report of best
  bool feasible = false;
  std::size_t best_index = 0;
  std::vector<RungStat> rungs;
  BudgetLedger ledger;
};

// successive halving: rung r evaluates survivors on the first
// min(b0 * 2^r, N) indices of seeded_permutation(N, derive_seed(seed, r)),
// keeps the top half by J' (ties: A desc, H asc, tokens asc, index asc),
// stops when one survivor remains, the batch covers train, or the worst-case
// cost of the next rung would exceed the remaining budget; survivors are
// evaluated on dev; selection prefers feasible (H <= epsilon) max J', else
// min H with feasible=false
SearchResult mipro_search(const CandidateSpace& space, const Dataset& train,
                          const Dataset& dev, MetricKind metric,
                          const ObjectiveWeights& weights,
                          std::uint64_t budget, std::uint64_t seed,
                          const SearchContext& ctx);

struct HistoryEntry {
  int t = 0;
  std::string candidate;  // params digest
  double objective = 0.0;

  bool operator==(const HistoryEntry&) const = default;
};

struct OptimizerState {
  int t = 0;
  PromptParams incumbent;
  EvalReport incumbent_report;  // minibatch report; empty until first round
  CandidateSpace pool;
  std::uint64_t budget = 0;
  std::uint64_t seed = 0;
  std::vector<HistoryEntry> history;
  bool budget_exhausted = false;
};

// one hill-climb round over all applicable rewrites on a fixed seeded
// minibatch (first min(8, N) of seeded_permutation(N, derive_seed(seed,
// "refine"))); the best neighbor replaces the incumbent only if it strictly
// wins the full tie order, so converged states are true fixed points
OptimizerState optimize_step(OptimizerState state, const Dataset& d,
                             MetricKind metric, const ObjectiveWeights& weights,
                             const SearchContext& ctx);

struct CompileConfig {
  int n_instructions = 4;
  int max_demos = 4;
  double bootstrap_threshold = -1.0;  // <0: 1.0 for em, 0.5 for f1/bleu
  int refine_rounds = 2;
  std::uint64_t budget = 10000;
  std::uint64_t seed = 0;
  MetricKind metric = MetricKind::exact_match;
  ObjectiveWeights weights;
  std::string model_id = "sim";
  int threads = 1;
};

struct CompiledArtifact {
  TaskSignature signature;
  PromptParams params;
  EvalReport report;  // dev report of params
  bool feasible = false;
  std::uint64_t seed = 0;
  CompileConfig config;
  std::vector<HistoryEntry> history;
  BudgetLedger ledger;  // in-memory only; not part of the artifact file
};

CompiledArtifact compile(const TaskSignature& sig, const Dataset& train,
                         const Dataset& dev,
                         const std::optional<Corpus>& corpus,
                         std::shared_ptr<LMClient> lm,
                         const CompileConfig& config);

// artifact file keys: signature, params, report, feasible, seed, config,
// history; serialization is byte-deterministic, writes are atomic
std::string artifact_to_json(const CompiledArtifact& artifact);
CompiledArtifact artifact_from_json(const std::string& text);
void write_artifact_file(const CompiledArtifact& artifact,
                         const std::string& path);
CompiledArtifact load_artifact_file(const std::string& path);

}  // namespace promptforge
