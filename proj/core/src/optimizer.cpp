#include "promptforge/optimizer.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <tuple>
#include <utility>

#include "parallel.hpp"
#include "params_json.hpp"
#include "promptforge/errors.hpp"
#include "promptforge/hashing.hpp"

namespace promptforge {

namespace {

struct CacheHandle {
  std::shared_ptr<LMClient> lm;
  CallCache* cache;
};

// budget accounting needs a miss counter; wrap bare clients in a fresh cache
CacheHandle ensure_cached(const std::shared_ptr<LMClient>& lm) {
  if (!lm) throw ValidationError("lm client is required");
  if (auto* cached = dynamic_cast<CachedLM*>(lm.get())) {
    return {lm, &cached->cache()};
  }
  auto wrapped = std::make_shared<CachedLM>(lm, std::make_shared<CallCache>());
  CallCache* cache = &wrapped->cache();
  return {wrapped, cache};
}

Pipeline make_pipeline(const SearchContext& ctx,
                       const std::shared_ptr<LMClient>& lm,
                       PromptParams params) {
  Pipeline pl;
  pl.signature = ctx.signature;
  pl.params = std::move(params);
  pl.lm = lm;
  pl.retriever = ctx.retriever;
  pl.model_id = ctx.model_id;
  return pl;
}

Dataset subset(const Dataset& d, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.examples.reserve(idx.size());
  for (std::size_t i : idx) out.examples.push_back(d.examples[i]);
  return out;
}

// first `take` positions of the seeded permutation, restored to dataset order
Dataset seeded_prefix(const Dataset& d, std::uint64_t seed, std::size_t take) {
  std::vector<std::size_t> perm = seeded_permutation(d.size(), seed);
  perm.resize(take);
  std::sort(perm.begin(), perm.end());
  return subset(d, perm);
}

struct Scored {
  std::size_t index = 0;
  double objective = 0.0;
  double accuracy = 0.0;
  double hallucination = 0.0;
  double tokens = 0.0;
};

Scored score_of(std::size_t index, const EvalReport& r) {
  return {index, r.mean_score, r.accuracy, r.hallucination_rate,
          r.mean_prompt_tokens};
}

// higher J', then higher A, lower H, fewer tokens, lower canonical index
bool better(const Scored& a, const Scored& b) {
  if (a.objective != b.objective) return a.objective > b.objective;
  if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
  if (a.hallucination != b.hallucination) {
    return a.hallucination < b.hallucination;
  }
  if (a.tokens != b.tokens) return a.tokens < b.tokens;
  return a.index < b.index;
}

// fallback order when nothing is feasible: lowest H first
bool lower_h(const Scored& a, const Scored& b) {
  if (a.hallucination != b.hallucination) {
    return a.hallucination < b.hallucination;
  }
  if (a.objective != b.objective) return a.objective > b.objective;
  if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
  if (a.tokens != b.tokens) return a.tokens < b.tokens;
  return a.index < b.index;
}

std::string strip_parenthesized(const std::string& s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '(') {
      std::size_t close = s.find(')', i + 1);
      if (close != std::string::npos) {
        i = close + 1;
        continue;
      }
    }
    out += s[i++];
  }
  return out;
}

std::string collapse_spaces(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' && !out.empty() && out.back() == ' ') continue;
    out += c;
  }
  while (!out.empty() && out.front() == ' ') out.erase(out.begin());
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::string trim_ws(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

PromptParams CandidateSpace::candidate(std::size_t index) const {
  if (instructions.empty() || demo_sets.empty() || reasoning_options.empty() ||
      retrieval_options.empty()) {
    throw ValidationError("candidate space has an empty axis");
  }
  if (index >= size()) throw ValidationError("candidate index out of range");
  const std::size_t nk = retrieval_options.size();
  const std::size_t nr = reasoning_options.size();
  const std::size_t nd = demo_sets.size();
  PromptParams p;
  p.retrieval = retrieval_options[index % nk];
  index /= nk;
  p.use_reasoning = reasoning_options[index % nr];
  index /= nr;
  p.demos = demo_sets[index % nd];
  index /= nd;
  p.instruction = instructions[index];
  return p;
}

PromptParams apply_rewrite(const PromptParams& p, const RewriteRule& r) {
  PromptParams out = p;
  switch (r.kind) {
    case RewriteRule::Kind::add_reasoning:
      out.use_reasoning = true;
      break;
    case RewriteRule::Kind::remove_reasoning:
      out.use_reasoning = false;
      break;
    case RewriteRule::Kind::compress_instruction: {
      std::string compressed =
          collapse_spaces(strip_parenthesized(p.instruction));
      if (!compressed.empty()) out.instruction = compressed;
      break;
    }
    case RewriteRule::Kind::add_format_constraint:
      if (!out.instruction.ends_with(kFormatConstraint)) {
        out.instruction += ' ';
        out.instruction += kFormatConstraint;
      }
      break;
    case RewriteRule::Kind::set_demo_count: {
      if (r.demo_count < 0) {
        throw ValidationError("demo_count must be >= 0");
      }
      const std::vector<Demo>& pool =
          r.demo_pool.empty() ? p.demos : r.demo_pool;
      const std::size_t n =
          std::min<std::size_t>(static_cast<std::size_t>(r.demo_count),
                                pool.size());
      out.demos.assign(pool.begin(), pool.begin() + n);
      break;
    }
    case RewriteRule::Kind::set_retrieval:
      out.retrieval = r.retrieval;
      break;
  }
  return out;
}

std::vector<std::string> propose_instructions(const TaskSignature& sig, int n,
                                              LMClient& lm, std::uint64_t seed,
                                              const std::string& model_id) {
  if (n < 1 || n > 16) {
    throw ValidationError("n_instructions must be in [1, 16]");
  }
  std::vector<std::string> out;
  auto push_unique = [&](std::string s) {
    if (s.empty() || static_cast<int>(out.size()) >= n) return;
    if (std::find(out.begin(), out.end(), s) == out.end()) {
      out.push_back(std::move(s));
    }
  };

  push_unique(sig.instruction);
  std::string imperative = sig.instruction;
  if (imperative.starts_with("Please ")) {
    imperative = imperative.substr(7);
  } else if (imperative.starts_with("Kindly ")) {
    imperative = imperative.substr(7);
  } else {
    imperative = "Do the following: " + imperative;
  }
  push_unique(std::move(imperative));
  push_unique(sig.instruction + " " + std::string(kFormatConstraint));
  push_unique(sig.instruction + " Use only the provided context.");

  if (lm.kind() == LMSource::http) {
    for (int i = 0; static_cast<int>(out.size()) < n && i < 2 * n; ++i) {
      LMRequest req;
      req.prompt =
          "Rewrite the instruction below, keeping its meaning. Reply with "
          "the rewritten instruction only.\nseed: " +
          to_hex(derive_seed(seed, std::to_string(i))) +
          "\ninstruction: " + sig.instruction;
      req.max_tokens = 64;
      req.model_id = model_id;
      try {
        push_unique(trim_ws(lm.generate(req).text));
      } catch (const LMError&) {
        // paraphrasing is best effort; the template variants always stand
      }
    }
  }
  return out;
}

std::vector<std::vector<Demo>> bootstrap_demos(const Pipeline& pl,
                                               const Dataset& train,
                                               MetricKind metric,
                                               double threshold, int max_k) {
  if (max_k < 1 || max_k > 8) {
    throw ValidationError("max_demos must be in [1, 8]");
  }
  Pipeline zero = pl;
  zero.params.demos.clear();
  validate_pipeline(zero);
  const std::string& primary = pl.signature.primary_output();
  const std::size_t cap = 2 * static_cast<std::size_t>(max_k);

  std::vector<Demo> collected;
  for (const Example& ex : train.examples) {
    if (collected.size() >= cap) break;
    auto gold = ex.outputs.find(primary);
    if (gold == ex.outputs.end()) {
      throw ValidationError("example " + ex.id + ": missing output field \"" +
                            primary + "\"");
    }
    std::string output;
    try {
      output = run_pipeline(zero, ex.inputs, ex.id).output;
    } catch (const LMError&) {
      continue;  // failed calls never become demonstrations
    }
    if (metric_score(metric, output, gold->second) >= threshold) {
      collected.push_back(Demo{ex.inputs, output});
    }
  }

  const std::size_t kmax =
      std::min<std::size_t>(static_cast<std::size_t>(max_k), collected.size());
  std::vector<std::vector<Demo>> sets;
  sets.reserve(kmax + 1);
  for (std::size_t k = 0; k <= kmax; ++k) {
    sets.emplace_back(collected.begin(), collected.begin() + k);
  }
  return sets;
}

SearchResult mipro_search(const CandidateSpace& space, const Dataset& train,
                          const Dataset& dev, MetricKind metric,
                          const ObjectiveWeights& weights, std::uint64_t budget,
                          std::uint64_t seed, const SearchContext& ctx) {
  if (space.instructions.empty() || space.demo_sets.empty() ||
      space.reasoning_options.empty() || space.retrieval_options.empty()) {
    throw ValidationError("candidate space has an empty axis");
  }
  if (train.examples.empty()) throw ValidationError("train split is empty");
  if (dev.examples.empty()) throw ValidationError("dev split is empty");
  const std::size_t nspace = space.size();
  if (budget < nspace) {
    throw ValidationError("budget too small for rung 0");
  }

  CacheHandle handle = ensure_cached(ctx.lm);
  const std::size_t n = train.size();
  std::size_t b0 = std::min<std::size_t>(4, n);
  b0 = std::min<std::size_t>(
      b0, static_cast<std::size_t>(
              std::max<std::uint64_t>(1, budget / nspace)));

  SearchResult result;
  result.ledger.budget = budget;

  std::vector<std::size_t> survivors(nspace);
  for (std::size_t i = 0; i < nspace; ++i) survivors[i] = i;

  std::uint64_t spent = 0;
  for (int r = 0;; ++r) {
    const std::size_t b =
        r < 60 ? std::min<std::size_t>(n, b0 << r) : n;
    if (spent + static_cast<std::uint64_t>(survivors.size()) * b > budget) {
      break;  // the next rung could not be guaranteed within budget
    }
    Dataset batch = seeded_prefix(train, derive_seed(seed, std::to_string(r)),
                                  b);

    const std::uint64_t before = handle.cache->misses();
    std::vector<Scored> scored(survivors.size());
    parallel_for(survivors.size(), ctx.threads, [&](std::size_t si) {
      EvalReport rep =
          evaluate(make_pipeline(ctx, handle.lm, space.candidate(survivors[si])),
                   batch, metric, weights, 1);
      scored[si] = score_of(survivors[si], rep);
    });
    const std::uint64_t delta = handle.cache->misses() - before;
    spent += delta;
    result.rungs.push_back(RungStat{r, b, survivors.size(), delta});

    std::sort(scored.begin(), scored.end(), better);
    const std::size_t keep = (scored.size() + 1) / 2;
    survivors.clear();
    for (std::size_t i = 0; i < keep; ++i) survivors.push_back(scored[i].index);

    if (survivors.size() == 1 || b >= n) break;
  }
  result.ledger.rung_misses = spent;

  // finalists go to dev; selection needs these reports, so they are tracked
  // outside the search budget
  const std::uint64_t dev_before = handle.cache->misses();
  std::vector<EvalReport> dev_reports(survivors.size());
  parallel_for(survivors.size(), ctx.threads, [&](std::size_t si) {
    dev_reports[si] =
        evaluate(make_pipeline(ctx, handle.lm, space.candidate(survivors[si])),
                 dev, metric, weights, 1);
  });
  result.ledger.dev_misses = handle.cache->misses() - dev_before;

  std::vector<Scored> finalists(survivors.size());
  for (std::size_t si = 0; si < survivors.size(); ++si) {
    finalists[si] = score_of(survivors[si], dev_reports[si]);
  }

  std::size_t chosen = 0;
  bool feasible = false;
  for (std::size_t si = 0; si < finalists.size(); ++si) {
    if (finalists[si].hallucination <= weights.epsilon) {
      if (!feasible || better(finalists[si], finalists[chosen])) {
        chosen = si;
        feasible = true;
      }
    }
  }
  if (!feasible) {
    for (std::size_t si = 1; si < finalists.size(); ++si) {
      if (lower_h(finalists[si], finalists[chosen])) chosen = si;
    }
  }

  result.best_index = survivors[chosen];
  result.best = space.candidate(result.best_index);
  result.report = std::move(dev_reports[chosen]);
  result.feasible = feasible;
  return result;
}

OptimizerState optimize_step(OptimizerState state, const Dataset& d,
                             MetricKind metric, const ObjectiveWeights& weights,
                             const SearchContext& ctx) {
  if (d.examples.empty()) throw ValidationError("refinement data is empty");
  CacheHandle handle = ensure_cached(ctx.lm);
  const std::size_t bsz = std::min<std::size_t>(8, d.size());
  Dataset batch = seeded_prefix(d, derive_seed(state.seed, "refine"), bsz);

  std::vector<PromptParams> neighbors;
  auto push_neighbor = [&](PromptParams p) {
    if (p == state.incumbent) return;
    if (std::find(neighbors.begin(), neighbors.end(), p) == neighbors.end()) {
      neighbors.push_back(std::move(p));
    }
  };
  push_neighbor(apply_rewrite(
      state.incumbent,
      RewriteRule{state.incumbent.use_reasoning
                      ? RewriteRule::Kind::remove_reasoning
                      : RewriteRule::Kind::add_reasoning}));
  push_neighbor(apply_rewrite(
      state.incumbent, RewriteRule{RewriteRule::Kind::compress_instruction}));
  push_neighbor(apply_rewrite(
      state.incumbent, RewriteRule{RewriteRule::Kind::add_format_constraint}));
  for (const std::vector<Demo>& pool : state.pool.demo_sets) {
    RewriteRule r{RewriteRule::Kind::set_demo_count};
    r.demo_count = static_cast<int>(pool.size());
    r.demo_pool = pool;
    push_neighbor(apply_rewrite(state.incumbent, r));
  }
  for (const RetrievalParams& rp : state.pool.retrieval_options) {
    RewriteRule r{RewriteRule::Kind::set_retrieval};
    r.retrieval = rp;
    push_neighbor(apply_rewrite(state.incumbent, r));
  }

  const bool need_incumbent = state.incumbent_report.n_evaluated == 0;
  const std::uint64_t projected =
      static_cast<std::uint64_t>(neighbors.size() + (need_incumbent ? 1 : 0)) *
      bsz;
  if (projected > state.budget) {
    // the round could not be guaranteed within budget, abandon it whole
    state.budget_exhausted = true;
    return state;
  }

  const std::uint64_t before = handle.cache->misses();
  if (need_incumbent) {
    state.incumbent_report = evaluate(
        make_pipeline(ctx, handle.lm, state.incumbent), batch, metric, weights,
        1);
  }
  std::vector<EvalReport> reports(neighbors.size());
  parallel_for(neighbors.size(), ctx.threads, [&](std::size_t i) {
    reports[i] = evaluate(make_pipeline(ctx, handle.lm, neighbors[i]), batch,
                          metric, weights, 1);
  });
  const std::uint64_t made = handle.cache->misses() - before;
  state.budget -= std::min(state.budget, made);

  auto key = [](const EvalReport& r) {
    return std::make_tuple(r.mean_score, r.accuracy, -r.hallucination_rate,
                           -r.mean_prompt_tokens);
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (key(reports[i]) > key(reports[best])) best = i;
  }
  // acceptance demands a strict win so converged states are fixed points
  if (!reports.empty() && key(reports[best]) > key(state.incumbent_report)) {
    state.incumbent = neighbors[best];
    state.incumbent_report = std::move(reports[best]);
  }

  state.t += 1;
  state.history.push_back(HistoryEntry{state.t, params_digest(state.incumbent),
                                       state.incumbent_report.mean_score});
  return state;
}

CompiledArtifact compile(const TaskSignature& sig, const Dataset& train,
                         const Dataset& dev,
                         const std::optional<Corpus>& corpus,
                         std::shared_ptr<LMClient> lm,
                         const CompileConfig& config) {
  validate_signature(sig);
  if (train.examples.empty()) throw ValidationError("train split is empty");
  if (dev.examples.empty()) throw ValidationError("dev split is empty");
  validate_dataset(train, sig);
  validate_dataset(dev, sig);
  if (config.refine_rounds < 0) {
    throw ValidationError("refine_rounds must be >= 0");
  }

  CacheHandle handle = ensure_cached(lm);
  SearchContext ctx;
  ctx.signature = sig;
  ctx.lm = handle.lm;
  ctx.model_id = config.model_id;
  ctx.threads = config.threads;

  CandidateSpace space;
  space.instructions = propose_instructions(sig, config.n_instructions,
                                            *handle.lm, config.seed,
                                            config.model_id);
  const double threshold =
      config.bootstrap_threshold >= 0.0
          ? config.bootstrap_threshold
          : (config.metric == MetricKind::exact_match ? 1.0 : 0.5);
  Pipeline boot = make_pipeline(ctx, handle.lm,
                                PromptParams{sig.instruction, {}, false, {}});
  space.demo_sets =
      bootstrap_demos(boot, train, config.metric, threshold, config.max_demos);
  space.reasoning_options = {false, true};
  space.retrieval_options = {RetrievalParams{0, QueryTemplate::raw_input}};

  std::shared_ptr<const Index> index;
  if (corpus.has_value()) {
    index = std::make_shared<Index>(build_index(*corpus));
    ctx.retriever = index;
    space.retrieval_options = {
        RetrievalParams{0, QueryTemplate::raw_input},
        RetrievalParams{2, QueryTemplate::raw_input},
        RetrievalParams{2, QueryTemplate::instruction_prefixed},
        RetrievalParams{4, QueryTemplate::raw_input},
        RetrievalParams{4, QueryTemplate::instruction_prefixed},
    };
  }

  SearchResult searched =
      mipro_search(space, train, dev, config.metric, config.weights,
                   config.budget, config.seed, ctx);

  CompiledArtifact artifact;
  artifact.signature = sig;
  artifact.params = searched.best;
  artifact.report = searched.report;
  artifact.feasible = searched.feasible;
  artifact.seed = config.seed;
  artifact.config = config;
  artifact.ledger = searched.ledger;

  // refinement only makes sense from a feasible start; an infeasible result
  // is reported as-is so the caller sees the honest minimum-H candidate
  if (config.refine_rounds > 0 && searched.feasible) {
    OptimizerState st;
    st.incumbent = searched.best;
    st.pool = space;
    st.budget =
        config.budget - std::min(config.budget, searched.ledger.rung_misses);
    st.seed = config.seed;

    const std::uint64_t refine_before = handle.cache->misses();
    for (int round = 0; round < config.refine_rounds; ++round) {
      st = optimize_step(st, train, config.metric, config.weights, ctx);
    }
    artifact.ledger.refine_misses = handle.cache->misses() - refine_before;
    artifact.history = st.history;

    if (!(st.incumbent == searched.best)) {
      const std::uint64_t dev_before = handle.cache->misses();
      EvalReport refined_dev =
          evaluate(make_pipeline(ctx, handle.lm, st.incumbent), dev,
                   config.metric, config.weights, 1);
      artifact.ledger.dev_misses += handle.cache->misses() - dev_before;
      if (refined_dev.hallucination_rate <= config.weights.epsilon) {
        artifact.params = st.incumbent;
        artifact.report = std::move(refined_dev);
        artifact.feasible = true;
      }
      // otherwise the refined params regressed feasibility on dev: revert
    }
  }
  return artifact;
}

std::string artifact_to_json(const CompiledArtifact& artifact) {
  json j;
  j["signature"] =
      parse_json(serialize_signature(artifact.signature), "signature");
  j["params"] = params_to_json(artifact.params);
  j["report"] = parse_json(report_to_json(artifact.report), "report");
  j["feasible"] = artifact.feasible;
  j["seed"] = artifact.seed;
  json config;
  config["n_instructions"] = artifact.config.n_instructions;
  config["max_demos"] = artifact.config.max_demos;
  config["bootstrap_threshold"] = artifact.config.bootstrap_threshold;
  config["refine_rounds"] = artifact.config.refine_rounds;
  config["budget"] = artifact.config.budget;
  config["seed"] = artifact.config.seed;
  config["metric"] = metric_name(artifact.config.metric);
  config["alpha"] = artifact.config.weights.alpha;
  config["beta"] = artifact.config.weights.beta;
  config["gamma"] = artifact.config.weights.gamma;
  config["epsilon"] = artifact.config.weights.epsilon;
  config["model_id"] = artifact.config.model_id;
  j["config"] = std::move(config);
  json history = json::array();
  for (const HistoryEntry& h : artifact.history) {
    history.push_back(json{
        {"t", h.t}, {"candidate", h.candidate}, {"J", h.objective}});
  }
  j["history"] = std::move(history);
  return j.dump(2) + "\n";
}

CompiledArtifact artifact_from_json(const std::string& text) {
  json j = parse_json(text, "artifact");
  for (const char* key :
       {"signature", "params", "report", "feasible", "seed", "config",
        "history"}) {
    require_key(j, key, "artifact");
  }
  CompiledArtifact a;
  a.signature = parse_signature(j.at("signature").dump());
  a.params = params_from_json(j.at("params"));
  a.report = report_from_json(j.at("report").dump());
  if (!j.at("feasible").is_boolean()) {
    throw ValidationError("artifact: \"feasible\" must be a boolean");
  }
  a.feasible = j.at("feasible").get<bool>();
  a.seed = j.at("seed").get<std::uint64_t>();

  const json& c = j.at("config");
  a.config.n_instructions = c.value("n_instructions", 4);
  a.config.max_demos = c.value("max_demos", 4);
  a.config.bootstrap_threshold = c.value("bootstrap_threshold", -1.0);
  a.config.refine_rounds = c.value("refine_rounds", 2);
  a.config.budget = c.value("budget", std::uint64_t{10000});
  a.config.seed = c.value("seed", std::uint64_t{0});
  a.config.metric = metric_from_name(c.value("metric", "em"));
  a.config.weights.alpha = c.value("alpha", 1.0);
  a.config.weights.beta = c.value("beta", 1.0);
  a.config.weights.gamma = c.value("gamma", 0.1);
  a.config.weights.epsilon = c.value("epsilon", 0.1);
  a.config.model_id = c.value("model_id", "sim");

  for (const json& h : j.at("history")) {
    a.history.push_back(HistoryEntry{h.value("t", 0), h.value("candidate", ""),
                                     h.value("J", 0.0)});
  }
  return a;
}

void write_artifact_file(const CompiledArtifact& artifact,
                         const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << artifact_to_json(artifact);
    out.flush();
    if (!out) throw Error("failed while writing " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw Error("cannot move " + tmp + " into place: " + ec.message());
  }
}

CompiledArtifact load_artifact_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return artifact_from_json(text);
}

}  // namespace promptforge
