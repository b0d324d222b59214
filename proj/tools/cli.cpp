#include "cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "promptforge/dataset.hpp"
#include "promptforge/errors.hpp"
#include "promptforge/hashing.hpp"
#include "promptforge/http_lm.hpp"
#include "promptforge/metrics.hpp"
#include "promptforge/optimizer.hpp"
#include "promptforge/pipeline.hpp"
#include "promptforge/report.hpp"
#include "promptforge/retrieval.hpp"
#include "promptforge/run_store.hpp"
#include "promptforge/signature.hpp"
#include "promptforge/sim_lm.hpp"

namespace promptforge {

namespace {

struct LMFlags {
  std::string lm = "sim";
  std::string sim_profile;
  std::string model = "sim";
  std::string base_url;
  std::string api_key;
  std::string cache_path;
  CLI::Option* model_opt = nullptr;
};

void add_lm_flags(CLI::App* cmd, LMFlags& f) {
  cmd->add_option("--lm", f.lm, "backend: sim or http")
      ->check(CLI::IsMember({"sim", "http"}))
      ->capture_default_str();
  cmd->add_option("--sim-profile", f.sim_profile,
                  "simulator profile json (required with --lm sim)");
  f.model_opt =
      cmd->add_option("--model", f.model, "model id sent with every call")
          ->capture_default_str();
  cmd->add_option("--base-url", f.base_url,
                  "http endpoint base url (default: PROMPTFORGE_BASE_URL)");
  cmd->add_option("--api-key", f.api_key,
                  "bearer token (default: PROMPTFORGE_API_KEY)");
  cmd->add_option("--cache", f.cache_path,
                  "call cache jsonl, loaded then appended to");
}

std::shared_ptr<CachedLM> build_lm(const LMFlags& f) {
  std::shared_ptr<LMClient> base;
  if (f.lm == "sim") {
    if (f.sim_profile.empty()) {
      throw ValidationError("--sim-profile is required with --lm sim");
    }
    base = std::make_shared<SimLM>(load_sim_profile(f.sim_profile));
  } else {
    HttpConfig cfg;
    cfg.base_url = f.base_url;
    cfg.api_key = f.api_key;
    base = std::make_shared<HttpLM>(cfg);
  }
  auto cache = std::make_shared<CallCache>();
  if (!f.cache_path.empty()) {
    cache->load(f.cache_path);
    cache->persist_to(f.cache_path);
  }
  return std::make_shared<CachedLM>(std::move(base), std::move(cache));
}

struct WeightFlags {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 0.1;
  double epsilon = 0.1;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* beta_opt = nullptr;
  CLI::Option* gamma_opt = nullptr;
  CLI::Option* epsilon_opt = nullptr;
};

void add_weight_flags(CLI::App* cmd, WeightFlags& w) {
  w.alpha_opt = cmd->add_option("--alpha", w.alpha, "accuracy weight");
  w.beta_opt = cmd->add_option("--beta", w.beta, "hallucination weight");
  w.gamma_opt = cmd->add_option("--gamma", w.gamma, "token cost weight");
  w.epsilon_opt =
      cmd->add_option("--epsilon", w.epsilon, "hallucination rate cap");
}

// explicit flags win; anything not given falls back to `base`
ObjectiveWeights resolve_weights(const WeightFlags& w, ObjectiveWeights base) {
  if (w.alpha_opt->count() > 0) base.alpha = w.alpha;
  if (w.beta_opt->count() > 0) base.beta = w.beta;
  if (w.gamma_opt->count() > 0) base.gamma = w.gamma;
  if (w.epsilon_opt->count() > 0) base.epsilon = w.epsilon;
  return base;
}

ObjectiveWeights weights_from_constraints(const ConstraintSet& c) {
  ObjectiveWeights w;
  w.alpha = c.alpha;
  w.beta = c.beta;
  w.epsilon = c.epsilon;
  return w;
}

void print_report_summary(std::ostream& out, const EvalReport& r,
                          bool feasible) {
  out << "feasible: " << (feasible ? "true" : "false") << "\n"
      << "J: " << format_number(r.mean_score) << "\n"
      << "A: " << format_number(r.accuracy) << "\n"
      << "H: " << format_number(r.hallucination_rate) << "\n"
      << "mean_prompt_tokens: " << format_number(r.mean_prompt_tokens) << "\n";
}

std::map<std::string, std::string> parse_input_pairs(
    const std::vector<std::string>& pairs, const std::string& json_path) {
  std::map<std::string, std::string> x;
  if (!json_path.empty()) {
    std::string text;
    if (json_path == "-") {
      text.assign(std::istreambuf_iterator<char>(std::cin),
                  std::istreambuf_iterator<char>());
    } else {
      std::ifstream in(json_path, std::ios::binary);
      if (!in) throw Error("cannot open " + json_path);
      text.assign(std::istreambuf_iterator<char>(in),
                  std::istreambuf_iterator<char>());
    }
    // reuse the dataset line reader: a bare {"field": "value"} object is a
    // valid inputs map for a one-line dataset without outputs
    std::istringstream line("{\"id\":\"adhoc\",\"inputs\":" + text +
                            ",\"outputs\":{}}");
    Dataset d = load_dataset(line);
    x = d.examples.front().inputs;
  }
  for (const std::string& pair : pairs) {
    const std::size_t eq = pair.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ValidationError("--input expects field=value, got \"" + pair +
                            "\"");
    }
    x[pair.substr(0, eq)] = pair.substr(eq + 1);
  }
  return x;
}

void record_run(const std::string& runs_dir, const std::string& command,
                const std::vector<std::string>& input_parts,
                const std::string& artifact_path,
                const std::string& report_json, double wall_time_s,
                std::ostream& out) {
  if (runs_dir.empty()) return;
  RunStore store(runs_dir);
  RunRecord rec;
  rec.command = command;
  rec.inputs_digest = to_hex(make_inputs_digest(input_parts));
  rec.artifact_path = artifact_path;
  rec.report_json = report_json;
  rec.wall_time_s = wall_time_s;
  out << "run_id: " << store.add(std::move(rec)) << "\n";
}

struct CompileVars {
  std::string signature_path;
  std::string train_path;
  std::string dev_path;
  std::string corpus_path;
  std::string out_path = "artifact.json";
  std::string runs_dir;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  std::uint64_t budget = 10000;
  std::string metric = "em";
  int n_instructions = 4;
  int max_demos = 4;
  int refine_rounds = 2;
  double bootstrap_threshold = -1.0;
  int threads = 1;
  LMFlags lm;
  WeightFlags weights;
};

int run_compile(const CompileVars& v, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  TaskSignature sig = load_signature_file(v.signature_path);
  Dataset train = load_dataset_file(v.train_path);
  Dataset dev;
  if (!v.dev_path.empty()) {
    dev = load_dataset_file(v.dev_path);
  } else {
    auto split = split_dataset(train, v.train_fraction, v.seed);
    train = std::move(split.first);
    dev = std::move(split.second);
  }
  std::optional<Corpus> corpus;
  if (!v.corpus_path.empty()) corpus = load_corpus_file(v.corpus_path);

  CompileConfig cfg;
  cfg.n_instructions = v.n_instructions;
  cfg.max_demos = v.max_demos;
  cfg.bootstrap_threshold = v.bootstrap_threshold;
  cfg.refine_rounds = v.refine_rounds;
  cfg.budget = v.budget;
  cfg.seed = v.seed;
  cfg.metric = metric_from_name(v.metric);
  cfg.weights = resolve_weights(v.weights,
                                weights_from_constraints(sig.constraints));
  cfg.model_id = v.lm.model;
  cfg.threads = v.threads;

  CompiledArtifact artifact =
      compile(sig, train, dev, corpus, build_lm(v.lm), cfg);
  write_artifact_file(artifact, v.out_path);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  print_report_summary(out, artifact.report, artifact.feasible);
  out << "artifact: " << v.out_path << "\n";
  record_run(v.runs_dir, "compile",
             {v.signature_path, v.train_path, v.dev_path, v.corpus_path,
              std::to_string(v.seed), std::to_string(v.budget)},
             v.out_path, report_to_json(artifact.report), wall, out);
  return 0;
}

struct EvalVars {
  std::string signature_path;
  std::string artifact_path;
  std::string params_path;
  std::string data_path;
  std::string corpus_path;
  std::string out_path;
  std::string runs_dir;
  std::string metric = "em";
  CLI::Option* metric_opt = nullptr;
  int threads = 1;
  LMFlags lm;
  WeightFlags weights;
};

int run_eval(const EvalVars& v, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  TaskSignature sig;
  PromptParams params;
  ObjectiveWeights base_weights;
  MetricKind metric = metric_from_name(v.metric);
  LMFlags lmflags = v.lm;

  if (!v.artifact_path.empty()) {
    CompiledArtifact artifact = load_artifact_file(v.artifact_path);
    sig = artifact.signature;
    params = artifact.params;
    base_weights = artifact.config.weights;
    if (v.metric_opt->count() == 0) metric = artifact.config.metric;
    if (lmflags.model_opt->count() == 0) lmflags.model = artifact.config.model_id;
  } else {
    if (v.signature_path.empty()) {
      throw ValidationError("--signature is required with --params");
    }
    sig = load_signature_file(v.signature_path);
    params = params_from_json_text([&] {
      std::ifstream in(v.params_path, std::ios::binary);
      if (!in) throw Error("cannot open " + v.params_path);
      return std::string(std::istreambuf_iterator<char>(in),
                         std::istreambuf_iterator<char>());
    }());
    base_weights = weights_from_constraints(sig.constraints);
  }

  Dataset data = load_dataset_file(v.data_path);
  validate_dataset(data, sig);

  Pipeline pl;
  pl.signature = sig;
  pl.params = params;
  pl.lm = build_lm(lmflags);
  pl.model_id = lmflags.model;
  if (!v.corpus_path.empty()) {
    pl.retriever = std::make_shared<Index>(build_index(
        load_corpus_file(v.corpus_path)));
  }

  const ObjectiveWeights weights = resolve_weights(v.weights, base_weights);
  EvalReport report = evaluate(pl, data, metric, weights, v.threads);
  const std::string json = report_to_json(report);
  out << json;
  if (!v.out_path.empty()) {
    std::ofstream f(v.out_path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + v.out_path);
    f << json;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  record_run(v.runs_dir, "eval",
             {v.artifact_path, v.params_path, v.data_path, v.corpus_path},
             v.artifact_path, json, wall, out);
  return 0;
}

struct RunVars {
  std::string artifact_path;
  std::string corpus_path;
  std::string example_id = "adhoc";
  std::vector<std::string> inputs;
  std::string input_json;
  bool show_prompt = false;
  LMFlags lm;
};

int run_single(const RunVars& v, std::ostream& out, std::ostream& err) {
  CompiledArtifact artifact = load_artifact_file(v.artifact_path);
  LMFlags lmflags = v.lm;
  if (lmflags.model_opt->count() == 0) lmflags.model = artifact.config.model_id;

  Pipeline pl;
  pl.signature = artifact.signature;
  pl.params = artifact.params;
  pl.lm = build_lm(lmflags);
  pl.model_id = lmflags.model;
  if (!v.corpus_path.empty()) {
    pl.retriever = std::make_shared<Index>(build_index(
        load_corpus_file(v.corpus_path)));
  }

  const std::map<std::string, std::string> x =
      parse_input_pairs(v.inputs, v.input_json);
  PipelineResult result = run_pipeline(pl, x, v.example_id);
  if (v.show_prompt) {
    err << result.prompt << "\n";
  }
  out << result.output << "\n";
  return 0;
}

struct ReportVars {
  std::string baseline_path;
  std::string optimized_path;
  std::string csv_path;
};

int run_report(const ReportVars& v, std::ostream& out) {
  const std::vector<ComparisonRow> rows = compare_operands(
      load_report_operands(v.baseline_path),
      load_report_operands(v.optimized_path));
  out << comparison_table_text(rows);
  if (!v.csv_path.empty()) {
    std::ofstream f(v.csv_path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + v.csv_path);
    f << comparison_table_csv(rows);
  }
  return 0;
}

struct InspectVars {
  std::string artifact_path;
  std::string runs_dir;
};

int run_inspect(const InspectVars& v, std::ostream& out) {
  if (v.artifact_path.empty() == v.runs_dir.empty()) {
    throw ValidationError("inspect needs exactly one of --artifact, --runs-dir");
  }
  if (!v.runs_dir.empty()) {
    for (const RunRecord& rec : RunStore(v.runs_dir).list()) {
      out << rec.run_id << "  " << rec.command << "  "
          << format_number(rec.wall_time_s) << "s\n";
    }
    return 0;
  }
  CompiledArtifact a = load_artifact_file(v.artifact_path);
  out << "name: " << a.signature.name << "\n"
      << "instruction: " << a.params.instruction << "\n"
      << "demos: " << a.params.demos.size() << "\n"
      << "reasoning: " << (a.params.use_reasoning ? "on" : "off") << "\n"
      << "retrieval: k=" << a.params.retrieval.k << " "
      << query_template_name(a.params.retrieval.query_template) << "\n";
  print_report_summary(out, a.report, a.feasible);
  out << "metric: " << a.report.metric << "\n"
      << "seed: " << a.seed << "\n"
      << "history: " << a.history.size() << " rounds\n";
  for (const HistoryEntry& h : a.history) {
    out << "  t=" << h.t << " J=" << format_number(h.objective) << " "
        << h.candidate << "\n";
  }
  return 0;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err) {
  CLI::App app{"declarative prompt pipelines: compile, evaluate, run, report"};
  app.name("promptforge");
  app.require_subcommand(1);

  CompileVars cv;
  CLI::App* compile_cmd =
      app.add_subcommand("compile", "search for the best prompt parameters");
  compile_cmd->add_option("--signature", cv.signature_path, "task signature json")
      ->required();
  compile_cmd->add_option("--train", cv.train_path, "training jsonl")->required();
  compile_cmd->add_option("--dev", cv.dev_path,
                          "dev jsonl (default: split from --train)");
  compile_cmd->add_option("--train-fraction", cv.train_fraction,
                          "train share when splitting")
      ->capture_default_str();
  compile_cmd->add_option("--corpus", cv.corpus_path, "retrieval corpus jsonl");
  compile_cmd->add_option("--seed", cv.seed, "search seed")->capture_default_str();
  compile_cmd->add_option("--budget", cv.budget, "max fresh lm calls")
      ->capture_default_str();
  compile_cmd->add_option("--metric", cv.metric, "em, f1 or bleu")
      ->check(CLI::IsMember({"em", "f1", "bleu"}))
      ->capture_default_str();
  compile_cmd->add_option("--n-instructions", cv.n_instructions,
                          "instruction variants to propose")
      ->capture_default_str();
  compile_cmd->add_option("--max-demos", cv.max_demos, "max demos per prompt")
      ->capture_default_str();
  compile_cmd->add_option("--refine-rounds", cv.refine_rounds,
                          "hill-climb rounds after search")
      ->capture_default_str();
  compile_cmd->add_option("--bootstrap-threshold", cv.bootstrap_threshold,
                          "demo acceptance score (default 1.0 em, 0.5 others)");
  compile_cmd->add_option("--threads", cv.threads, "candidate evaluation threads")
      ->check(CLI::Range(1, 64))
      ->capture_default_str();
  compile_cmd->add_option("--out", cv.out_path, "artifact output path")
      ->capture_default_str();
  compile_cmd->add_option("--runs-dir", cv.runs_dir, "record this run here");
  add_lm_flags(compile_cmd, cv.lm);
  add_weight_flags(compile_cmd, cv.weights);

  EvalVars ev;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "evaluate params or an artifact on a dataset");
  eval_cmd->add_option("--signature", ev.signature_path,
                       "task signature json (with --params)");
  eval_cmd->add_option("--artifact", ev.artifact_path, "compiled artifact json");
  eval_cmd->add_option("--params", ev.params_path, "bare params json");
  eval_cmd->add_option("--data", ev.data_path, "dataset jsonl")->required();
  eval_cmd->add_option("--corpus", ev.corpus_path, "retrieval corpus jsonl");
  ev.metric_opt = eval_cmd->add_option("--metric", ev.metric, "em, f1 or bleu")
                      ->check(CLI::IsMember({"em", "f1", "bleu"}));
  eval_cmd->add_option("--threads", ev.threads, "evaluation threads")
      ->check(CLI::Range(1, 64))
      ->capture_default_str();
  eval_cmd->add_option("--out", ev.out_path, "also write the report here");
  eval_cmd->add_option("--runs-dir", ev.runs_dir, "record this run here");
  add_lm_flags(eval_cmd, ev.lm);
  add_weight_flags(eval_cmd, ev.weights);

  RunVars rv;
  CLI::App* run_cmd = app.add_subcommand("run", "run one input through an artifact");
  run_cmd->add_option("--artifact", rv.artifact_path, "compiled artifact json")
      ->required();
  run_cmd->add_option("--corpus", rv.corpus_path, "retrieval corpus jsonl");
  run_cmd->add_option("--input", rv.inputs, "input field as field=value");
  run_cmd->add_option("--input-json", rv.input_json,
                      "json object of inputs, or - for stdin");
  run_cmd->add_option("--example-id", rv.example_id,
                      "simulator answer key id")
      ->capture_default_str();
  run_cmd->add_flag("--show-prompt", rv.show_prompt,
                    "print the rendered prompt to stderr");
  add_lm_flags(run_cmd, rv.lm);

  ReportVars pv;
  CLI::App* report_cmd =
      app.add_subcommand("report", "baseline vs optimized comparison table");
  report_cmd->add_option("--baseline", pv.baseline_path, "baseline operands json")
      ->required();
  report_cmd->add_option("--optimized", pv.optimized_path,
                         "optimized operands json")
      ->required();
  report_cmd->add_option("--csv", pv.csv_path, "also write csv here");

  InspectVars iv;
  CLI::App* inspect_cmd =
      app.add_subcommand("inspect", "summarize an artifact or a runs directory");
  inspect_cmd->add_option("--artifact", iv.artifact_path, "compiled artifact json");
  inspect_cmd->add_option("--runs-dir", iv.runs_dir, "runs directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (compile_cmd->parsed()) return run_compile(cv, out);
    if (eval_cmd->parsed()) {
      if (ev.artifact_path.empty() == ev.params_path.empty()) {
        throw ValidationError("eval needs exactly one of --artifact, --params");
      }
      return run_eval(ev, out);
    }
    if (run_cmd->parsed()) return run_single(rv, out, err);
    if (report_cmd->parsed()) return run_report(pv, out);
    if (inspect_cmd->parsed()) return run_inspect(iv, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const LMError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace promptforge
