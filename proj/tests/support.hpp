#pragma once

// shared fixture loaders and tiny deterministic generators for the tests

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include "promptforge/dataset.hpp"
#include "promptforge/hashing.hpp"
#include "promptforge/lm_client.hpp"
#include "promptforge/optimizer.hpp"
#include "promptforge/prompt.hpp"
#include "promptforge/retrieval.hpp"
#include "promptforge/signature.hpp"
#include "promptforge/sim_lm.hpp"

namespace pf = promptforge;

inline std::string fixture(const std::string& name) {
  return std::string(PROMPTFORGE_FIXTURE_DIR "/") + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

inline std::string temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("promptforge_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline pf::TaskSignature qa_signature() {
  return pf::load_signature_file(fixture("qa.sig.json"));
}

inline pf::Dataset train8() {
  return pf::load_dataset_file(fixture("train.jsonl"));
}
inline pf::Dataset dev4() { return pf::load_dataset_file(fixture("dev.jsonl")); }
inline pf::Dataset poisoned_dev() {
  return pf::load_dataset_file(fixture("dev_poisoned.jsonl"));
}
inline pf::Dataset eval4() {
  return pf::load_dataset_file(fixture("eval4.jsonl"));
}

inline pf::SimProfile golden_profile() {
  return pf::load_sim_profile(fixture("sim_golden.json"));
}
inline pf::SimProfile mixed_profile() {
  return pf::load_sim_profile(fixture("sim_mixed.json"));
}
inline pf::SimProfile eval4_profile() {
  return pf::load_sim_profile(fixture("sim_eval4.json"));
}

inline std::shared_ptr<pf::CachedLM> cached_sim(const pf::SimProfile& profile) {
  return std::make_shared<pf::CachedLM>(std::make_shared<pf::SimLM>(profile),
                                        std::make_shared<pf::CallCache>());
}

inline std::vector<std::string> instr3() {
  return {"Answer the question.", "Answer the question precisely.",
          "Read the question and answer it with a single short factual "
          "phrase."};
}

inline std::vector<pf::Demo> demos2() {
  return {pf::Demo{{{"question", "what is the capital of france"}}, "paris"},
          pf::Demo{{{"question", "how many legs does a spider have"}}, "eight"}};
}

// the golden 12-candidate space: 3 instructions x 2 demo sets x 2 reasoning
inline pf::CandidateSpace space12() {
  pf::CandidateSpace s;
  s.instructions = instr3();
  s.demo_sets = {{}, demos2()};
  s.reasoning_options = {false, true};
  s.retrieval_options = {pf::RetrievalParams{0, pf::QueryTemplate::raw_input}};
  return s;
}

// the 8-candidate space compile builds for the golden task: the four
// deterministic instruction templates, no bootstrapped demos, both reasoning
// settings (hardcoded here so tests stay independent of the implementation)
inline pf::CandidateSpace compile_space8() {
  pf::CandidateSpace s;
  s.instructions = {
      "Answer the question.",
      "Do the following: Answer the question.",
      "Answer the question. Answer with the final value only.",
      "Answer the question. Use only the provided context.",
  };
  s.demo_sets = {{}};
  s.reasoning_options = {false, true};
  s.retrieval_options = {pf::RetrievalParams{0, pf::QueryTemplate::raw_input}};
  return s;
}

inline pf::SearchContext sim_ctx(const std::shared_ptr<pf::LMClient>& lm,
                                 int threads = 1) {
  pf::SearchContext ctx;
  ctx.signature = qa_signature();
  ctx.lm = lm;
  ctx.model_id = "sim";
  ctx.threads = threads;
  return ctx;
}

// deterministic token strings for property tests
inline std::string random_words(pf::SplitMix64& rng, int max_words) {
  static const char* kWords[] = {"cat",  "dog",   "sat",  "mat",  "paris",
                                 "blue", "eight", "sky",  "honey", "green",
                                 "the",  "a",     "on",   "of",   "legs"};
  const int n = static_cast<int>(rng.next() % (max_words + 1));
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += kWords[rng.next() % 15];
  }
  return out;
}
