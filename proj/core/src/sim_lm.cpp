#include "promptforge/sim_lm.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "promptforge/errors.hpp"
#include "promptforge/hashing.hpp"
#include "promptforge/prompt.hpp"

namespace promptforge {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace {

std::size_t count_occurrences(std::string_view haystack,
                              std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

std::array<double, 4> sim_features(std::string_view prompt,
                                   const std::vector<std::string>& keywords) {
  double reasoning =
      prompt.find("think step by step") != std::string_view::npos ? 1.0 : 0.0;
  auto demos = static_cast<double>(
      std::min<std::size_t>(count_occurrences(prompt, "### Example"), 4));
  double hits = 0.0;
  for (const std::string& kw : keywords) {
    if (!kw.empty() && prompt.find(kw) != std::string_view::npos) hits += 1.0;
  }
  double context =
      prompt.find("### Context") != std::string_view::npos ? 1.0 : 0.0;
  return {reasoning, demos, hits, context};
}

double sim_p_correct(const SimProfile& profile, std::string_view prompt) {
  const auto phi = sim_features(prompt, profile.keywords);
  double z = profile.bias;
  for (const auto& [name, weight] : profile.feature_weights) {
    for (std::size_t i = 0; i < kSimFeatureNames.size(); ++i) {
      if (name == kSimFeatureNames[i]) {
        z += weight * phi[i];
        break;
      }
    }
  }
  return logistic(z);
}

LMResponse sim_generate(const SimProfile& profile, const std::string& example_id,
                        const LMRequest& req) {
  auto it = profile.answer_key.find(example_id);
  if (it == profile.answer_key.end()) {
    throw LMError("simulated client: unknown example id \"" + example_id +
                  "\"");
  }
  std::string outcome_key = req.prompt;
  outcome_key += '\x1f';
  outcome_key += example_id;
  outcome_key += '\x1f';
  outcome_key += std::to_string(profile.seed);
  const double u = uniform01(fnv1a64(outcome_key));
  const double p = sim_p_correct(profile, req.prompt);
  std::string text = u < p ? it->second : profile.wrong_text;

  // honor the response token bound
  int tokens = prompt_length(text);
  if (tokens > req.max_tokens) {
    std::istringstream words(text);
    std::string word, kept;
    for (int i = 0; i < req.max_tokens && words >> word; ++i) {
      if (i) kept += ' ';
      kept += word;
    }
    text = kept;
    tokens = req.max_tokens;
  }

  LMResponse resp;
  resp.text = std::move(text);
  resp.usage.prompt_tokens = prompt_length(req.prompt);
  resp.usage.completion_tokens = tokens;
  resp.source = LMSource::simulated;
  return resp;
}

SimProfile parse_sim_profile(const std::string& text) {
  json j = parse_json(text, "sim profile");
  SimProfile profile;
  if (j.contains("feature_weights")) {
    for (const auto& [name, w] : j.at("feature_weights").items()) {
      bool known = false;
      for (std::string_view f : kSimFeatureNames) known |= (name == f);
      if (!known) {
        throw ValidationError("sim profile: unknown feature \"" + name + "\"");
      }
      profile.feature_weights[name] = w.get<double>();
    }
  }
  profile.bias = j.value("bias", 0.0);
  if (j.contains("keywords")) {
    for (const json& k : j.at("keywords")) {
      profile.keywords.push_back(k.get<std::string>());
    }
  }
  if (j.contains("answer_key")) {
    for (const auto& [id, ans] : j.at("answer_key").items()) {
      profile.answer_key[id] = ans.get<std::string>();
    }
  }
  profile.wrong_text = j.value("wrong_text", profile.wrong_text);
  profile.seed = j.value("seed", std::uint64_t{0});
  return profile;
}

SimProfile load_sim_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open sim profile: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sim_profile(buf.str());
}

}  // namespace promptforge
