#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "promptforge/lm_client.hpp"

namespace promptforge {

// fixed feature order for the simulator's hidden linear model
inline constexpr std::array<std::string_view, 4> kSimFeatureNames = {
    "has_reasoning_directive", "demo_count", "keyword_hits",
    "context_present"};

struct SimProfile {
  std::map<std::string, double> feature_weights;  // names from the fixed set
  double bias = 0.0;
  std::vector<std::string> keywords;  // substrings counted by keyword_hits
  std::map<std::string, std::string> answer_key;  // example id -> correct text
  std::string wrong_text = "unknown";
  std::uint64_t seed = 0;
};

SimProfile parse_sim_profile(const std::string& text);
SimProfile load_sim_profile(const std::string& path);

double logistic(double z);

// phi = [contains "think step by step", min(#"### Example", 4),
//        #distinct keywords present, contains "### Context"]
std::array<double, 4> sim_features(std::string_view prompt,
                                   const std::vector<std::string>& keywords);

// logistic(bias + w . phi(prompt))
double sim_p_correct(const SimProfile& profile, std::string_view prompt);

// outcome u = uniform01(fnv1a64(prompt \x1f example_id \x1f decimal(seed)));
// correct answer iff u < p_correct, wrong_text otherwise
LMResponse sim_generate(const SimProfile& profile, const std::string& example_id,
                        const LMRequest& req);

class SimLM final : public LMClient {
 public:
  explicit SimLM(SimProfile profile) : profile_(std::move(profile)) {}

  LMResponse generate(const LMRequest& req) override {
    return sim_generate(profile_, req.example_tag, req);
  }
  LMSource kind() const override { return LMSource::simulated; }

  const SimProfile& profile() const { return profile_; }

 private:
  SimProfile profile_;
};

}  // namespace promptforge
