#pragma once

#include <string>

#include "promptforge/lm_client.hpp"

namespace promptforge {

struct HttpConfig {
  std::string base_url;  // falls back to env PROMPTFORGE_BASE_URL
  std::string api_key;   // falls back to env PROMPTFORGE_API_KEY
  int max_attempts = 3;
  int backoff_ms = 500;      // doubles after each transport failure
  int timeout_seconds = 30;
};

// POST {base}/v1/chat/completions with the OpenAI-style chat body; retries
// transport failures only, endpoint error payloads surface immediately
class HttpLM final : public LMClient {
 public:
  explicit HttpLM(HttpConfig cfg = {});

  LMResponse generate(const LMRequest& req) override;
  LMSource kind() const override { return LMSource::http; }

  const HttpConfig& config() const { return cfg_; }

 private:
  HttpConfig cfg_;
};

}  // namespace promptforge
