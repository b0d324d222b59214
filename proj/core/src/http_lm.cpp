#include "promptforge/http_lm.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json_util.hpp"
#include "promptforge/errors.hpp"
#include "promptforge/prompt.hpp"

namespace promptforge {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

}  // namespace

HttpLM::HttpLM(HttpConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.base_url.empty()) cfg_.base_url = env_or("PROMPTFORGE_BASE_URL", "");
  if (cfg_.api_key.empty()) cfg_.api_key = env_or("PROMPTFORGE_API_KEY", "");
  if (cfg_.base_url.empty()) {
    throw ValidationError(
        "http client: no base url (set PROMPTFORGE_BASE_URL)");
  }
}

LMResponse HttpLM::generate(const LMRequest& req) {
  json body;
  body["model"] = req.model_id;
  body["messages"] =
      json::array({json{{"role", "user"}, {"content", req.prompt}}});
  body["temperature"] = 0.0;
  body["max_tokens"] = req.max_tokens;
  const std::string payload = body.dump();

  httplib::Client client(cfg_.base_url);
  client.set_connection_timeout(cfg_.timeout_seconds, 0);
  client.set_read_timeout(cfg_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + cfg_.api_key);
  }

  int backoff = cfg_.backoff_ms;
  std::string last_transport_error;
  for (int attempt = 0; attempt < cfg_.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
    auto res = client.Post("/v1/chat/completions", headers, payload,
                           "application/json");
    if (!res) {
      // transport failure: retry with backoff
      last_transport_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      // endpoint error payloads are terminal, never retried
      throw LMError("http client: status " + std::to_string(res->status) +
                        ": " + res->body,
                    res->status, false);
    }
    json j = json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty()) {
      throw LMError("http client: unexpected response body: " + res->body,
                    res->status, false);
    }
    LMResponse out;
    out.text = j["choices"][0]["message"]["content"].get<std::string>();
    if (j.contains("usage")) {
      out.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
      out.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
    } else {
      out.usage.prompt_tokens = prompt_length(req.prompt);
      out.usage.completion_tokens = prompt_length(out.text);
    }
    out.source = LMSource::http;
    return out;
  }
  throw LMError("http client: transport failure after " +
                    std::to_string(cfg_.max_attempts) + " attempts: " +
                    last_transport_error,
                0, true);
}

}  // namespace promptforge
