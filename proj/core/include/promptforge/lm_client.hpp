#pragma once

#include <atomic>
#include <cstdint>
#include <fstream>
#include <future>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

namespace promptforge {

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;

  bool operator==(const Usage&) const = default;
};

enum class LMSource { http, simulated, cache };

struct LMRequest {
  std::string prompt;
  int max_tokens = 64;
  double temperature = 0.0;  // fixed at 0; kept for the wire format
  std::string model_id = "sim";
  // routing hint for the simulated client (answer_key lookup); deliberately
  // not part of the cache key, whose layout is fixed below
  std::string example_tag;
};

struct LMResponse {
  std::string text;
  Usage usage;
  LMSource source = LMSource::simulated;
};

class LMClient {
 public:
  virtual ~LMClient() = default;
  virtual LMResponse generate(const LMRequest& req) = 0;
  virtual LMSource kind() const = 0;
};

// fnv1a64(model_id \x1f max_tokens \x1f prompt); temperature omitted
std::uint64_t cache_key(const LMRequest& req);

// content-addressed call cache with single-flight semantics: concurrent
// requests for the same key produce exactly one client call and one
// counted miss, so budget accounting is identical under any interleaving
class CallCache {
 public:
  CallCache() = default;
  CallCache(const CallCache&) = delete;
  CallCache& operator=(const CallCache&) = delete;

  // load previously persisted entries; missing file is fine
  void load(const std::string& path);
  // append every future miss to this JSONL file
  void persist_to(const std::string& path);

  LMResponse get_or_generate(const LMRequest& req, LMClient& client);

  std::uint64_t hits() const { return hits_.load(); }
  std::uint64_t misses() const { return misses_.load(); }
  std::size_t size() const;

 private:
  void append_entry(std::uint64_t key, const LMResponse& resp);

  mutable std::mutex mu_;
  std::unordered_map<std::uint64_t, std::shared_future<LMResponse>> entries_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
  std::mutex file_mu_;
  std::ofstream out_;
};

// LMClient decorator routing every call through a shared CallCache
class CachedLM final : public LMClient {
 public:
  CachedLM(std::shared_ptr<LMClient> inner, std::shared_ptr<CallCache> cache)
      : inner_(std::move(inner)), cache_(std::move(cache)) {}

  LMResponse generate(const LMRequest& req) override {
    return cache_->get_or_generate(req, *inner_);
  }
  LMSource kind() const override { return inner_->kind(); }

  CallCache& cache() { return *cache_; }
  const CallCache& cache() const { return *cache_; }

 private:
  std::shared_ptr<LMClient> inner_;
  std::shared_ptr<CallCache> cache_;
};

}  // namespace promptforge
