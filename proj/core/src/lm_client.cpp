#include "promptforge/lm_client.hpp"

#include <fstream>
#include <utility>

#include "json_util.hpp"
#include "promptforge/errors.hpp"
#include "promptforge/hashing.hpp"

namespace promptforge {

std::uint64_t cache_key(const LMRequest& req) {
  std::string canon = req.model_id;
  canon += '\x1f';
  canon += std::to_string(req.max_tokens);
  canon += '\x1f';
  canon += req.prompt;
  return fnv1a64(canon);
}

void CallCache::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) return;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("digest")) {
      throw ParseError("cache file " + path + " line " +
                       std::to_string(line_no) + ": malformed record");
    }
    LMResponse resp;
    resp.text = j.value("text", "");
    resp.usage.prompt_tokens = j.value("prompt_tokens", 0);
    resp.usage.completion_tokens = j.value("completion_tokens", 0);
    resp.source = LMSource::cache;
    std::uint64_t key =
        std::stoull(j.at("digest").get<std::string>(), nullptr, 16);
    std::promise<LMResponse> ready;
    ready.set_value(std::move(resp));
    std::lock_guard lock(mu_);
    entries_[key] = ready.get_future().share();
  }
}

void CallCache::persist_to(const std::string& path) {
  std::lock_guard lock(file_mu_);
  out_.open(path, std::ios::app);
  if (!out_) throw Error("cannot open cache file for append: " + path);
}

std::size_t CallCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void CallCache::append_entry(std::uint64_t key, const LMResponse& resp) {
  std::lock_guard lock(file_mu_);
  if (!out_.is_open()) return;
  json j;
  j["digest"] = to_hex(key);
  j["text"] = resp.text;
  j["prompt_tokens"] = resp.usage.prompt_tokens;
  j["completion_tokens"] = resp.usage.completion_tokens;
  out_ << j.dump() << '\n';
  out_.flush();
}

LMResponse CallCache::get_or_generate(const LMRequest& req, LMClient& client) {
  const std::uint64_t key = cache_key(req);
  std::promise<LMResponse> installer;
  std::shared_future<LMResponse> fut;
  bool installing = false;
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      fut = installer.get_future().share();
      entries_.emplace(key, fut);
      installing = true;
    } else {
      fut = it->second;
    }
  }
  if (installing) {
    // the installer is the only thread charged with a miss for this key
    misses_.fetch_add(1);
    try {
      LMResponse resp = client.generate(req);
      installer.set_value(resp);
      append_entry(key, resp);
      return resp;
    } catch (...) {
      installer.set_exception(std::current_exception());
      std::lock_guard lock(mu_);
      entries_.erase(key);  // allow a later retry
      throw;
    }
  }
  LMResponse resp = fut.get();  // rethrows the installer's failure, if any
  hits_.fetch_add(1);
  resp.source = LMSource::cache;
  return resp;
}

}  // namespace promptforge
