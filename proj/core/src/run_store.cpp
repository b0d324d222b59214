#include "promptforge/run_store.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "json_util.hpp"
#include "promptforge/errors.hpp"
#include "promptforge/hashing.hpp"

namespace fs = std::filesystem;

namespace promptforge {

namespace {

std::string utc_stamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

json record_to_json(const RunRecord& r) {
  json j;
  j["run_id"] = r.run_id;
  j["command"] = r.command;
  j["inputs_digest"] = r.inputs_digest;
  j["artifact_path"] = r.artifact_path;
  j["report_json"] = r.report_json;
  j["wall_time_s"] = r.wall_time_s;
  return j;
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.run_id = j.value("run_id", "");
  r.command = j.value("command", "");
  r.inputs_digest = j.value("inputs_digest", "");
  r.artifact_path = j.value("artifact_path", "");
  r.report_json = j.value("report_json", "");
  r.wall_time_s = j.value("wall_time_s", 0.0);
  return r;
}

}  // namespace

RunStore::RunStore(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) {
    throw Error("cannot create run directory " + dir_ + ": " + ec.message());
  }
}

std::string RunStore::add(RunRecord record) {
  if (record.run_id.empty()) {
    const std::string base =
        utc_stamp() + "-" + to_hex(fnv1a64(record.command)).substr(0, 8);
    std::string candidate = base;
    for (int suffix = 1; fs::exists(fs::path(dir_) / (candidate + ".json"));
         ++suffix) {
      candidate = base + "-" + std::to_string(suffix);
    }
    record.run_id = candidate;
  }
  const fs::path target = fs::path(dir_) / (record.run_id + ".json");
  if (fs::exists(target)) {
    throw ValidationError("run " + record.run_id + " already exists");
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << record_to_json(record).dump(2) << '\n';
    out.flush();
    if (!out) throw Error("failed while writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    throw Error("cannot move " + tmp.string() +
                " into place: " + ec.message());
  }
  return record.run_id;
}

std::vector<RunRecord> RunStore::list() const {
  std::vector<RunRecord> records;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_, ec)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") {
      continue;
    }
    std::ifstream in(entry.path(), std::ios::binary);
    if (!in) continue;
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    records.push_back(record_from_json(parse_json(text, entry.path().string())));
  }
  if (ec) throw Error("cannot read run directory " + dir_ + ": " + ec.message());
  std::sort(records.begin(), records.end(),
            [](const RunRecord& a, const RunRecord& b) {
              return a.run_id < b.run_id;
            });
  return records;
}

std::uint64_t make_inputs_digest(const std::vector<std::string>& parts) {
  std::string joined;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) joined += '\x1f';
    joined += parts[i];
  }
  return fnv1a64(joined);
}

}  // namespace promptforge
