#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace promptforge {

struct RunRecord {
  std::string run_id;  // assigned by RunStore::add when empty
  std::string command;
  std::string inputs_digest;
  std::string artifact_path;
  std::string report_json;  // serialized report payload, may be empty
  double wall_time_s = 0.0;
};

// directory of immutable JSON files, one per run; writes are atomic and ids
// are unique (timestamp + command digest, numeric suffix on collision)
class RunStore {
 public:
  explicit RunStore(std::string dir);

  // returns the assigned run_id
  std::string add(RunRecord record);
  std::vector<RunRecord> list() const;

  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
};

std::uint64_t make_inputs_digest(const std::vector<std::string>& parts);

}  // namespace promptforge
