#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "promptforge/signature.hpp"

namespace promptforge {

struct Example {
  std::string id;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
  std::vector<std::string> evidence;

  bool operator==(const Example&) const = default;
};

struct Dataset {
  std::vector<Example> examples;

  std::size_t size() const { return examples.size(); }

  bool operator==(const Dataset&) const = default;
};

// JSONL, one example per line; missing ids synthesized as
// "ex-<zero-padded physical line number>" (1-based, width 4)
Dataset load_dataset(std::istream& in);
Dataset load_dataset_file(const std::string& path);

// throws ValidationError naming the first uncovered field or duplicate id
void validate_dataset(const Dataset& d, const TaskSignature& sig);

// train gets the first floor(train_fraction * N) entries of the seeded
// permutation, in permutation order; the rest go to dev
std::pair<Dataset, Dataset> split_dataset(const Dataset& d,
                                          double train_fraction,
                                          std::uint64_t seed);

}  // namespace promptforge
