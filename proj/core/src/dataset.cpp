#include "promptforge/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "promptforge/errors.hpp"
#include "promptforge/hashing.hpp"

namespace promptforge {

namespace {

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

std::map<std::string, std::string> parse_text_map(const json& obj,
                                                  const std::string& what) {
  if (!obj.is_object()) throw ValidationError(what + " must be an object");
  std::map<std::string, std::string> out;
  for (const auto& [key, val] : obj.items()) {
    if (!val.is_string()) {
      throw ValidationError(what + ": field \"" + key + "\" must be a string");
    }
    out[key] = val.get<std::string>();
  }
  return out;
}

}  // namespace

Dataset load_dataset(std::istream& in) {
  Dataset d;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (blank(line)) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ParseError("dataset line " + std::to_string(line_no) +
                       ": malformed record");
    }
    Example ex;
    if (j.contains("id")) {
      ex.id = j.at("id").get<std::string>();
    } else {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "ex-%04d", line_no);
      ex.id = buf;
    }
    const std::string locus = "dataset line " + std::to_string(line_no);
    ex.inputs = parse_text_map(require_key(j, "inputs", locus), locus + " inputs");
    ex.outputs =
        parse_text_map(require_key(j, "outputs", locus), locus + " outputs");
    if (j.contains("evidence")) {
      const json& ev = j.at("evidence");
      if (!ev.is_array()) {
        throw ValidationError(locus + ": \"evidence\" must be an array");
      }
      for (const json& e : ev) ex.evidence.push_back(e.get<std::string>());
    }
    d.examples.push_back(std::move(ex));
  }
  return d;
}

Dataset load_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);
  return load_dataset(in);
}

void validate_dataset(const Dataset& d, const TaskSignature& sig) {
  std::set<std::string> ids;
  for (const Example& ex : d.examples) {
    if (!ids.insert(ex.id).second) {
      throw ValidationError("dataset: duplicate example id \"" + ex.id + "\"");
    }
    for (const FieldSpec& f : sig.inputs) {
      if (!ex.inputs.count(f.name)) {
        throw ValidationError("dataset: example \"" + ex.id +
                              "\" missing input field \"" + f.name + "\"");
      }
    }
    const std::string& primary = sig.primary_output();
    if (!ex.outputs.count(primary)) {
      throw ValidationError("dataset: example \"" + ex.id +
                            "\" missing output field \"" + primary + "\"");
    }
  }
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d,
                                          double train_fraction,
                                          std::uint64_t seed) {
  if (d.size() < 2) throw ValidationError("dataset too small to split");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("train_fraction must be in (0, 1)");
  }
  const auto n = d.size();
  const auto n_train =
      static_cast<std::size_t>(train_fraction * static_cast<double>(n));
  std::vector<std::size_t> perm = seeded_permutation(n, seed);
  Dataset train, dev;
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? train : dev).examples.push_back(d.examples[perm[i]]);
  }
  return {std::move(train), std::move(dev)};
}

}  // namespace promptforge
