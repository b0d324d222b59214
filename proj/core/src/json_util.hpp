#pragma once

// private helpers over the vendored nlohmann header; never include from
// public headers

#include <string>

#include "json.hpp"
#include "promptforge/errors.hpp"

namespace promptforge {

using json = nlohmann::ordered_json;

inline json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw ParseError("malformed json in " + what);
  }
  return j;
}

inline const json& require_key(const json& obj, const std::string& key,
                               const std::string& what) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ValidationError(what + ": missing \"" + key + "\"");
  }
  return obj.at(key);
}

inline std::string require_string(const json& obj, const std::string& key,
                                  const std::string& what) {
  const json& v = require_key(obj, key, what);
  if (!v.is_string()) {
    throw ValidationError(what + ": \"" + key + "\" must be a string");
  }
  return v.get<std::string>();
}

}  // namespace promptforge
