#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace promptforge {

struct FieldSpec {
  std::string name;
  std::string desc;

  bool operator==(const FieldSpec&) const = default;
};

struct ConstraintSet {
  int max_output_tokens = 64;
  double epsilon = 0.1;
  double alpha = 1.0;
  double beta = 1.0;

  bool operator==(const ConstraintSet&) const = default;
};

// declarative task spec: what the fields are, what the seed instruction
// says, and which budgets/weights apply by default
struct TaskSignature {
  std::string name;
  std::string instruction;
  std::vector<FieldSpec> inputs;
  std::vector<FieldSpec> outputs;
  ConstraintSet constraints;

  // only the first output field is scored
  const std::string& primary_output() const { return outputs.front().name; }

  bool operator==(const TaskSignature&) const = default;
};

bool is_identifier(std::string_view s);

// throws ValidationError naming the offending field
void validate_signature(const TaskSignature& sig);

// JSON document in, validated signature out; serialize(parse(doc)) is a
// normalized fixed-key-order rendering
TaskSignature parse_signature(const std::string& doc);
std::string serialize_signature(const TaskSignature& sig);
TaskSignature load_signature_file(const std::string& path);

}  // namespace promptforge
