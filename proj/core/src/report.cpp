#include "promptforge/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json_util.hpp"
#include "promptforge/errors.hpp"

namespace promptforge {

namespace {

// percentages arrive with at most two printed decimals; snap to integer
// hundredths so differences behave like the printed values
long long to_hundredths(double pct) { return std::llround(pct * 100.0); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

ReportOperand operand_from_json(const json& j, const std::string& what) {
  ReportOperand op;
  if (!j.is_object()) {
    throw ValidationError(what + ": operand must be an object");
  }
  if (j.contains("pct")) {
    op.label = j.value("label", "");
    op.pct = j.at("pct").get<double>();
    op.metric = j.value("metric", "");
    return op;
  }
  if (j.contains("A")) {  // an evaluation report; accuracy as a percentage
    op.label = j.value("label", "");
    op.pct = j.at("A").get<double>() * 100.0;
    op.metric = j.value("metric", "");
    return op;
  }
  throw ValidationError(what + ": operand needs a \"pct\" or \"A\" key");
}

}  // namespace

ComparisonRow report_improvement(const ReportOperand& baseline,
                                 const ReportOperand& optimized,
                                 const std::string& label) {
  if (!baseline.metric.empty() && !optimized.metric.empty() &&
      baseline.metric != optimized.metric) {
    throw ValidationError("metric mismatch: baseline \"" + baseline.metric +
                          "\" vs optimized \"" + optimized.metric + "\"");
  }
  const long long diff_c =
      to_hundredths(optimized.pct) - to_hundredths(baseline.pct);
  // half-up toward +inf at the tenths place
  const long long tenths = static_cast<long long>(
      std::floor((static_cast<double>(diff_c) + 5.0) / 10.0));
  ComparisonRow row;
  row.label = label;
  row.optimized_pct = optimized.pct;
  row.baseline_pct = baseline.pct;
  row.improvement_pct = static_cast<double>(tenths) / 10.0;
  return row;
}

std::string format_number(double v) { return json(v).dump(); }

std::string format_one_decimal(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

std::string comparison_table_text(const std::vector<ComparisonRow>& rows) {
  std::vector<std::array<std::string, 4>> cells;
  cells.push_back({"label", "optimized", "baseline", "improvement"});
  for (const ComparisonRow& r : rows) {
    cells.push_back({r.label, format_number(r.optimized_pct),
                     format_number(r.baseline_pct),
                     format_one_decimal(r.improvement_pct)});
  }
  std::array<std::size_t, 4> width{};
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < 4; ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (c > 0) out << "  ";
      out << row[c];
      if (c + 1 < 4) {
        out << std::string(width[c] - row[c].size(), ' ');
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string comparison_table_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "label,optimized,baseline,improvement\n";
  for (const ComparisonRow& r : rows) {
    out += csv_field(r.label);
    out += ',';
    out += format_number(r.optimized_pct);
    out += ',';
    out += format_number(r.baseline_pct);
    out += ',';
    out += format_one_decimal(r.improvement_pct);
    out += '\n';
  }
  return out;
}

std::vector<ReportOperand> load_report_operands(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  json j = parse_json(text, path);
  std::vector<ReportOperand> ops;
  if (j.is_array()) {
    for (const json& item : j) ops.push_back(operand_from_json(item, path));
  } else {
    ops.push_back(operand_from_json(j, path));
  }
  return ops;
}

std::vector<ComparisonRow> compare_operands(
    const std::vector<ReportOperand>& baseline,
    const std::vector<ReportOperand>& optimized) {
  if (baseline.size() != optimized.size()) {
    throw ValidationError("operand count mismatch: " +
                          std::to_string(baseline.size()) + " baseline vs " +
                          std::to_string(optimized.size()) + " optimized");
  }
  std::vector<ComparisonRow> rows;
  rows.reserve(baseline.size());
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    const std::string& label = optimized[i].label.empty()
                                   ? baseline[i].label
                                   : optimized[i].label;
    rows.push_back(report_improvement(baseline[i], optimized[i], label));
  }
  return rows;
}

double prompt_efficiency(const PromptParams& baseline,
                         const PromptParams& optimized,
                         const TaskSignature& sig,
                         const std::map<std::string, std::string>& sample_input) {
  const int len_b =
      prompt_length(render_prompt(sig, baseline, sample_input, {}));
  const int len_o =
      prompt_length(render_prompt(sig, optimized, sample_input, {}));
  if (len_b <= 0) throw Error("baseline prompt is empty");
  return static_cast<double>(len_b - len_o) / static_cast<double>(len_b);
}

}  // namespace promptforge
