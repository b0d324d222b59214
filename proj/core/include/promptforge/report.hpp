#pragma once

#include <string>
#include <vector>

#include "promptforge/prompt.hpp"
#include "promptforge/signature.hpp"

namespace promptforge {

struct ReportOperand {
  std::string label;
  double pct = 0.0;       // percentage points
  std::string metric;     // optional; mismatching metrics are an error
};

struct ComparisonRow {
  std::string label;
  double optimized_pct = 0.0;
  double baseline_pct = 0.0;
  double improvement_pct = 0.0;  // rounded half-up to one decimal
};

// operands are decimal percentages; the difference is computed in integer
// hundredths and rounded half-up to tenths, so printed-table arithmetic like
// 81.6 - 73.15 -> 8.5 is reproduced instead of drifting to 8.4 in binary
ComparisonRow report_improvement(const ReportOperand& baseline,
                                 const ReportOperand& optimized,
                                 const std::string& label);

// shortest round-trip rendering (73.15 stays "73.15")
std::string format_number(double v);
// fixed one-decimal rendering for improvement columns
std::string format_one_decimal(double v);

std::string comparison_table_text(const std::vector<ComparisonRow>& rows);
// columns: label,optimized,baseline,improvement
std::string comparison_table_csv(const std::vector<ComparisonRow>& rows);

// operand file: JSON array of {label, pct[, metric]}, a single such object,
// or an EvalReport object (accuracy mapped to a percentage)
std::vector<ReportOperand> load_report_operands(const std::string& path);

std::vector<ComparisonRow> compare_operands(
    const std::vector<ReportOperand>& baseline,
    const std::vector<ReportOperand>& optimized);

// (len_b - len_o) / len_b over prompts rendered with empty context
double prompt_efficiency(const PromptParams& baseline,
                         const PromptParams& optimized,
                         const TaskSignature& sig,
                         const std::map<std::string, std::string>& sample_input);

}  // namespace promptforge
