#ifndef TROLLGUARD_REPORT_H_
#define TROLLGUARD_REPORT_H_

#include <string>
#include <vector>

#include "trollguard/eval_metrics.h"
#include "trollguard/eval_stats.h"

namespace trollguard {

// "*" p<.05, "**" p<.01, "***" p<.001, else "".
std::string stars(double p);

// Three decimals without the leading zero, followed by stars:
// ".314", ".014*", ".000***", "1.000".
std::string format_p(double p);

struct AlignmentRow {
  std::string model;
  AlignmentReport values;
};

// Model | Coarse-grained JSD HD | Fine-grained JSD HD, three decimals.
std::string render_alignment_table(const std::vector<AlignmentRow>& rows);

// Friedman block followed by the pairwise Wilcoxon block. Preference shows
// mean ranks; Likert dimensions show mean and standard deviation.
std::string render_significance(const SignificanceReport& report);

}  // namespace trollguard

#endif  // TROLLGUARD_REPORT_H_
