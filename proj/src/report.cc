#include "trollguard/report.h"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace trollguard {
namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string rule(std::size_t width) { return std::string(width, '-') + "\n"; }

// Joins padded cells and drops trailing blanks.
std::string line(const std::vector<std::pair<std::string, std::size_t>>& cells) {
  std::string out;
  for (const auto& [text, width] : cells) out += pad(text, width);
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out + "\n";
}

}  // namespace

std::string stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

std::string format_p(double p) {
  std::string text = fixed(std::clamp(p, 0.0, 1.0), 3);
  if (text.rfind("0.", 0) == 0) text.erase(0, 1);
  return text + stars(p);
}

std::string render_alignment_table(const std::vector<AlignmentRow>& rows) {
  std::size_t w = 7;
  for (const auto& r : rows) w = std::max(w, r.model.size() + 2);
  constexpr std::size_t c = 8;
  const std::size_t total = w + 4 * c;
  std::string out;
  out += rule(total);
  out += line({{"Model", w}, {"Coarse-grained", 2 * c}, {"Fine-grained", 2 * c}});
  out += line({{"", w}, {"JSD", c}, {"HD", c}, {"JSD", c}, {"HD", c}});
  out += rule(total);
  for (const auto& r : rows) {
    out += line({{r.model, w},
                 {fixed(r.values.coarse.jsd, 3), c},
                 {fixed(r.values.coarse.hd, 3), c},
                 {fixed(r.values.fine.jsd, 3), c},
                 {fixed(r.values.fine.hd, 3), c}});
  }
  out += rule(total);
  return out;
}

std::string render_significance(const SignificanceReport& report) {
  const bool preference = report.dimension == ScoreDimension::kPreference;
  std::size_t w = 11;
  for (const auto& m : report.models) w = std::max(w, m.model.size() + 2);
  constexpr std::size_t c = 11;
  const std::string chi = "x^2_" + (report.omnibus.df ? std::to_string(*report.omnibus.df) : "?");

  std::string out;
  const std::size_t top_width = w + 6 + c * (preference ? 3 : 4);
  out += "Friedman Test\n";
  out += rule(top_width);
  if (preference) {
    out += line({{"Model", w}, {"N", 6}, {"Mean Rank", c}, {chi, c}, {"Sig. (p)", c}});
  } else {
    out += line({{"Model", w}, {"N", 6}, {"Mean", c}, {"Std.", c}, {chi, c}, {"Sig. (p)", c}});
  }
  out += rule(top_width);
  for (std::size_t i = 0; i < report.models.size(); ++i) {
    const auto& m = report.models[i];
    const std::string stat = i == 0 ? fixed(report.omnibus.statistic, 2) : "";
    const std::string sig = i == 0 ? format_p(report.omnibus.p_value) : "";
    if (preference) {
      out += line({{m.model, w}, {std::to_string(m.n), 6}, {fixed(m.mean_rank, 2), c},
                   {stat, c}, {sig, c}});
    } else {
      out += line({{m.model, w}, {std::to_string(m.n), 6}, {fixed(m.mean, 2), c},
                   {fixed(m.std, 2), c}, {stat, c}, {sig, c}});
    }
  }
  out += rule(top_width);
  out += "\n";

  const std::size_t bottom_width = 2 * w + 2 * c;
  out += "Pairwise Comparisons using Wilcoxon Signed-Rank Test\n";
  out += rule(bottom_width);
  out += line({{"(I) Major", w}, {"(J) Major", w}, {"Z", c}, {"Sig. (p)", c}});
  out += rule(bottom_width);
  for (const auto& p : report.pairwise) {
    out += line({{p.model_i, w}, {p.model_j, w}, {fixed(p.test.statistic, 2), c},
                 {format_p(p.test.p_value), c}});
  }
  out += rule(bottom_width);
  return out;
}

}  // namespace trollguard
