#include <algorithm>
#include <cmath>

#include "cqadet/corpus.hpp"
#include "cqadet/errors.hpp"

namespace cqadet {

CdfTable empirical_cdf(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("empirical_cdf of an empty sample");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  CdfTable table;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // Emit one point per distinct value at the last occurrence.
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    table.push_back({sorted[i], static_cast<double>(i + 1) / n});
  }
  table.back().cumulative = 1.0;
  return table;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw EmptyInput("ks_statistic needs two non-empty samples");
  std::vector<double> xa(a.begin(), a.end()), xb(b.begin(), b.end());
  std::sort(xa.begin(), xa.end());
  std::sort(xb.begin(), xb.end());
  const double na = static_cast<double>(xa.size());
  const double nb = static_cast<double>(xb.size());

  // Merge walk; evaluate the gap after consuming every copy of each value.
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xa.size() || j < xb.size()) {
    double v;
    if (j == xb.size() || (i < xa.size() && xa[i] <= xb[j]))
      v = xa[i];
    else
      v = xb[j];
    while (i < xa.size() && xa[i] == v) ++i;
    while (j < xb.size() && xb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

std::vector<FeatureDiagnostic> diagnose(std::span<const QASession> corpus) {
  struct Extractor {
    const char* name;
    double (*get)(const QASession&);
  };
  static constexpr Extractor kExtractors[] = {
      {"interval_post_time",
       [](const QASession& s) { return static_cast<double>(interval_post_time(s)); }},
      {"likes", [](const QASession& s) { return static_cast<double>(s.likes); }},
      {"other_answers", [](const QASession& s) { return static_cast<double>(s.other_answers); }},
  };

  std::vector<FeatureDiagnostic> out;
  for (const auto& ex : kExtractors) {
    std::vector<double> campaign, normal;
    for (const auto& s : corpus) {
      if (!s.label) continue;
      (*s.label == Label::Campaign ? campaign : normal).push_back(ex.get(s));
    }
    if (campaign.empty() || normal.empty())
      throw SingleClassInput("diagnostics need labeled sessions of both classes");
    FeatureDiagnostic d;
    d.feature = ex.name;
    d.campaign = empirical_cdf(campaign);
    d.normal = empirical_cdf(normal);
    d.ks = ks_statistic(campaign, normal);
    d.separating = d.ks >= kSeparatingKs;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace cqadet
