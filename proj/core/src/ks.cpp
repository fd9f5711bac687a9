#include <algorithm>
#include <cmath>
#include <vector>

#include "shiftid/errors.hpp"
#include "shiftid/stats.hpp"

namespace shiftid::stats {

namespace {

std::vector<double> sorted_copy(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  for (double v : out) {
    if (!std::isfinite(v)) throw ValidationError("ks_two_sample: non-finite value");
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw EmptyInput("ks_two_sample: both samples need at least one value");
  const auto sa = sorted_copy(a);
  const auto sb = sorted_copy(b);
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());

  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == x) ++i;
    while (j < sb.size() && sb[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double kolmogorov_survival(double lambda) {
  if (lambda < 0.2) return 1.0;
  const double a2 = -2.0 * lambda * lambda;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j < 1000; ++j) {
    const double term = std::exp(a2 * j * j);
    sum += sign * term;
    if (term < 1e-10) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  const double d = ks_statistic(a, b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  // Keep the arithmetic symmetric in (a, b).
  const double ne = (na * nb) / (na + nb);
  const double root = std::sqrt(ne);
  return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
}

BonferroniDecision bonferroni(std::span<const double> p_values, double alpha) {
  if (p_values.empty()) throw EmptyInput("bonferroni: no p-values");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidAlpha("alpha must lie in (0, 1)");
  double min_p = 1.0;
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("bonferroni: p-value outside [0, 1]");
    min_p = std::min(min_p, p);
  }
  const double threshold = alpha / static_cast<double>(p_values.size());
  return {min_p <= threshold, threshold};
}

}  // namespace shiftid::stats
