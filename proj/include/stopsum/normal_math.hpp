#pragma once

#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

namespace stopsum {

inline constexpr double kDefaultDelta = 0.01;

/// Standard normal CDF, Phi(x) = 0.5 * erfc(-x / sqrt(2)).
/// Absolute error is below 1e-14 over the whole real line. Throws DomainError on non-finite x.
double std_normal_cdf(double x);

/// Characteristic function of N(0,1): exp(-t^2 / 2).
double gaussian_cf(double t);

/// Half-width of the Dvoretzky-Kiefer-Wolfowitz band, sqrt(ln(2/delta) / (2R)).
double dkw_halfwidth(std::size_t count, double delta);

/// Sorted sample of a real statistic. Construction sorts; samples must be finite.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> samples);

  std::span<const double> samples() const noexcept { return samples_; }
  std::size_t count() const noexcept { return samples_.size(); }

  /// Fraction of samples <= x.
  double operator()(double x) const noexcept;

  /// Order statistic at probability p in (0, 1], using the left-continuous inverse.
  double quantile(double p) const;

 private:
  std::vector<double> samples_;
};

struct DistanceResult {
  double d_sup = 0.0;
  double argmax_x = 0.0;
  double dkw_halfwidth = 0.0;
  std::size_t count = 0;
  double delta = kDefaultDelta;
};

namespace detail {
// Sorted-scan sup distance. `cdf_at` is evaluated once per order statistic.
template <class Cdf>
DistanceResult sorted_scan(std::span<const double> sorted, Cdf&& cdf_at) {
  DistanceResult result;
  const auto r = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf_at(sorted[i]);
    const double above = static_cast<double>(i + 1) / r - f;
    const double below = f - static_cast<double>(i) / r;
    const double local = above > below ? above : below;
    if (local > result.d_sup) {
      result.d_sup = local;
      result.argmax_x = sorted[i];
    }
  }
  return result;
}
}  // namespace detail

void throw_if_empty(const EmpiricalCdf& ecdf);

/// Exact Kolmogorov sup-distance between an empirical CDF and a continuous CDF.
template <class Cdf>
  requires std::regular_invocable<Cdf&, double>
DistanceResult kolmogorov_distance(const EmpiricalCdf& ecdf, Cdf&& cdf, double delta = kDefaultDelta) {
  throw_if_empty(ecdf);
  DistanceResult result = detail::sorted_scan(ecdf.samples(), cdf);
  if (result.d_sup == 0.0) result.argmax_x = ecdf.samples().front();
  result.count = ecdf.count();
  result.delta = delta;
  result.dkw_halfwidth = dkw_halfwidth(ecdf.count(), delta);
  return result;
}

/// Kolmogorov distance to the standard normal.
DistanceResult kolmogorov_distance(const EmpiricalCdf& ecdf, double delta = kDefaultDelta);

}  // namespace stopsum
