#include "stopsum/normal_math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "stopsum/errors.hpp"

namespace stopsum {

double std_normal_cdf(double x) {
  if (!std::isfinite(x)) throw DomainError("std_normal_cdf: non-finite argument");
  // erfc keeps full relative precision in the lower tail, where 1 - erf would cancel.
  return 0.5 * std::erfc(-x * (1.0 / std::numbers::sqrt2));
}

double gaussian_cf(double t) {
  if (!std::isfinite(t)) throw DomainError("gaussian_cf: non-finite argument");
  return std::exp(-0.5 * t * t);
}

double dkw_halfwidth(std::size_t count, double delta) {
  if (count == 0) throw DomainError("dkw_halfwidth: sample count must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("dkw_halfwidth: delta must lie in (0, 1)");
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(count)));
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : samples_(std::move(samples)) {
  if (std::any_of(samples_.begin(), samples_.end(), [](double v) { return !std::isfinite(v); })) {
    throw DomainError("EmpiricalCdf: samples must be finite");
  }
  std::sort(samples_.begin(), samples_.end());
}

double EmpiricalCdf::operator()(double x) const noexcept {
  if (samples_.empty()) return 0.0;
  const auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
  return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
}

double EmpiricalCdf::quantile(double p) const {
  if (samples_.empty()) throw DomainError("EmpiricalCdf::quantile: empty sample");
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("EmpiricalCdf::quantile: p must lie in (0, 1]");
  const auto r = static_cast<double>(samples_.size());
  auto index = static_cast<std::size_t>(std::ceil(p * r));
  index = std::clamp<std::size_t>(index, 1, samples_.size());
  return samples_[index - 1];
}

void throw_if_empty(const EmpiricalCdf& ecdf) {
  if (ecdf.count() == 0) throw DomainError("kolmogorov_distance: empty sample");
}

DistanceResult kolmogorov_distance(const EmpiricalCdf& ecdf, double delta) {
  return kolmogorov_distance(ecdf, [](double x) { return std_normal_cdf(x); }, delta);
}

}  // namespace stopsum
