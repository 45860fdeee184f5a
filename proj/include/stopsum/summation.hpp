#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace stopsum {

/// Neumaier's variant of Kahan summation. The represented value is hi + lo.
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(double value) : hi_(value) {}

  CompensatedSum& operator+=(double x) noexcept {
    const double t = hi_ + x;
    if (std::fabs(hi_) >= std::fabs(x)) {
      lo_ += (hi_ - t) + x;
    } else {
      lo_ += (x - t) + hi_;
    }
    hi_ = t;
    return *this;
  }

  double value() const noexcept { return hi_ + lo_; }
  double high() const noexcept { return hi_; }
  double correction() const noexcept { return lo_; }

 private:
  double hi_ = 0.0;
  double lo_ = 0.0;
};

/// Sum with a reduction tree whose shape depends only on the input length.
double pairwise_sum(std::span<const double> values) noexcept;

/// Mean/variance accumulator with Chan's parallel merge.
class RunningMoments {
 public:
  void add(double x) noexcept {
    count_ += 1.0;
    const double d = x - mean_;
    mean_ += d / count_;
    m2_ += d * (x - mean_);
  }

  void merge(const RunningMoments& other) noexcept;

  double count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance (0 for fewer than two points).
  double variance() const noexcept { return count_ > 1.0 ? m2_ / (count_ - 1.0) : 0.0; }
  /// Standard error of the mean.
  double stderr_of_mean() const noexcept { return count_ > 0.0 ? std::sqrt(variance() / count_) : 0.0; }

 private:
  double count_ = 0.0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace stopsum
