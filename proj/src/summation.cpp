#include "stopsum/summation.hpp"

namespace stopsum {

namespace {
constexpr std::size_t kLeafSize = 8;
}

double pairwise_sum(std::span<const double> values) noexcept {
  if (values.size() <= kLeafSize) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

void RunningMoments::merge(const RunningMoments& other) noexcept {
  if (other.count_ == 0.0) return;
  if (count_ == 0.0) {
    *this = other;
    return;
  }
  const double total = count_ + other.count_;
  const double d = other.mean_ - mean_;
  mean_ += d * (other.count_ / total);
  m2_ += other.m2_ + d * d * (count_ * other.count_ / total);
  count_ = total;
}

}  // namespace stopsum
