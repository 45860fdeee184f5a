#pragma once

#include <cstdint>
#include <vector>

#include "stopsum/models.hpp"

namespace stopsum {

/// One path stopped at nu(n) = min{k >= 1 : sum_{i=0}^{k} sigma^2_i >= n}.
struct StoppedSample {
  std::uint64_t nu = 0;
  double gamma = 0.0;        // solves v_before + gamma * sigma_nu_sq = n
  double s_nu = 0.0;         // X_1 + ... + X_nu
  double s_prime_nu = 0.0;   // s_nu + sqrt(gamma) * x_next
  double x_next = 0.0;       // X_{nu+1}, emitted alongside sigma^2_nu
  double y_nu = 1.0;
  double v_before = 0.0;     // sum_{i=0}^{nu-1} sigma^2_i
  double sigma_nu_sq = 0.0;

  // Filled only with PathOptions::retain_prefix. Entry j-1 holds, for j = 1..nu,
  // sigma_prefix: sum_{p=0}^{j-1} sigma^2_p and sigma_sq_history: sigma^2_{j-1}.
  std::vector<double> sigma_prefix;
  std::vector<double> sigma_sq_history;
};

struct PathOptions {
  bool retain_prefix = false;
};

/// (n - v_before) / sigma_nu_sq. Throws DegenerateStartError unless
/// sigma_nu_sq > 0 and v_before < n <= v_before + sigma_nu_sq.
double compute_gamma(double v_before, double sigma_nu_sq, double n);

/// Steps `model` until the stopping time for threshold n, plus the one step that emits
/// sigma^2_nu and X_{nu+1}. Throws PathOverflowError if the model's step cap is hit first.
StoppedSample run_path(ModelState& model, double n, const PathOptions& opts = {});

StoppedSample run_path(const ModelSpec& spec, std::uint64_t seed, double n, const PathOptions& opts = {});

struct Lemma1Residual {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  bool holds = true;
};

/// Evaluates both sides of
///   sum_{j=1}^{nu} exp(t^2/(2n) * sum_{p<j} sigma^2_p) * t^2/(2n) * sigma^2_{j-1}
///     <= exp(t^2/2) * (1 + Y_nu^2 t^2 / n)
/// on a path that retained its prefix sums.
Lemma1Residual lemma1_check(const StoppedSample& sample, double t, double n);

}  // namespace stopsum
