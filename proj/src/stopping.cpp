#include "stopsum/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stopsum/errors.hpp"
#include "stopsum/summation.hpp"

namespace stopsum {

double compute_gamma(double v_before, double sigma_nu_sq, double n) {
  if (!(sigma_nu_sq > 0.0)) throw DegenerateStartError("compute_gamma: sigma^2_nu must be positive");
  if (!(v_before < n)) {
    throw DegenerateStartError("compute_gamma: accumulated variance before nu already reaches n = " +
                               std::to_string(n) + "; n is too small relative to sigma^2_0");
  }
  if (!(n <= v_before + sigma_nu_sq)) {
    throw DegenerateStartError("compute_gamma: n lies beyond v_before + sigma^2_nu");
  }
  // Rounding in the quotient can land one ulp above 1 when n is hit exactly.
  return std::min(1.0, (n - v_before) / sigma_nu_sq);
}

StoppedSample run_path(ModelState& model, double n, const PathOptions& opts) {
  if (!(n > 0.0) || !std::isfinite(n)) throw UsageError("run_path: n must be positive and finite");

  return model.dispatch([&](auto& next) {
    StoppedSample out;
    CompensatedSum variance;
    double sum = 0.0;

    // Step 0 emits (X_1, sigma^2_0, Y_0).
    StepOutput step = next();
    variance += step.sigma_sq;
    double pending_x = step.x;
    if (opts.retain_prefix) {
      out.sigma_prefix.push_back(variance.value());
      out.sigma_sq_history.push_back(step.sigma_sq);
    }

    for (std::uint64_t k = 1;; ++k) {
      sum += pending_x;  // S_k
      step = next();     // (X_{k+1}, sigma^2_k, Y_k)
      const double before = variance.value();
      variance += step.sigma_sq;
      if (variance.value() >= n) {
        out.nu = k;
        out.v_before = before;
        out.sigma_nu_sq = step.sigma_sq;
        out.y_nu = step.y;
        out.s_nu = sum;
        out.x_next = step.x;
        break;
      }
      pending_x = step.x;
      if (opts.retain_prefix) {
        out.sigma_prefix.push_back(variance.value());
        out.sigma_sq_history.push_back(step.sigma_sq);
      }
    }

    out.gamma = compute_gamma(out.v_before, out.sigma_nu_sq, n);
    out.s_prime_nu = out.s_nu + std::sqrt(out.gamma) * out.x_next;
    return out;
  });
}

StoppedSample run_path(const ModelSpec& spec, std::uint64_t seed, double n, const PathOptions& opts) {
  ModelState state = init_model(spec, seed);
  return run_path(state, n, opts);
}

Lemma1Residual lemma1_check(const StoppedSample& sample, double t, double n) {
  if (sample.nu == 0 || sample.sigma_prefix.size() != sample.nu ||
      sample.sigma_sq_history.size() != sample.nu) {
    throw UsageError("lemma1_check: sample did not retain its prefix variance sums");
  }
  if (!std::isfinite(t)) throw UsageError("lemma1_check: t must be finite");
  if (!(n > 0.0)) throw UsageError("lemma1_check: n must be positive");

  const double scale = t * t / (2.0 * n);
  CompensatedSum lhs;
  for (std::size_t j = 0; j < sample.sigma_prefix.size(); ++j) {
    lhs += std::exp(scale * sample.sigma_prefix[j]) * scale * sample.sigma_sq_history[j];
  }
  Lemma1Residual r;
  r.lhs = lhs.value();
  r.rhs = std::exp(0.5 * t * t) * (1.0 + sample.y_nu * sample.y_nu * t * t / n);
  r.slack = r.rhs - r.lhs;
  r.holds = r.lhs <= r.rhs;
  return r;
}

}  // namespace stopsum
