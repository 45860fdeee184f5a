#pragma once

// Adapted martingale-difference generators.
//
// Indexing contract: model step k emits (X_{k+1}, sigma^2_k, Y_k). sigma^2_k and Y_k are
// fixed from the history through step k before X_{k+1} is drawn, so they are predictable.
// Every conditional law is the symmetric two-point law X_{k+1} = +/- s_k with s_k = sqrt(sigma^2_k)
// (correctly rounded), which makes E(X | F), E(X^2 | F) and E(|X|^3 | F) available in closed form.
// sigma^2_k is reported exactly as parameterized; only the magnitude carries the sqrt rounding.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "stopsum/errors.hpp"
#include "stopsum/rng.hpp"

namespace stopsum {

enum class ModelKind { iid_bounded, product, regime_switch };

std::string_view kind_name(ModelKind kind) noexcept;
ModelKind parse_kind(std::string_view name);

/// X uniform on {-sqrt(v), +sqrt(v)} with |X| <= bound; Y = max(bound, 1).
struct IidBoundedParams {
  double bound = 1.0;
  double variance = 1.0;
};

/// X_k = A_{k-1} * zeta_k with Rademacher zeta and A_k = a_lo + (a_hi - a_lo)(1 - 2^{-N_k}),
/// where N_k is a counting process jumping with probability jump_prob per step.
struct ProductParams {
  double a_lo = 1.0;
  double a_hi = 2.0;
  double jump_prob = 0.01;
};

/// sigma^2_k = v_hi when orientation * S_k > 0, else v_lo; the orientation is a fair sign drawn at start.
struct RegimeSwitchParams {
  double v_lo = 0.25;
  double v_hi = 4.0;
};

inline constexpr std::uint64_t kDefaultMaxSteps = std::uint64_t{1} << 32;

struct ModelSpec {
  std::variant<IidBoundedParams, ProductParams, RegimeSwitchParams> params;
  std::uint64_t max_steps = kDefaultMaxSteps;

  ModelKind kind() const noexcept { return static_cast<ModelKind>(params.index()); }

  static ModelSpec iid_bounded(double bound, double variance) { return {IidBoundedParams{bound, variance}}; }
  static ModelSpec product(double a_lo, double a_hi, double jump_prob = 0.01) {
    return {ProductParams{a_lo, a_hi, jump_prob}};
  }
  static ModelSpec regime_switch(double v_lo, double v_hi) { return {RegimeSwitchParams{v_lo, v_hi}}; }
};

/// Throws ConfigError unless the parameters satisfy the kind's constraints.
void validate_spec(const ModelSpec& spec);

/// Largest value sigma^2_0 can take under the spec.
double max_initial_variance(const ModelSpec& spec);

/// Lower bound on every sigma^2_k.
double variance_floor(const ModelSpec& spec);

/// Step cap needed to reach the stopping time for threshold n: ceil(n / v_min) + 2.
std::uint64_t required_step_cap(const ModelSpec& spec, double n);

struct StepOutput {
  double x = 0.0;         // X_{k+1}
  double sigma_sq = 0.0;  // sigma^2_k
  double y = 1.0;         // Y_k
};

/// Conditional law of X_{k+1} given F_k: +/- magnitude with probability 1/2 each.
struct ConditionalLaw {
  double magnitude = 0.0;
  double sigma_sq = 0.0;
  double y = 1.0;

  double mean() const noexcept { return 0.5 * magnitude + 0.5 * (-magnitude); }
  double second_moment() const noexcept { return 0.5 * (magnitude * magnitude) + 0.5 * (magnitude * magnitude); }
  /// E(|X|^3 | F) = s^2 * s, written as sigma^2 * s so that it compares against Y * sigma^2 exactly as s against Y.
  double third_abs_moment() const noexcept { return sigma_sq * magnitude; }
  /// The magnitude is the correctly rounded square root of sigma^2.
  bool consistent() const noexcept { return magnitude == std::sqrt(sigma_sq); }
};

class IidBoundedModel {
 public:
  explicit IidBoundedModel(const IidBoundedParams& p)
      : variance_(p.variance), magnitude_(std::sqrt(p.variance)), y_(std::max(p.bound, 1.0)) {}

  ConditionalLaw law() const noexcept { return {magnitude_, variance_, y_}; }

  StepOutput step(CounterRng& rng) noexcept { return {magnitude_ * rng.rademacher(), variance_, y_}; }

 private:
  double variance_;
  double magnitude_;
  double y_;
};

class ProductModel {
 public:
  explicit ProductModel(const ProductParams& p) : params_(p), a_(p.a_lo) {}

  ConditionalLaw law() const noexcept { return {a_, a_ * a_, std::max(1.0, kThirdMoment * a_)}; }

  StepOutput step(CounterRng& rng) noexcept {
    const ConditionalLaw current = law();
    const StepOutput out{a_ * rng.rademacher(), current.sigma_sq, current.y};
    if (params_.jump_prob > 0.0 && rng.uniform01() < params_.jump_prob && jumps_ < kMaxJumps) {
      ++jumps_;
      a_ = params_.a_lo + (params_.a_hi - params_.a_lo) * (1.0 - std::ldexp(1.0, -jumps_));
    }
    return out;
  }

  double amplitude() const noexcept { return a_; }
  int jumps() const noexcept { return jumps_; }

  /// E|zeta|^3 for Rademacher zeta.
  static constexpr double kThirdMoment = 1.0;

 private:
  // 1 - 2^{-N} is exactly 1 in double precision beyond this.
  static constexpr int kMaxJumps = 60;

  ProductParams params_;
  double a_;
  int jumps_ = 0;
};

class RegimeSwitchModel {
 public:
  RegimeSwitchModel(const RegimeSwitchParams& p, CounterRng& rng)
      : v_lo_(p.v_lo),
        v_hi_(p.v_hi),
        s_lo_(std::sqrt(p.v_lo)),
        s_hi_(std::sqrt(p.v_hi)),
        y_(std::max(1.0, s_hi_)),
        orientation_(rng.rademacher()) {}

  bool high_regime() const noexcept { return orientation_ * running_sum_ > 0.0; }

  ConditionalLaw law() const noexcept {
    return high_regime() ? ConditionalLaw{s_hi_, v_hi_, y_} : ConditionalLaw{s_lo_, v_lo_, y_};
  }

  StepOutput step(CounterRng& rng) noexcept {
    const ConditionalLaw current = law();
    const double x = current.magnitude * rng.rademacher();
    running_sum_ += x;
    return {x, current.sigma_sq, current.y};
  }

 private:
  double v_lo_;
  double v_hi_;
  double s_lo_;
  double s_hi_;
  double y_;
  double orientation_;
  double running_sum_ = 0.0;
};

/// Stepping wrapper that enforces the step cap; handed to ModelState::dispatch callbacks.
template <class Model>
class Stepper {
 public:
  Stepper(Model& model, CounterRng& rng, std::uint64_t& step, std::uint64_t cap) noexcept
      : model_(model), rng_(rng), step_(step), cap_(cap) {}

  StepOutput operator()() {
    if (step_ >= cap_) throw PathOverflowError("model step cap reached before the stopping time");
    ++step_;
    return model_.step(rng_);
  }

  ConditionalLaw law() const noexcept { return model_.law(); }

 private:
  Model& model_;
  CounterRng& rng_;
  std::uint64_t& step_;
  std::uint64_t cap_;
};

class ModelState {
 public:
  ModelState(const ModelSpec& spec, std::uint64_t seed);

  /// Law of the next increment given the history so far.
  ConditionalLaw law() const {
    return std::visit([](const auto& m) { return m.law(); }, model_);
  }

  std::uint64_t step_index() const noexcept { return step_; }
  std::uint64_t max_steps() const noexcept { return max_steps_; }
  const ModelSpec& spec() const noexcept { return spec_; }

  /// Calls f(Stepper<Model>&) with the concrete model type, so hot loops are monomorphic.
  template <class F>
  decltype(auto) dispatch(F&& f) {
    return std::visit(
        [&](auto& model) -> decltype(auto) {
          Stepper<std::remove_reference_t<decltype(model)>> stepper(model, rng_, step_, max_steps_);
          return f(stepper);
        },
        model_);
  }

  /// Emits (X_{k+1}, sigma^2_k, Y_k) and advances to step k + 1.
  StepOutput step() {
    return dispatch([](auto& stepper) { return stepper(); });
  }

 private:
  static std::variant<IidBoundedModel, ProductModel, RegimeSwitchModel> make_model(const ModelSpec& spec,
                                                                                    CounterRng& rng);

  ModelSpec spec_;
  CounterRng rng_;
  std::uint64_t step_ = 0;
  std::uint64_t max_steps_;
  std::variant<IidBoundedModel, ProductModel, RegimeSwitchModel> model_;
};

/// Validates the spec and returns the initial state for `seed`.
ModelState init_model(const ModelSpec& spec, std::uint64_t seed);

/// Value-semantics step: returns the emitted triple and the advanced state.
std::pair<StepOutput, ModelState> step_model(ModelState state);

struct MartingaleCheck {
  std::string test_function;
  double mean = 0.0;
  double stderr_of_mean = 0.0;
  bool passed = true;  // |mean| <= 4 * stderr
};

struct ValidationReport {
  std::uint64_t paths = 0;
  std::uint64_t steps_checked = 0;
  /// min over steps of Y * sigma^2 - E(|X|^3 | F); zero at boundary-equality models.
  double min_moment_slack = 0.0;
  /// min over steps of Y^2 - sigma^2.
  double min_holder_slack = 0.0;
  /// min over paths of sum_{k<=K} sigma^2_k - (K + 1) * v_min.
  double min_floor_slack = 0.0;
  MartingaleCheck constant;
  MartingaleCheck sign_of_sum;
  bool passed = false;
};

/// Checks the hypotheses pathwise (exactly) and the martingale property (statistically).
/// Throws ModelInvalidError on any exact violation; statistical failures set passed = false.
ValidationReport validate_model(const ModelSpec& spec, std::uint64_t seed, std::uint64_t n_paths,
                                std::uint64_t path_len);

}  // namespace stopsum
