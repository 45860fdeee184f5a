#include "stopsum/models.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "stopsum/summation.hpp"

namespace stopsum {

namespace {

bool finite_all(std::initializer_list<double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

struct SpecChecker {
  void operator()(const IidBoundedParams& p) const {
    if (!finite_all({p.bound, p.variance})) throw ConfigError("iid_bounded: parameters must be finite");
    if (p.bound < 1.0) throw ConfigError("iid_bounded: bound M must be >= 1");
    if (!(p.variance > 0.0)) throw ConfigError("iid_bounded: variance v must be > 0");
    if (p.variance > p.bound * p.bound) throw ConfigError("iid_bounded: variance v must be <= M^2");
  }
  void operator()(const ProductParams& p) const {
    if (!finite_all({p.a_lo, p.a_hi, p.jump_prob})) throw ConfigError("product: parameters must be finite");
    if (p.a_lo < 1.0) throw ConfigError("product: a_lo must be >= 1");
    if (p.a_hi < p.a_lo) throw ConfigError("product: a_hi must be >= a_lo");
    if (p.jump_prob < 0.0 || p.jump_prob > 1.0) throw ConfigError("product: jump_prob must lie in [0, 1]");
  }
  void operator()(const RegimeSwitchParams& p) const {
    if (!finite_all({p.v_lo, p.v_hi})) throw ConfigError("regime_switch: parameters must be finite");
    if (!(p.v_lo > 0.0)) throw ConfigError("regime_switch: v_lo must be > 0");
    if (p.v_hi < p.v_lo) throw ConfigError("regime_switch: v_hi must be >= v_lo");
  }
};

}  // namespace

std::string_view kind_name(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::iid_bounded:
      return "iid_bounded";
    case ModelKind::product:
      return "product";
    case ModelKind::regime_switch:
      return "regime_switch";
  }
  return "unknown";
}

ModelKind parse_kind(std::string_view name) {
  if (name == "iid_bounded") return ModelKind::iid_bounded;
  if (name == "product") return ModelKind::product;
  if (name == "regime_switch") return ModelKind::regime_switch;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

void validate_spec(const ModelSpec& spec) {
  std::visit(SpecChecker{}, spec.params);
  if (spec.max_steps == 0) throw ConfigError("max_steps must be positive");
}

double max_initial_variance(const ModelSpec& spec) {
  validate_spec(spec);
  switch (spec.kind()) {
    case ModelKind::iid_bounded:
      return (std::get<IidBoundedParams>(spec.params).variance);
    case ModelKind::product: {
      const double a = std::get<ProductParams>(spec.params).a_lo;
      return a * a;
    }
    case ModelKind::regime_switch:
      // S_0 = 0 always selects the low regime.
      return (std::get<RegimeSwitchParams>(spec.params).v_lo);
  }
  return 0.0;
}

double variance_floor(const ModelSpec& spec) {
  validate_spec(spec);
  switch (spec.kind()) {
    case ModelKind::iid_bounded:
      return (std::get<IidBoundedParams>(spec.params).variance);
    case ModelKind::product: {
      const double a = std::get<ProductParams>(spec.params).a_lo;
      return a * a;
    }
    case ModelKind::regime_switch:
      return (std::get<RegimeSwitchParams>(spec.params).v_lo);
  }
  return 0.0;
}

std::uint64_t required_step_cap(const ModelSpec& spec, double n) {
  if (!(n > 0.0) || !std::isfinite(n)) throw ConfigError("threshold n must be positive and finite");
  const double steps = std::ceil(n / variance_floor(spec)) + 2.0;
  if (steps >= static_cast<double>(std::numeric_limits<std::uint64_t>::max())) {
    throw ConfigError("threshold n is too large for the model's variance floor");
  }
  return static_cast<std::uint64_t>(steps);
}

std::variant<IidBoundedModel, ProductModel, RegimeSwitchModel> ModelState::make_model(const ModelSpec& spec,
                                                                                     CounterRng& rng) {
  switch (spec.kind()) {
    case ModelKind::iid_bounded:
      return IidBoundedModel(std::get<IidBoundedParams>(spec.params));
    case ModelKind::product:
      return ProductModel(std::get<ProductParams>(spec.params));
    case ModelKind::regime_switch:
      return RegimeSwitchModel(std::get<RegimeSwitchParams>(spec.params), rng);
  }
  throw ConfigError("unknown model kind");
}

ModelState::ModelState(const ModelSpec& spec, std::uint64_t seed)
    : spec_((validate_spec(spec), spec)),
      rng_(seed),
      max_steps_(spec.max_steps),
      model_(make_model(spec_, rng_)) {}

ModelState init_model(const ModelSpec& spec, std::uint64_t seed) { return ModelState(spec, seed); }

std::pair<StepOutput, ModelState> step_model(ModelState state) {
  const StepOutput out = state.step();
  return {out, std::move(state)};
}

ValidationReport validate_model(const ModelSpec& spec, std::uint64_t seed, std::uint64_t n_paths,
                                std::uint64_t path_len) {
  validate_spec(spec);
  if (n_paths < 1000) throw UsageError("validate_model: n_paths must be >= 1000");
  if (path_len == 0) throw UsageError("validate_model: path_len must be positive");
  if (path_len > spec.max_steps) throw ConfigError("validate_model: path_len exceeds max_steps");

  const double v_min = variance_floor(spec);
  ValidationReport report;
  report.paths = n_paths;
  report.min_moment_slack = std::numeric_limits<double>::infinity();
  report.min_holder_slack = std::numeric_limits<double>::infinity();
  report.min_floor_slack = std::numeric_limits<double>::infinity();
  RunningMoments constant_g;
  RunningMoments sign_g;

  auto fail = [&](std::uint64_t path, std::uint64_t k, const std::string& what) {
    throw ModelInvalidError(std::string(kind_name(spec.kind())) + ": " + what + " at path " +
                            std::to_string(path) + ", step " + std::to_string(k));
  };

  for (std::uint64_t path = 0; path < n_paths; ++path) {
    ModelState state(spec, derive_seed(seed, path));
    double running_sum = 0.0;
    double previous_y = 1.0;
    CompensatedSum variance_sum;
    for (std::uint64_t k = 0; k < path_len; ++k) {
      const ConditionalLaw law = state.law();
      const StepOutput out = state.step();

      // The emitted triple must be a draw from the announced law.
      if (out.sigma_sq != law.sigma_sq || out.y != law.y || std::fabs(out.x) != law.magnitude) {
        fail(path, k, "emitted step disagrees with its conditional law");
      }
      if (law.mean() != 0.0 || !law.consistent()) {
        fail(path, k, "conditional law is not the centred two-point law +/- sqrt(sigma^2)");
      }
      if (!(out.sigma_sq > 0.0)) fail(path, k, "sigma^2 must be positive");
      if (out.y < 1.0) fail(path, k, "Y below 1");
      if (k > 0 && out.y < previous_y) fail(path, k, "Y decreased");
      if (out.sigma_sq > out.y * out.y) fail(path, k, "sigma^2 exceeds Y^2");
      const double moment_slack = out.y * out.sigma_sq - law.third_abs_moment();
      if (moment_slack < 0.0) fail(path, k, "E(|X|^3 | F) exceeds Y * sigma^2");

      report.min_moment_slack = std::min(report.min_moment_slack, moment_slack);
      report.min_holder_slack = std::min(report.min_holder_slack, out.y * out.y - out.sigma_sq);
      previous_y = out.y;

      constant_g.add(out.x);
      const double g = running_sum > 0.0 ? 1.0 : (running_sum < 0.0 ? -1.0 : 0.0);
      sign_g.add(g * out.x);
      running_sum += out.x;
      variance_sum += out.sigma_sq;
    }
    const double floor_slack = variance_sum.value() - static_cast<double>(path_len) * v_min;
    if (floor_slack < 0.0) fail(path, path_len, "accumulated variance below the variance floor");
    report.min_floor_slack = std::min(report.min_floor_slack, floor_slack);
    report.steps_checked += path_len;
  }

  auto martingale = [](std::string name, const RunningMoments& m) {
    MartingaleCheck check{std::move(name), m.mean(), m.stderr_of_mean(), true};
    check.passed = std::fabs(check.mean) <= 4.0 * check.stderr_of_mean;
    return check;
  };
  report.constant = martingale("constant", constant_g);
  report.sign_of_sum = martingale("sign(S_k)", sign_g);
  report.passed = report.constant.passed && report.sign_of_sum.passed;
  return report;
}

}  // namespace stopsum
