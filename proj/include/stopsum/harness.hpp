#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "stopsum/models.hpp"
#include "stopsum/normal_math.hpp"
#include "stopsum/stopping.hpp"

namespace stopsum {

/// Smallest replication count accepted by the distance and CF estimators.
inline constexpr std::size_t kMinReplications = 100;
/// Width of statistical acceptance bands, in standard errors.
inline constexpr double kStderrBand = 4.0;
/// Standard errors added to the a_n estimate before evaluating the bounds.
inline constexpr double kAnInflation = 3.0;
/// Decay rate of the bounds in n is n^{-1/4}; empirical slopes must reach at least this.
inline constexpr double kRateSlopeThreshold = -0.15;
inline constexpr std::size_t kDefaultCfGridPoints = 129;

/// (sqrt(a_n) / (pi n^{1/4})) (11 + 3/(4 n^{1/4}) + 2/(9 n^{1/2}) + 1/(8 n^{3/4})).
double theorem_bound_F(double n, double a_n);
/// As theorem_bound_F with 9/(4 n^{1/4}) as second term.
double theorem_bound_H(double n, double a_n);
/// Esseen smoothing parameter y = (n / a_n^2)^{1/4}.
double smoothing_parameter(double n, double a_n);
/// 24 / (pi sqrt(2 pi) y).
double esseen_smoothing_term(double y);

/// Columnar per-path summaries for one (model, n, R, seed) run. Row i comes from path seed derive_seed(seed, i).
struct PathBatch {
  double n = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> nu;
  std::vector<double> gamma;
  std::vector<double> s_nu;
  std::vector<double> s_prime_nu;
  std::vector<double> v_before;
  std::vector<double> sigma_nu_sq;
  std::vector<double> y_nu;

  std::size_t size() const noexcept { return s_nu.size(); }
  std::vector<double> normalized_s() const;
  std::vector<double> normalized_s_prime() const;
};

struct Lemma1Summary {
  std::uint64_t paths = 0;
  std::uint64_t evaluations = 0;
  std::uint64_t violations = 0;
  double max_ratio = 0.0;  // max lhs / rhs over paths and t
  double min_slack = 0.0;  // min rhs - lhs
  double worst_t = 0.0;
};

struct SimulationOptions {
  unsigned workers = 0;          // 0 selects default_worker_count()
  std::vector<double> lemma1_t;  // nonempty: retain prefixes and check Lemma 1
  std::size_t lemma1_paths = std::numeric_limits<std::size_t>::max();  // only the first paths are checked
};

/// Runs R independent stopped paths. Output is independent of the worker count.
PathBatch simulate_paths(const ModelSpec& spec, double n, std::size_t reps, std::uint64_t seed,
                         const SimulationOptions& opts = {}, Lemma1Summary* lemma1 = nullptr);

struct AnEstimate {
  double value = 1.0;   // sqrt(mean Y_nu^4)
  double std_error = 0.0;  // delta method
};

AnEstimate estimate_a_n(std::span<const double> y_nu);
AnEstimate estimate_a_n(std::span<const StoppedSample> samples);

struct BoundReport {
  double n = 0.0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  double a_n_hat = 1.0;
  double a_n_stderr = 0.0;
  double a_n_used = 1.0;  // a_n_hat + kAnInflation * a_n_stderr
  DistanceResult d_F_hat;
  DistanceResult d_H_hat;
  double bound_F = 0.0;
  double bound_H = 0.0;
  double y_smoothing = 0.0;  // from a_n_hat
  double margin_F = 0.0;     // bound - (distance + dkw)
  double margin_H = 0.0;
  bool pass_F = false;  // distance - dkw <= bound
  bool pass_H = false;

  bool passed() const noexcept { return pass_F && pass_H; }
};

BoundReport bound_report(const PathBatch& batch, double delta = kDefaultDelta);

BoundReport estimate_distances(const ModelSpec& spec, double n, std::size_t reps, std::uint64_t seed,
                               double delta = kDefaultDelta, unsigned workers = 0);

/// Monte-Carlo mean of a complex per-path quantity with componentwise standard errors.
struct CfEstimate {
  std::complex<double> value;
  double stderr_re = 0.0;
  double stderr_im = 0.0;

  double stderr_abs() const noexcept;
};

struct InequalityCheck {
  double lhs = 0.0;
  double lhs_stderr = 0.0;
  double rhs = 0.0;
  bool resolution_limited = false;  // rhs below one standard error
  bool passed = true;               // lhs <= rhs + kStderrBand * lhs_stderr

  double margin() const noexcept { return rhs + kStderrBand * lhs_stderr - lhs; }
};

struct CfPoint {
  double t = 0.0;
  CfEstimate c1;  // E exp(i t S/sqrt n + t^2/(2n) sum_{p<nu} sigma^2_p)
  CfEstimate c2;  // E exp(i t S/sqrt n + t^2/2)
  CfEstimate c3;  // E exp(i t S/sqrt n)
  CfEstimate c4;  // E exp(i t S'/sqrt n)
  InequalityCheck ineq7;     // |c1 - 1|
  InequalityCheck ineq8;     // |c1 - c2|
  InequalityCheck ineq9;     // |c3 - c4|
  InequalityCheck combined;  // |c3 - exp(-t^2/2)|
};

struct CfProbe {
  double n = 0.0;
  std::size_t reps = 0;
  double a_n = 1.0;  // value used on the right-hand sides
  double y = 0.0;    // admissible range [-y, y]
  std::vector<CfPoint> points;

  bool passed() const noexcept;
  bool any_resolution_limited() const noexcept;
};

/// Symmetric Chebyshev-Lobatto points -y cos(k pi / (count - 1)); contains 0 when count is odd.
std::vector<double> chebyshev_grid(double y, std::size_t count = kDefaultCfGridPoints);

/// Estimates the four expectations and the right-hand sides of the CF inequalities at every t.
/// `a_n` enters the right-hand sides, `y` bounds the grid. Throws UsageError for |t| > y.
CfProbe cf_probe(const PathBatch& batch, std::span<const double> t_grid, double a_n, double y,
                 unsigned workers = 0);

/// Runs the paths and probes with a_n = a_n_hat + 3 stderr and y = (n / a_n_hat^2)^{1/4}.
CfProbe cf_probe(const ModelSpec& spec, double n, std::size_t reps, std::span<const double> t_grid,
                 std::uint64_t seed, unsigned workers = 0);

/// Empirical characteristic function of a sample at each t.
std::vector<CfEstimate> empirical_cf(std::span<const double> sample, std::span<const double> t_grid,
                                     unsigned workers = 0);

struct EsseenResult {
  double value = 0.0;           // integral / pi + smoothing term
  double integral_term = 0.0;   // (1/pi) int_{-y}^{y} |c3 - exp(-t^2/2)| / |t| dt
  double smoothing_term = 0.0;  // 24 / (pi sqrt(2 pi) y)
  double quadrature_slack = 0.0;  // |trapezoid(grid) - trapezoid(every other point)| / pi
};

/// Trapezoid evaluation of the Esseen right-hand side from CF estimates on a grid covering [-y, y].
EsseenResult esseen_numeric(std::span<const double> t_grid, std::span<const CfEstimate> cf, double y);
EsseenResult esseen_numeric(const CfProbe& probe, double y);

struct RateFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Least-squares slope of log d versus log n. Needs at least four distinct n.
RateFit rate_fit(std::span<const double> n_values, std::span<const double> distances);
RateFit rate_fit(std::span<const BoundReport> reports);

}  // namespace stopsum
