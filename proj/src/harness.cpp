#include "stopsum/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include "stopsum/errors.hpp"
#include "stopsum/parallel.hpp"
#include "stopsum/rng.hpp"
#include "stopsum/summation.hpp"

namespace stopsum {

namespace {

// Reduction blocks have a fixed size so the summation tree never depends on the worker count.
constexpr std::size_t kBlockSize = 4096;

unsigned resolve_workers(unsigned workers) { return workers == 0 ? default_worker_count() : workers; }

template <std::size_t K>
using MomentArray = std::array<RunningMoments, K>;

template <std::size_t K>
MomentArray<K> merge_tree(std::span<const MomentArray<K>> blocks) {
  if (blocks.size() == 1) return blocks.front();
  const std::size_t half = blocks.size() / 2;
  MomentArray<K> left = merge_tree<K>(blocks.first(half));
  const MomentArray<K> right = merge_tree<K>(blocks.subspan(half));
  for (std::size_t k = 0; k < K; ++k) left[k].merge(right[k]);
  return left;
}

/// Moments of K per-row quantities; fill(i, values) writes row i's quantities.
template <std::size_t K, class Fill>
MomentArray<K> block_moments(std::size_t count, unsigned workers, Fill&& fill) {
  if (count == 0) return {};
  const std::size_t n_blocks = (count + kBlockSize - 1) / kBlockSize;
  std::vector<MomentArray<K>> blocks(n_blocks);
  parallel_for(n_blocks, workers, [&](std::size_t b0, std::size_t b1) {
    std::array<double, K> values{};
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t end = std::min(count, (b + 1) * kBlockSize);
      for (std::size_t i = b * kBlockSize; i < end; ++i) {
        fill(i, values);
        for (std::size_t k = 0; k < K; ++k) blocks[b][k].add(values[k]);
      }
    }
  });
  return merge_tree<K>(blocks);
}

CfEstimate to_estimate(const RunningMoments& re, const RunningMoments& im) {
  return {{re.mean(), im.mean()}, re.stderr_of_mean(), im.stderr_of_mean()};
}

InequalityCheck make_check(const RunningMoments& re, const RunningMoments& im, std::complex<double> offset,
                           double rhs) {
  InequalityCheck c;
  c.lhs = std::abs(std::complex<double>(re.mean(), im.mean()) - offset);
  c.lhs_stderr = std::hypot(re.stderr_of_mean(), im.stderr_of_mean());
  c.rhs = rhs;
  c.resolution_limited = rhs < c.lhs_stderr;
  c.passed = c.lhs <= rhs + kStderrBand * c.lhs_stderr;
  return c;
}

void require_positive(double n, double a_n) {
  if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("bound: n must be positive and finite");
  if (!(a_n >= 1.0) || !std::isfinite(a_n)) throw DomainError("bound: a_n must be finite and >= 1");
}

double theorem_bound(double n, double a_n, double second_coefficient) {
  require_positive(n, a_n);
  const double q = std::pow(n, 0.25);
  const double lead = std::sqrt(a_n) / (std::numbers::pi * q);
  return lead * (11.0 + second_coefficient / q + 2.0 / (9.0 * q * q) + 1.0 / (8.0 * q * q * q));
}

}  // namespace

double theorem_bound_F(double n, double a_n) { return theorem_bound(n, a_n, 3.0 / 4.0); }

double theorem_bound_H(double n, double a_n) { return theorem_bound(n, a_n, 9.0 / 4.0); }

double smoothing_parameter(double n, double a_n) {
  require_positive(n, a_n);
  return std::pow(n / (a_n * a_n), 0.25);
}

double esseen_smoothing_term(double y) {
  if (!(y > 0.0)) throw DomainError("esseen_smoothing_term: y must be positive");
  return 24.0 / (std::numbers::pi * std::sqrt(2.0 * std::numbers::pi) * y);
}

std::vector<double> PathBatch::normalized_s() const {
  std::vector<double> z(s_nu.size());
  const double root_n = std::sqrt(n);
  std::transform(s_nu.begin(), s_nu.end(), z.begin(), [&](double s) { return s / root_n; });
  return z;
}

std::vector<double> PathBatch::normalized_s_prime() const {
  std::vector<double> z(s_prime_nu.size());
  const double root_n = std::sqrt(n);
  std::transform(s_prime_nu.begin(), s_prime_nu.end(), z.begin(), [&](double s) { return s / root_n; });
  return z;
}

PathBatch simulate_paths(const ModelSpec& spec, double n, std::size_t reps, std::uint64_t seed,
                         const SimulationOptions& opts, Lemma1Summary* lemma1) {
  validate_spec(spec);
  if (reps == 0) throw UsageError("simulate_paths: reps must be positive");
  if (spec.max_steps < required_step_cap(spec, n)) {
    throw ConfigError("max_steps " + std::to_string(spec.max_steps) + " is below the required cap " +
                      std::to_string(required_step_cap(spec, n)) + " for n = " + std::to_string(n));
  }
  const bool check_lemma = !opts.lemma1_t.empty();
  if (check_lemma && lemma1 == nullptr) throw UsageError("simulate_paths: lemma1 summary output missing");

  PathBatch batch;
  batch.n = n;
  batch.seed = seed;
  batch.nu.resize(reps);
  batch.gamma.resize(reps);
  batch.s_nu.resize(reps);
  batch.s_prime_nu.resize(reps);
  batch.v_before.resize(reps);
  batch.sigma_nu_sq.resize(reps);
  batch.y_nu.resize(reps);

  struct LemmaWorst {
    Lemma1Summary summary;
    std::size_t worst_path = std::numeric_limits<std::size_t>::max();
  };
  const unsigned workers = resolve_workers(opts.workers);
  const std::size_t n_chunks = std::min<std::size_t>(workers, reps);
  std::vector<LemmaWorst> lemma_parts(std::max<std::size_t>(n_chunks, 1));
  for (auto& part : lemma_parts) part.summary.min_slack = std::numeric_limits<double>::infinity();

  const PathOptions with_prefix{true};
  const PathOptions without_prefix{false};
  const std::size_t chunk = (reps + n_chunks - 1) / n_chunks;
  parallel_for(reps, workers, [&](std::size_t begin, std::size_t end) {
    LemmaWorst& part = lemma_parts[begin / chunk];
    for (std::size_t i = begin; i < end; ++i) {
      ModelState state(spec, derive_seed(seed, i));
      const bool lemma_path = check_lemma && i < opts.lemma1_paths;
      const StoppedSample s = run_path(state, n, lemma_path ? with_prefix : without_prefix);
      batch.nu[i] = s.nu;
      batch.gamma[i] = s.gamma;
      batch.s_nu[i] = s.s_nu;
      batch.s_prime_nu[i] = s.s_prime_nu;
      batch.v_before[i] = s.v_before;
      batch.sigma_nu_sq[i] = s.sigma_nu_sq;
      batch.y_nu[i] = s.y_nu;
      if (!lemma_path) continue;
      for (double t : opts.lemma1_t) {
        const Lemma1Residual r = lemma1_check(s, t, n);
        ++part.summary.evaluations;
        if (!r.holds) ++part.summary.violations;
        const double ratio = r.lhs / r.rhs;
        if (ratio > part.summary.max_ratio || part.worst_path == std::numeric_limits<std::size_t>::max()) {
          part.summary.max_ratio = ratio;
          part.summary.worst_t = t;
          part.worst_path = i;
        }
        part.summary.min_slack = std::min(part.summary.min_slack, r.slack);
      }
      ++part.summary.paths;
    }
  });

  if (check_lemma) {
    LemmaWorst total = lemma_parts.front();
    for (std::size_t c = 1; c < lemma_parts.size(); ++c) {
      const LemmaWorst& p = lemma_parts[c];
      if (p.summary.paths == 0) continue;
      total.summary.paths += p.summary.paths;
      total.summary.evaluations += p.summary.evaluations;
      total.summary.violations += p.summary.violations;
      total.summary.min_slack = std::min(total.summary.min_slack, p.summary.min_slack);
      // Chunks are in path order, so strict comparison keeps the lowest path index on ties.
      if (p.summary.max_ratio > total.summary.max_ratio) {
        total.summary.max_ratio = p.summary.max_ratio;
        total.summary.worst_t = p.summary.worst_t;
        total.worst_path = p.worst_path;
      }
    }
    *lemma1 = total.summary;
  }
  return batch;
}

AnEstimate estimate_a_n(std::span<const double> y_nu) {
  if (y_nu.empty()) throw DomainError("estimate_a_n: no samples");
  std::vector<double> fourth(y_nu.size());
  std::transform(y_nu.begin(), y_nu.end(), fourth.begin(), [](double y) {
    const double y2 = y * y;
    return y2 * y2;
  });
  const auto r = static_cast<double>(fourth.size());
  const double mean = pairwise_sum(fourth) / r;

  AnEstimate est;
  est.value = std::sqrt(mean);
  if (fourth.size() > 1) {
    for (double& v : fourth) v = (v - mean) * (v - mean);
    const double variance = pairwise_sum(fourth) / (r - 1.0);
    const double mean_stderr = std::sqrt(variance / r);
    est.std_error = mean_stderr / (2.0 * est.value);
  }
  return est;
}

AnEstimate estimate_a_n(std::span<const StoppedSample> samples) {
  std::vector<double> y(samples.size());
  std::transform(samples.begin(), samples.end(), y.begin(), [](const StoppedSample& s) { return s.y_nu; });
  return estimate_a_n(y);
}

BoundReport bound_report(const PathBatch& batch, double delta) {
  if (batch.size() < kMinReplications) {
    throw UsageError("bound_report: at least " + std::to_string(kMinReplications) + " replications required");
  }
  BoundReport report;
  report.n = batch.n;
  report.reps = batch.size();
  report.seed = batch.seed;

  const AnEstimate a = estimate_a_n(batch.y_nu);
  report.a_n_hat = a.value;
  report.a_n_stderr = a.std_error;
  report.a_n_used = a.value + kAnInflation * a.std_error;

  report.d_F_hat = kolmogorov_distance(EmpiricalCdf(batch.normalized_s()), delta);
  report.d_H_hat = kolmogorov_distance(EmpiricalCdf(batch.normalized_s_prime()), delta);
  report.bound_F = theorem_bound_F(batch.n, report.a_n_used);
  report.bound_H = theorem_bound_H(batch.n, report.a_n_used);
  report.y_smoothing = smoothing_parameter(batch.n, report.a_n_hat);

  report.margin_F = report.bound_F - (report.d_F_hat.d_sup + report.d_F_hat.dkw_halfwidth);
  report.margin_H = report.bound_H - (report.d_H_hat.d_sup + report.d_H_hat.dkw_halfwidth);
  report.pass_F = report.d_F_hat.d_sup - report.d_F_hat.dkw_halfwidth <= report.bound_F;
  report.pass_H = report.d_H_hat.d_sup - report.d_H_hat.dkw_halfwidth <= report.bound_H;
  return report;
}

BoundReport estimate_distances(const ModelSpec& spec, double n, std::size_t reps, std::uint64_t seed, double delta,
                               unsigned workers) {
  if (reps < kMinReplications) {
    throw UsageError("estimate_distances: at least " + std::to_string(kMinReplications) + " replications required");
  }
  SimulationOptions opts;
  opts.workers = workers;
  return bound_report(simulate_paths(spec, n, reps, seed, opts), delta);
}

double CfEstimate::stderr_abs() const noexcept { return std::hypot(stderr_re, stderr_im); }

bool CfProbe::passed() const noexcept {
  return std::all_of(points.begin(), points.end(), [](const CfPoint& p) {
    return p.ineq7.passed && p.ineq8.passed && p.ineq9.passed && p.combined.passed;
  });
}

bool CfProbe::any_resolution_limited() const noexcept {
  return std::any_of(points.begin(), points.end(), [](const CfPoint& p) {
    return p.ineq7.resolution_limited || p.ineq8.resolution_limited || p.ineq9.resolution_limited ||
           p.combined.resolution_limited;
  });
}

std::vector<double> chebyshev_grid(double y, std::size_t count) {
  if (!(y > 0.0) || !std::isfinite(y)) throw UsageError("chebyshev_grid: y must be positive and finite");
  if (count < 3) throw UsageError("chebyshev_grid: need at least 3 points");
  std::vector<double> t(count);
  const double step = std::numbers::pi / static_cast<double>(count - 1);
  for (std::size_t k = 0; k < count / 2; ++k) {
    const double v = y * std::cos(static_cast<double>(k) * step);
    t[k] = -v;
    t[count - 1 - k] = v;
  }
  t.front() = -y;
  t.back() = y;
  if (count % 2 == 1) t[count / 2] = 0.0;
  return t;
}

CfProbe cf_probe(const PathBatch& batch, std::span<const double> t_grid, double a_n, double y, unsigned workers) {
  if (batch.size() < kMinReplications) {
    throw UsageError("cf_probe: at least " + std::to_string(kMinReplications) + " replications required");
  }
  if (!(a_n >= 1.0)) throw UsageError("cf_probe: a_n must be >= 1");
  for (double t : t_grid) {
    if (!std::isfinite(t) || std::fabs(t) > y) {
      throw UsageError("cf_probe: t = " + std::to_string(t) + " lies outside [-y, y], y = " + std::to_string(y));
    }
  }
  workers = resolve_workers(workers);

  CfProbe probe;
  probe.n = batch.n;
  probe.reps = batch.size();
  probe.a_n = a_n;
  probe.y = y;

  const double n = batch.n;
  const double root_n = std::sqrt(n);
  for (double t : t_grid) {
    const double scale = t * t / (2.0 * n);
    const double growth = std::exp(0.5 * t * t);
    const auto m = block_moments<14>(batch.size(), workers, [&](std::size_t i, std::array<double, 14>& v) {
      const double theta = t * batch.s_nu[i] / root_n;
      const double theta_prime = t * batch.s_prime_nu[i] / root_n;
      const std::complex<double> z3(std::cos(theta), std::sin(theta));
      const std::complex<double> z4(std::cos(theta_prime), std::sin(theta_prime));
      const std::complex<double> z1 = std::exp(scale * batch.v_before[i]) * z3;
      const std::complex<double> z2 = growth * z3;
      const std::complex<double> d7 = z1 - 1.0;
      const std::complex<double> d8 = z1 - z2;
      const std::complex<double> d9 = z3 - z4;
      v = {d7.real(), d7.imag(), d8.real(), d8.imag(), d9.real(), d9.imag(), z3.real(), z3.imag(),
           z4.real(), z4.imag(), z1.real(), z1.imag(), z2.real(), z2.imag()};
    });

    const double at = std::fabs(t);
    const double t2 = t * t;
    const double cubic = a_n * at * t2 / (3.0 * n * root_n);
    const double quartic = a_n * t2 * t2 / (4.0 * n * n);

    CfPoint p;
    p.t = t;
    p.c1 = to_estimate(m[10], m[11]);
    p.c2 = to_estimate(m[12], m[13]);
    p.c3 = to_estimate(m[6], m[7]);
    p.c4 = to_estimate(m[8], m[9]);
    p.ineq7 = make_check(m[0], m[1], 0.0, a_n * growth * (at / (3.0 * root_n) + t2 / (4.0 * n) + cubic + quartic));
    p.ineq8 = make_check(m[2], m[3], 0.0, a_n * t2 / (2.0 * n) * growth);
    p.ineq9 = make_check(m[4], m[5], 0.0, 3.0 * a_n * t2 / (2.0 * n));
    p.combined = make_check(m[6], m[7], gaussian_cf(t),
                            a_n * (at / (3.0 * root_n) + 3.0 * t2 / (4.0 * n) + cubic + quartic));
    probe.points.push_back(p);
  }
  return probe;
}

CfProbe cf_probe(const ModelSpec& spec, double n, std::size_t reps, std::span<const double> t_grid,
                 std::uint64_t seed, unsigned workers) {
  if (reps < kMinReplications) {
    throw UsageError("cf_probe: at least " + std::to_string(kMinReplications) + " replications required");
  }
  SimulationOptions opts;
  opts.workers = workers;
  const PathBatch batch = simulate_paths(spec, n, reps, seed, opts);
  const AnEstimate a = estimate_a_n(batch.y_nu);
  return cf_probe(batch, t_grid, a.value + kAnInflation * a.std_error, smoothing_parameter(n, a.value), workers);
}

std::vector<CfEstimate> empirical_cf(std::span<const double> sample, std::span<const double> t_grid,
                                     unsigned workers) {
  if (sample.empty()) throw DomainError("empirical_cf: empty sample");
  workers = resolve_workers(workers);
  std::vector<CfEstimate> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    const auto m = block_moments<2>(sample.size(), workers, [&](std::size_t i, std::array<double, 2>& v) {
      v = {std::cos(t * sample[i]), std::sin(t * sample[i])};
    });
    out.push_back(to_estimate(m[0], m[1]));
  }
  return out;
}

EsseenResult esseen_numeric(std::span<const double> t_grid, std::span<const CfEstimate> cf, double y) {
  if (!(y > 0.0) || !std::isfinite(y)) throw UsageError("esseen_numeric: y must be positive and finite");
  if (t_grid.size() != cf.size()) throw UsageError("esseen_numeric: grid and CF estimates differ in length");
  if (t_grid.size() < kDefaultCfGridPoints) {
    throw UsageError("esseen_numeric: grid needs at least " + std::to_string(kDefaultCfGridPoints) + " points");
  }
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) ||
      std::adjacent_find(t_grid.begin(), t_grid.end()) != t_grid.end()) {
    throw UsageError("esseen_numeric: grid must be strictly increasing");
  }
  const double tol = 1e-12 * y;
  if (t_grid.front() > -y + tol || t_grid.back() < y - tol || t_grid.front() < -y - tol || t_grid.back() > y + tol) {
    throw UsageError("esseen_numeric: grid does not span [-y, y]");
  }

  std::vector<double> integrand(t_grid.size());
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid[i];
    if (t != 0.0) {
      integrand[i] = std::abs(cf[i].value - gaussian_cf(t)) / std::fabs(t);
      continue;
    }
    // Continuity at 0: |c3'(0)| from the two innermost neighbours (exp(-t^2/2) has zero slope there).
    if (i == 0 || i + 1 == t_grid.size()) throw UsageError("esseen_numeric: t = 0 cannot be a grid endpoint");
    integrand[i] = std::abs(cf[i + 1].value - cf[i - 1].value) / (t_grid[i + 1] - t_grid[i - 1]);
  }

  auto trapezoid = [&](std::size_t stride) {
    CompensatedSum area;
    std::size_t prev = 0;
    for (std::size_t i = stride;; i += stride) {
      const std::size_t cur = std::min(i, t_grid.size() - 1);
      area += 0.5 * (integrand[prev] + integrand[cur]) * (t_grid[cur] - t_grid[prev]);
      prev = cur;
      if (cur == t_grid.size() - 1) break;
    }
    return area.value();
  };
  const double full = trapezoid(1);
  const double coarse = trapezoid(2);

  EsseenResult r;
  r.integral_term = full / std::numbers::pi;
  r.quadrature_slack = std::fabs(full - coarse) / std::numbers::pi;
  r.smoothing_term = esseen_smoothing_term(y);
  r.value = r.integral_term + r.smoothing_term;
  return r;
}

EsseenResult esseen_numeric(const CfProbe& probe, double y) {
  std::vector<double> t(probe.points.size());
  std::vector<CfEstimate> c3(probe.points.size());
  for (std::size_t i = 0; i < probe.points.size(); ++i) {
    t[i] = probe.points[i].t;
    c3[i] = probe.points[i].c3;
  }
  return esseen_numeric(t, c3, y);
}

RateFit rate_fit(std::span<const double> n_values, std::span<const double> distances) {
  if (n_values.size() != distances.size()) throw UsageError("rate_fit: input lengths differ");
  if (std::set<double>(n_values.begin(), n_values.end()).size() < 4) {
    throw UsageError("rate_fit: need at least 4 distinct n values");
  }
  const std::size_t m = n_values.size();
  std::vector<double> x(m), y(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(n_values[i] > 0.0) || !(distances[i] > 0.0)) {
      throw DomainError("rate_fit: n and distances must be positive");
    }
    x[i] = std::log(n_values[i]);
    y[i] = std::log(distances[i]);
  }
  const double mx = pairwise_sum(x) / static_cast<double>(m);
  const double my = pairwise_sum(y) / static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  RateFit fit;
  fit.points = m;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += e * e;
  }
  fit.slope_stderr = m > 2 ? std::sqrt(ssr / static_cast<double>(m - 2) / sxx) : 0.0;
  return fit;
}

RateFit rate_fit(std::span<const BoundReport> reports) {
  std::vector<double> n(reports.size()), d(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i) {
    n[i] = reports[i].n;
    d[i] = reports[i].d_F_hat.d_sup;
  }
  return rate_fit(n, d);
}

}  // namespace stopsum
