// Acceptance suite. Prints one [PASS]/[FAIL] line per criterion; detail lines are indented.
// Usage: acceptance_tests [--only N]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stopsum/experiment.hpp"
#include "stopsum/harness.hpp"
#include "stopsum/models.hpp"
#include "stopsum/stopping.hpp"

using namespace stopsum;

namespace {

// Pinned tolerances and sizes.
constexpr double kBoundLiteralTol = 1e-6;
constexpr double kResidualTol = 1e-12;
constexpr std::size_t kResidualPaths = 100000;
constexpr std::size_t kDistanceReps = 100000;
constexpr double kDistanceN[] = {64, 256, 1024, 4096};
constexpr std::size_t kCfReps = 1000000;
constexpr double kCfN = 1024;
constexpr double kCfT[] = {-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0};
constexpr std::size_t kLemmaPaths = 10000;
constexpr double kLemmaT[] = {0.5, 1.0, 2.0, 5.0, 10.0};
constexpr double kLemmaN[] = {64, 1024};
constexpr std::size_t kGaussianReps = 100000;
constexpr double kEsseenTol = 0.01;
constexpr std::uint64_t kValidationPaths = 2000;
constexpr std::uint64_t kValidationLen = 2000;
constexpr std::uint64_t kSeed = 20240917;

std::vector<ModelSpec> all_models() {
  return {ModelSpec::iid_bounded(1.0, 1.0), ModelSpec::product(1.0, 2.0, 0.01), ModelSpec::regime_switch(0.25, 4.0)};
}

void detail(const char* fmt, auto... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

struct Outcome {
  bool passed = false;
  std::string summary;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// Distance runs are shared by criteria 3 and 4.
std::map<std::pair<int, double>, BoundReport>& distance_cache() {
  static std::map<std::pair<int, double>, BoundReport> cache;
  return cache;
}

const BoundReport& distance_run(int model_index, double n) {
  auto& cache = distance_cache();
  const auto key = std::make_pair(model_index, n);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const ModelSpec spec = all_models()[static_cast<std::size_t>(model_index)];
  return cache.emplace(key, estimate_distances(spec, n, kDistanceReps, derive_seed(kSeed, 1000 + model_index * 97 + static_cast<std::uint64_t>(n)), kDefaultDelta)).first->second;
}

Outcome criterion1() {
  // The expected literals as stated in the acceptance list.
  const double expected_F = 0.352598, expected_H = 0.357372;
  const double f = theorem_bound_F(1e4, 1.0), h = theorem_bound_H(1e4, 1.0);
  detail("bound_F(1e4, 1) = %.17g, expected %.6f, |diff| = %.3g", f, expected_F, std::fabs(f - expected_F));
  detail("bound_H(1e4, 1) = %.17g, expected %.6f, |diff| = %.3g", h, expected_H, std::fabs(h - expected_H));
  detail("(11 + 0.075 + 2/900 + 0.000125) / (10 pi) = %.17g", (11.0 + 0.075 + 2.0 / 900.0 + 0.000125) / (10.0 * M_PI));
  const bool ok = std::fabs(f - expected_F) <= kBoundLiteralTol && std::fabs(h - expected_H) <= kBoundLiteralTol;
  return {ok, fmt("bound arithmetic at n = 1e4, a_n = 1: F = %.9f, H = %.9f (tolerance %.0e against 0.352598 / 0.357372)",
                  f, h, kBoundLiteralTol)};
}

Outcome criterion2() {
  std::size_t cases = 0, mismatches = 0, skipped = 0;
  for (double v : {0.5, 1.0, 2.0, 3.0, 4.0}) {
    const ModelSpec spec = ModelSpec::iid_bounded(std::max(1.0, std::ceil(std::sqrt(v))), v);
    for (int ni = 3; ni <= 200; ++ni) {
      const double n = ni;
      if (!(v < n)) {
        ++skipped;  // sigma^2_0 alone reaches n: no stopping index k >= 1 with positive gamma
        continue;
      }
      // Hand enumeration: smallest k >= 1 with (k + 1) v >= n.
      std::uint64_t nu = 1;
      while (static_cast<double>(nu + 1) * v < n) ++nu;
      const double gamma = (n - static_cast<double>(nu) * v) / v;
      const StoppedSample s = run_path(spec, static_cast<std::uint64_t>(ni), n);
      ++cases;
      if (s.nu != nu || std::fabs(s.gamma - gamma) > 1e-15 || s.v_before != static_cast<double>(nu) * v) {
        ++mismatches;
        detail("mismatch v = %g n = %g: nu %llu vs %llu, gamma %.17g vs %.17g", v, n,
               static_cast<unsigned long long>(s.nu), static_cast<unsigned long long>(nu), s.gamma, gamma);
      }
    }
  }
  detail("constant variance: %zu cases, %zu mismatches, %zu skipped (v >= n)", cases, mismatches, skipped);

  double worst = 0.0;
  std::size_t bad = 0;
  const ModelSpec random_models[] = {ModelSpec::product(1.0, 2.0, 0.05), ModelSpec::regime_switch(0.25, 4.0),
                                     ModelSpec::product(1.3, 1.9, 0.5)};
  for (std::size_t i = 0; i < kResidualPaths; ++i) {
    const ModelSpec& spec = random_models[i % 3];
    const double n = 10.0 + static_cast<double>(i % 211) * 1.37;
    const StoppedSample s = run_path(spec, derive_seed(kSeed, i), n);
    const double residual = std::fabs(s.v_before + s.gamma * s.sigma_nu_sq - n) / n;
    worst = std::max(worst, residual);
    if (residual > kResidualTol || !(s.gamma > 0.0 && s.gamma <= 1.0) || !(s.v_before < n)) ++bad;
  }
  detail("random models: %zu paths, worst relative residual %.3g, %zu failures", kResidualPaths, worst, bad);
  return {mismatches == 0 && bad == 0,
          fmt("stopping index and gamma match enumeration (%zu cases); max residual %.3g <= %.0e over %zu paths",
              cases, worst, kResidualTol, kResidualPaths)};
}

Outcome criterion3() {
  bool ok = true;
  const auto models = all_models();
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (double n : kDistanceN) {
      const BoundReport& r = distance_run(static_cast<int>(m), n);
      detail("%-40s n = %5g  a_n = %.4f (+3se %.4f)  d_F = %.5f  d_H = %.5f  dkw = %.5f  bound_F = %.5f  bound_H = %.5f  %s",
             model_label(models[m]).c_str(), n, r.a_n_hat, r.a_n_used, r.d_F_hat.d_sup, r.d_H_hat.d_sup,
             r.d_F_hat.dkw_halfwidth, r.bound_F, r.bound_H, r.passed() ? "ok" : "VIOLATION");
      ok = ok && r.passed();
    }
  }
  return {ok, fmt("d - dkw <= bound for F and H, 3 models x 4 values of n, R = %zu, delta = %g", kDistanceReps,
                  kDefaultDelta)};
}

Outcome criterion4() {
  std::vector<BoundReport> reports;
  for (double n : kDistanceN) reports.push_back(distance_run(0, n));
  const RateFit fit = rate_fit(reports);
  detail("iid_bounded log-log slope of d_F: %.4f (stderr %.4f)", fit.slope, fit.slope_stderr);
  return {fit.slope <= kRateSlopeThreshold,
          fmt("fitted slope %.4f <= %.2f for iid_bounded over n = 64..4096", fit.slope, kRateSlopeThreshold)};
}

Outcome criterion5() {
  const ModelSpec spec = ModelSpec::iid_bounded(1.0, 1.0);
  const CfProbe probe = cf_probe(spec, kCfN, kCfReps, kCfT, derive_seed(kSeed, 5));
  detail("a_n used %.6f, y = %.6f", probe.a_n, probe.y);
  std::size_t limited = 0;
  for (const CfPoint& p : probe.points) {
    const std::pair<const char*, const InequalityCheck*> rows[] = {
        {"(7)", &p.ineq7}, {"(8)", &p.ineq8}, {"(9)", &p.ineq9}, {"comb", &p.combined}};
    for (const auto& [name, c] : rows) {
      limited += c->resolution_limited ? 1 : 0;
      detail("t = %5.2f %-5s lhs = %.3e +- %.1e  rhs = %.3e  %s%s", p.t, name, c->lhs, c->lhs_stderr, c->rhs,
             c->passed ? "ok" : "FAIL", c->resolution_limited ? " (resolution-limited)" : "");
    }
  }
  return {probe.passed(), fmt("CF inequalities within %g stderr at %zu t-points, n = %g, R = %zu; %zu resolution-limited",
                              kStderrBand, probe.points.size(), kCfN, kCfReps, limited)};
}

Outcome criterion6() {
  bool ok = true;
  std::uint64_t evaluations = 0;
  for (const ModelSpec& spec : all_models()) {
    for (double n : kLemmaN) {
      SimulationOptions opts;
      opts.lemma1_t.assign(std::begin(kLemmaT), std::end(kLemmaT));
      opts.lemma1_paths = kLemmaPaths;
      Lemma1Summary s;
      simulate_paths(spec, n, kLemmaPaths, derive_seed(kSeed, 6 + static_cast<std::uint64_t>(n)), opts, &s);
      detail("%-40s n = %5g  paths = %llu  evaluations = %llu  violations = %llu  max lhs/rhs = %.4g",
             model_label(spec).c_str(), n, static_cast<unsigned long long>(s.paths),
             static_cast<unsigned long long>(s.evaluations), static_cast<unsigned long long>(s.violations),
             s.max_ratio);
      ok = ok && s.violations == 0 && s.paths == kLemmaPaths;
      evaluations += s.evaluations;
    }
  }
  return {ok, fmt("pathwise exponential inequality: 0 violations required over %llu evaluations",
                  static_cast<unsigned long long>(evaluations))};
}

Outcome criterion7() {
  const double n = 1e4, a = 1.0;
  const double y = smoothing_parameter(n, a);
  std::mt19937_64 gen(kSeed);
  std::normal_distribution<double> normal;
  std::vector<double> z(kGaussianReps);
  for (double& v : z) v = normal(gen);
  const std::vector<double> grid = chebyshev_grid(y);
  const EsseenResult e = esseen_numeric(grid, empirical_cf(z, grid), y);
  const double target = 24.0 / (M_PI * std::sqrt(2.0 * M_PI) * 10.0);
  detail("y = %.6f  value = %.6f  integral = %.6f  smoothing = %.6f  quadrature slack = %.2e", y, e.value,
         e.integral_term, e.smoothing_term, e.quadrature_slack);
  return {std::fabs(e.value - target) <= kEsseenTol,
          fmt("Gaussian samples: esseen value %.5f vs %.5f (tolerance %g)", e.value, target, kEsseenTol)};
}

Outcome criterion8() {
  bool ok = true;
  double regime_slack = -1.0, regime_holder = -1.0;
  for (const ModelSpec& spec : all_models()) {
    const ValidationReport r = validate_model(spec, derive_seed(kSeed, 8), kValidationPaths, kValidationLen);
    detail("%-40s passed = %d  moment slack = %.3g  holder slack = %.3g  floor slack = %.3g",
           model_label(spec).c_str(), r.passed ? 1 : 0, r.min_moment_slack, r.min_holder_slack, r.min_floor_slack);
    ok = ok && r.passed;
    if (spec.kind() == ModelKind::regime_switch) {
      regime_slack = r.min_moment_slack;
      regime_holder = r.min_holder_slack;
    }
  }
  ok = ok && regime_slack == 0.0 && regime_holder == 0.0;
  return {ok, fmt("hypotheses hold for all kinds; regime_switch boundary slack %g (moment), %g (Y^2 - sigma^2)",
                  regime_slack, regime_holder)};
}

Outcome criterion9() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "stopsum_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::size_t compared = 0;
  bool identical = true;
  for (const ModelSpec& spec : all_models()) {
    std::string texts[2];
    const unsigned workers[2] = {1, 3};
    for (int w = 0; w < 2; ++w) {
      ExperimentConfig c;
      c.model = spec;
      c.n_list.assign(std::begin(kDistanceN), std::end(kDistanceN));
      c.reps = kDistanceReps;
      c.master_seed = kSeed;
      c.checks = {Check::distance, Check::cf, Check::lemma1, Check::esseen, Check::rate};
      c.workers = workers[w];
      c.out_path = (dir / (std::string(kind_name(spec.kind())) + "_w" + std::to_string(workers[w]) + ".csv")).string();
      const ExperimentResult r = run_experiment(c);
      for (const std::string& path : r.files_written) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        texts[w] += ss.str();
      }
    }
    const bool same = texts[0] == texts[1] && !texts[0].empty();
    detail("%-40s %zu bytes, workers 1 vs 3: %s", model_label(spec).c_str(), texts[0].size(),
           same ? "identical" : "DIFFERENT");
    identical = identical && same;
    ++compared;
  }
  return {identical, fmt("report and plot files byte-identical across worker counts for %zu models", compared)};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--only" && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  const std::function<Outcome()> criteria[] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                               criterion6, criterion7, criterion8, criterion9};
  int failures = 0;
  for (int k = 1; k <= 9; ++k) {
    if (only != 0 && only != k) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] AC%d %s (%.1f s)\n", o.passed ? "PASS" : "FAIL", k, o.summary.c_str(), secs);
    std::fflush(stdout);
    failures += o.passed ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
