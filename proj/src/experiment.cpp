#include "stopsum/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "stopsum/errors.hpp"
#include "stopsum/harness.hpp"
#include "stopsum/rng.hpp"

namespace stopsum {

namespace {

constexpr std::string_view kCsvHeader =
    "check,model,n,R,seed,estimate,stderr_or_halfwidth,bound,margin,verdict,resolution_limited";

// Probe points for the CF check; points outside [-y, y] are dropped for the given n.
constexpr double kCfProbeT[] = {-2.0, -1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 2.0};
constexpr double kLemma1T[] = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, std::string_view separators) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || separators.find(s[i]) != std::string_view::npos) {
      parts.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return parts;
}

double parse_real(std::string_view text, std::string_view what) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError("cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
  }
  return v;
}

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string plot_path(const std::string& out_path, std::string_view suffix) {
  std::filesystem::path p(out_path);
  p.replace_extension();
  return p.string() + std::string(suffix);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

struct RecordBuilder {
  const ExperimentConfig& config;
  std::string model;

  Record make(std::string check, double n, double estimate, double spread, double bound, double margin, bool passed,
              bool limited = false) const {
    return Record{std::move(check), model,  n,      config.reps, config.master_seed, estimate, spread,
                  bound,            margin, passed, limited};
  }
};

Record worst_inequality(const RecordBuilder& rb, std::string check, double n, const CfProbe& probe,
                        InequalityCheck CfPoint::*member) {
  const InequalityCheck* worst = nullptr;
  bool all_passed = true;
  bool limited = false;
  for (const CfPoint& p : probe.points) {
    const InequalityCheck& c = p.*member;
    all_passed = all_passed && c.passed;
    limited = limited || c.resolution_limited;
    if (worst == nullptr || c.margin() < worst->margin()) worst = &c;
  }
  return rb.make(std::move(check), n, worst->lhs, worst->lhs_stderr, worst->rhs, worst->margin(), all_passed,
                 limited);
}

}  // namespace

std::string_view check_name(Check c) noexcept {
  switch (c) {
    case Check::distance:
      return "distance";
    case Check::cf:
      return "cf";
    case Check::lemma1:
      return "lemma1";
    case Check::esseen:
      return "esseen";
    case Check::rate:
      return "rate";
  }
  return "unknown";
}

std::set<Check> parse_checks(std::string_view text) {
  std::set<Check> checks;
  for (std::string_view name : split(text, ",")) {
    if (name.empty()) continue;
    bool found = false;
    for (Check c : {Check::distance, Check::cf, Check::lemma1, Check::esseen, Check::rate}) {
      if (name == check_name(c)) {
        checks.insert(c);
        found = true;
      }
    }
    if (!found) throw ConfigError("unknown check '" + std::string(name) + "'");
  }
  if (checks.empty()) throw ConfigError("no checks requested");
  return checks;
}

ReportFormat parse_format(std::string_view text) {
  text = trim(text);
  if (text == "csv") return ReportFormat::csv;
  if (text == "json") return ReportFormat::json;
  throw ConfigError("unknown report format '" + std::string(text) + "'");
}

ModelSpec parse_model_spec(std::string_view text) {
  text = trim(text);
  const std::size_t colon = text.find(':');
  const ModelKind kind = parse_kind(trim(text.substr(0, colon)));
  ModelSpec spec;
  switch (kind) {
    case ModelKind::iid_bounded:
      spec = ModelSpec::iid_bounded(1.0, 1.0);
      break;
    case ModelKind::product:
      spec = ModelSpec::product(1.0, 2.0, 0.01);
      break;
    case ModelKind::regime_switch:
      spec = ModelSpec::regime_switch(0.25, 4.0);
      break;
  }
  if (colon != std::string_view::npos) {
    for (std::string_view pair : split(text.substr(colon + 1), ",;")) {
      if (pair.empty()) continue;
      const std::size_t eq = pair.find('=');
      if (eq == std::string_view::npos) throw ConfigError("model parameter '" + std::string(pair) + "' lacks '='");
      const std::string_view key = trim(pair.substr(0, eq));
      const double value = parse_real(pair.substr(eq + 1), key);
      if (key == "max_steps") {
        if (!(value >= 1.0) || value != std::floor(value) || value > 1e18) {
          throw ConfigError("max_steps must be a positive integer");
        }
        spec.max_steps = static_cast<std::uint64_t>(value);
        continue;
      }
      bool known = true;
      std::visit(
          [&](auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, IidBoundedParams>) {
              if (key == "M") p.bound = value;
              else if (key == "v") p.variance = value;
              else known = false;
            } else if constexpr (std::is_same_v<P, ProductParams>) {
              if (key == "a_lo") p.a_lo = value;
              else if (key == "a_hi") p.a_hi = value;
              else if (key == "jump_prob") p.jump_prob = value;
              else known = false;
            } else {
              if (key == "v_lo") p.v_lo = value;
              else if (key == "v_hi") p.v_hi = value;
              else known = false;
            }
          },
          spec.params);
      if (!known) {
        throw ConfigError("unknown parameter '" + std::string(key) + "' for model " + std::string(kind_name(kind)));
      }
    }
  }
  validate_spec(spec);
  return spec;
}

std::string model_label(const ModelSpec& spec) {
  std::string label(kind_name(spec.kind()));
  label += ':';
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, IidBoundedParams>) {
          label += "M=" + shortest(p.bound) + ";v=" + shortest(p.variance);
        } else if constexpr (std::is_same_v<P, ProductParams>) {
          label += "a_lo=" + shortest(p.a_lo) + ";a_hi=" + shortest(p.a_hi) + ";jump_prob=" + shortest(p.jump_prob);
        } else {
          label += "v_lo=" + shortest(p.v_lo) + ";v_hi=" + shortest(p.v_hi);
        }
      },
      spec.params);
  if (spec.max_steps != kDefaultMaxSteps) label += ";max_steps=" + std::to_string(spec.max_steps);
  return label;
}

std::vector<double> parse_n_list(std::string_view text) {
  std::vector<double> out;
  for (std::string_view part : split(text, ",")) {
    if (part.empty()) continue;
    out.push_back(parse_real(part, "n"));
  }
  return out;
}

void validate_config(const ExperimentConfig& config) {
  validate_spec(config.model);
  if (config.n_list.empty()) throw ConfigError("n_list must not be empty");
  for (std::size_t i = 0; i < config.n_list.size(); ++i) {
    const double n = config.n_list[i];
    if (!(n > 0.0) || !std::isfinite(n)) throw ConfigError("every n must be positive and finite");
    if (i > 0 && !(n > config.n_list[i - 1])) throw ConfigError("n_list must be strictly increasing");
    const double min_n = 2.0 * max_initial_variance(config.model);
    if (n < min_n) {
      throw ConfigError("n = " + shortest(n) + " is below 2 * max sigma^2_0 = " + shortest(min_n));
    }
    if (config.model.max_steps < required_step_cap(config.model, n)) {
      throw ConfigError("max_steps is below ceil(n / v_min) + 2 for n = " + shortest(n));
    }
  }
  if (config.checks.empty()) throw ConfigError("no checks requested");
  if (config.reps < kMinReplications) {
    throw ConfigError("reps must be at least " + std::to_string(kMinReplications));
  }
  if (!(config.delta > 0.0 && config.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (config.checks.contains(Check::rate) && config.n_list.size() < 4) {
    throw ConfigError("the rate check needs at least 4 values of n");
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_csv(const std::vector<Record>& records) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const Record& r : records) {
    out += r.check + ',' + r.model + ',' + format_number(r.n) + ',' + std::to_string(r.reps) + ',' +
           std::to_string(r.seed) + ',' + format_number(r.estimate) + ',' + format_number(r.stderr_or_halfwidth) +
           ',' + format_number(r.bound) + ',' + format_number(r.margin) + ',' + (r.passed ? "PASS" : "FAIL") + ',' +
           (r.resolution_limited ? "true" : "false") + '\n';
  }
  return out;
}

std::string format_json(const std::vector<Record>& records) {
  auto number = [](double v) { return std::isfinite(v) ? format_number(v) : std::string("null"); };
  std::string out = "[";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    out += i == 0 ? "\n" : ",\n";
    out += "  {\"check\": " + nlohmann::json(r.check).dump() + ", \"model\": " + nlohmann::json(r.model).dump() +
           ", \"n\": " + number(r.n) + ", \"R\": " + std::to_string(r.reps) + ", \"seed\": " + std::to_string(r.seed) +
           ", \"estimate\": " + number(r.estimate) + ", \"stderr_or_halfwidth\": " + number(r.stderr_or_halfwidth) +
           ", \"bound\": " + number(r.bound) + ", \"margin\": " + number(r.margin) + ", \"verdict\": \"" +
           (r.passed ? "PASS" : "FAIL") + "\", \"resolution_limited\": " + (r.resolution_limited ? "true" : "false") +
           "}";
  }
  out += records.empty() ? "]\n" : "\n]\n";
  return out;
}

std::vector<Record> parse_json(std::string_view text) {
  const nlohmann::json doc = nlohmann::json::parse(text);
  auto real = [](const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  std::vector<Record> records;
  for (const auto& item : doc) {
    Record r;
    r.check = item.at("check").get<std::string>();
    r.model = item.at("model").get<std::string>();
    r.n = real(item.at("n"));
    r.reps = item.at("R").get<std::uint64_t>();
    r.seed = item.at("seed").get<std::uint64_t>();
    r.estimate = real(item.at("estimate"));
    r.stderr_or_halfwidth = real(item.at("stderr_or_halfwidth"));
    r.bound = real(item.at("bound"));
    r.margin = real(item.at("margin"));
    r.passed = item.at("verdict").get<std::string>() == "PASS";
    r.resolution_limited = item.at("resolution_limited").get<bool>();
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<Record> parse_csv(std::string_view text) {
  std::vector<Record> records;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) throw std::runtime_error("parse_csv: bad header");
  auto real = [](std::string_view s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(std::string(s));
  };
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ",");
    if (f.size() != 11) throw std::runtime_error("parse_csv: expected 11 fields");
    records.push_back(Record{std::string(f[0]), std::string(f[1]), real(f[2]), std::stoull(std::string(f[3])),
                             std::stoull(std::string(f[4])), real(f[5]), real(f[6]), real(f[7]), real(f[8]),
                             f[9] == "PASS", f[10] == "true"});
  }
  return records;
}

void emit_report(const std::vector<Record>& records, ReportFormat format, const std::string& path) {
  write_file(path, format == ReportFormat::csv ? format_csv(records) : format_json(records));
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const RecordBuilder rb{config, model_label(config.model)};
  ExperimentResult result;

  std::string ecdf_csv = "n,statistic,p,quantile\n";
  std::string cf_csv = "n,t,inequality,lhs,lhs_stderr,rhs,margin,resolution_limited,verdict\n";
  std::vector<BoundReport> reports;

  const bool needs_lemma = config.checks.contains(Check::lemma1);
  for (double n : config.n_list) {
    SimulationOptions opts;
    opts.workers = config.workers;
    if (needs_lemma) {
      opts.lemma1_t.assign(std::begin(kLemma1T), std::end(kLemma1T));
      opts.lemma1_paths = kLemma1Paths;
    }
    Lemma1Summary lemma;
    const std::uint64_t seed = derive_seed(config.master_seed, std::bit_cast<std::uint64_t>(n));
    const PathBatch batch = simulate_paths(config.model, n, config.reps, seed, opts, needs_lemma ? &lemma : nullptr);
    const BoundReport report = bound_report(batch, config.delta);
    reports.push_back(report);

    if (config.checks.contains(Check::distance)) {
      result.records.push_back(rb.make("distance_F", n, report.d_F_hat.d_sup, report.d_F_hat.dkw_halfwidth,
                                       report.bound_F, report.margin_F, report.pass_F));
      result.records.push_back(rb.make("distance_H", n, report.d_H_hat.d_sup, report.d_H_hat.dkw_halfwidth,
                                       report.bound_H, report.margin_H, report.pass_H));
      const EmpiricalCdf f(batch.normalized_s());
      const EmpiricalCdf h(batch.normalized_s_prime());
      for (int q = 1; q <= 99; ++q) {
        const double p = q / 100.0;
        ecdf_csv += format_number(n) + ",F," + format_number(p) + ',' + format_number(f.quantile(p)) + '\n';
        ecdf_csv += format_number(n) + ",H," + format_number(p) + ',' + format_number(h.quantile(p)) + '\n';
      }
    }

    if (config.checks.contains(Check::cf)) {
      std::vector<double> grid;
      for (double t : kCfProbeT) {
        if (std::fabs(t) <= report.y_smoothing) grid.push_back(t);
      }
      const CfProbe probe = cf_probe(batch, grid, report.a_n_used, report.y_smoothing, config.workers);
      result.records.push_back(worst_inequality(rb, "cf_7", n, probe, &CfPoint::ineq7));
      result.records.push_back(worst_inequality(rb, "cf_8", n, probe, &CfPoint::ineq8));
      result.records.push_back(worst_inequality(rb, "cf_9", n, probe, &CfPoint::ineq9));
      result.records.push_back(worst_inequality(rb, "cf_combined", n, probe, &CfPoint::combined));
      for (const CfPoint& p : probe.points) {
        const std::pair<const char*, const InequalityCheck*> rows[] = {
            {"7", &p.ineq7}, {"8", &p.ineq8}, {"9", &p.ineq9}, {"combined", &p.combined}};
        for (const auto& [name, c] : rows) {
          cf_csv += format_number(n) + ',' + format_number(p.t) + ',' + name + ',' + format_number(c->lhs) + ',' +
                    format_number(c->lhs_stderr) + ',' + format_number(c->rhs) + ',' + format_number(c->margin()) +
                    ',' + (c->resolution_limited ? "true" : "false") + ',' + (c->passed ? "PASS" : "FAIL") + '\n';
        }
      }
    }

    if (needs_lemma) {
      result.records.push_back(
          Record{"lemma1", rb.model, n, lemma.paths, config.master_seed, lemma.max_ratio, 0.0, 1.0,
                 1.0 - lemma.max_ratio, lemma.violations == 0, false});
    }

    if (config.checks.contains(Check::esseen)) {
      const double y = report.y_smoothing;
      const std::vector<double> grid = chebyshev_grid(y);
      const std::vector<double> z = batch.normalized_s();
      const EsseenResult e = esseen_numeric(grid, empirical_cf(z, grid, config.workers), y);
      const double slack = report.d_F_hat.dkw_halfwidth + e.quadrature_slack;
      result.records.push_back(rb.make("esseen", n, report.d_F_hat.d_sup, slack, e.value,
                                       e.value + slack - report.d_F_hat.d_sup,
                                       report.d_F_hat.d_sup - slack <= e.value));
    }
  }

  if (config.checks.contains(Check::rate)) {
    const RateFit fit = rate_fit(reports);
    result.records.push_back(rb.make("rate", config.n_list.back(), fit.slope, fit.slope_stderr, kRateSlopeThreshold,
                                     kRateSlopeThreshold - fit.slope, fit.slope <= kRateSlopeThreshold));
  }

  for (const Record& r : result.records) {
    if (!r.passed) {
      result.exit_status = 1;
      result.first_failure = r.check + " at n = " + format_number(r.n);
      break;
    }
  }

  result.report_text = config.format == ReportFormat::csv ? format_csv(result.records) : format_json(result.records);
  if (!config.out_path.empty()) {
    write_file(config.out_path, result.report_text);
    result.files_written.push_back(config.out_path);
    if (config.checks.contains(Check::distance)) {
      const std::string p = plot_path(config.out_path, ".ecdf.csv");
      write_file(p, ecdf_csv);
      result.files_written.push_back(p);
    }
    if (config.checks.contains(Check::cf)) {
      const std::string p = plot_path(config.out_path, ".cf.csv");
      write_file(p, cf_csv);
      result.files_written.push_back(p);
    }
  }
  return result;
}

}  // namespace stopsum
