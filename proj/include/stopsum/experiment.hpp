#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stopsum/models.hpp"
#include "stopsum/normal_math.hpp"

namespace stopsum {

enum class Check { distance, cf, lemma1, esseen, rate };
enum class ReportFormat { csv, json };

std::string_view check_name(Check c) noexcept;
std::set<Check> parse_checks(std::string_view text);
ReportFormat parse_format(std::string_view text);

/// Parses "kind" or "kind:key=value,key=value" (';' also separates pairs).
/// Keys: iid_bounded M, v; product a_lo, a_hi, jump_prob; regime_switch v_lo, v_hi; any kind max_steps.
ModelSpec parse_model_spec(std::string_view text);
/// Canonical "kind:key=value;..." label with shortest round-trip numbers.
std::string model_label(const ModelSpec& spec);

/// Comma-separated positive reals.
std::vector<double> parse_n_list(std::string_view text);

/// Paths examined by the lemma1 check per n (the first paths of each batch).
inline constexpr std::size_t kLemma1Paths = 10000;

struct ExperimentConfig {
  ModelSpec model;
  std::vector<double> n_list;
  std::size_t reps = 10000;
  std::uint64_t master_seed = 1;
  double delta = kDefaultDelta;
  std::set<Check> checks{Check::distance};
  std::string out_path;  // empty: report goes to the returned text only
  ReportFormat format = ReportFormat::csv;
  unsigned workers = 0;  // 0: STOPSUM_WORKERS or hardware concurrency; never changes numeric output
};

/// Throws ConfigError when the configuration cannot be run.
void validate_config(const ExperimentConfig& config);

struct Record {
  std::string check;
  std::string model;
  double n = 0.0;
  std::uint64_t reps = 0;
  std::uint64_t seed = 0;
  double estimate = 0.0;
  double stderr_or_halfwidth = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  bool passed = false;
  bool resolution_limited = false;

  bool operator==(const Record&) const = default;
};

/// "%.17g"; non-finite values become nan, inf, -inf.
std::string format_number(double v);

std::string format_csv(const std::vector<Record>& records);
std::string format_json(const std::vector<Record>& records);
std::vector<Record> parse_csv(std::string_view text);
std::vector<Record> parse_json(std::string_view text);

/// Serializes and writes to `path`. Throws std::runtime_error when the file cannot be written.
void emit_report(const std::vector<Record>& records, ReportFormat format, const std::string& path);

struct ExperimentResult {
  std::vector<Record> records;
  std::string report_text;
  std::vector<std::string> files_written;
  int exit_status = 0;  // 0 all verdicts pass, 1 otherwise
  std::string first_failure;
};

/// Runs every requested check for each n and writes the report plus plot-data CSVs
/// (`<stem>.ecdf.csv`, `<stem>.cf.csv`) next to out_path.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace stopsum
