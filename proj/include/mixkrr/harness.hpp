#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mixkrr/dkrr.hpp"
#include "mixkrr/kernelspec.hpp"
#include "mixkrr/sequencegen.hpp"

namespace mixkrr {

struct MachinePolicy {
  enum class Kind { Fixed, TheoryCap, Overshoot };
  Kind kind = Kind::Fixed;
  std::vector<int> fixed{1};
};

/// One experiment. Loaded from a JSON document with nested sections:
///
///   {
///     "process": {"process": "ar1", "rho": 0.5, "noise_sigma": 0.2},
///     "model":   {"kernel": "brownian", "k_max": 500, "r": 1.0, "s": 0.5, "h_rule": "inverse"},
///     "sweep":   {"n": [256, 512, 1024], "trials": 10, "seed": 1,
///                 "machines": {"policy": "fixed", "m": [1, 2]}, "scenario": "tandem",
///                 "delta": 1.0, "norm": "rho", "tolerance": 0.1},
///     "output":  {"dir": "out", "table": "sweep.csv", "timing": false}
///   }
///
/// `machines.policy` is one of fixed / theory-cap / overshoot. `timing`
/// records wall-clock milliseconds per cell; it is off by default so that
/// re-runs are byte-identical.
struct ExperimentConfig {
  ProcessSpec process = ProcessSpec::make(IidUniform{}, 0.2);
  std::string kernel = "brownian";
  int k_max = 500;
  double r = 1.0;
  double s = 0.5;
  std::string h_rule = "inverse";
  std::vector<std::size_t> n_grid{256};
  MachinePolicy machines;
  Scenario scenario = Scenario::Tandem;
  int trials = 1;
  std::uint64_t base_seed = 1;
  double delta = 1.0;
  Norm norm = Norm::Rho;
  double tolerance = 0.1;
  std::string output_dir = ".";
  std::string table_name = "sweep.csv";
  bool timing = false;
  unsigned jobs = 1;

  /// Throws ConfigError on an invalid grid, trial count, or model.
  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);

struct ResultRow {
  std::size_t n = 0;
  int m = 1;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string scenario = "whole";
  double rho_err = 0.0;
  double rkhs_err = 0.0;
  bool within_budget = true;
  double wall_ms = 0.0;

  bool operator==(const ResultRow&) const = default;
};

using ResultTable = std::vector<ResultRow>;

/// Sorts by (n, m, trial) so emission is independent of worker scheduling.
void stable_sort(ResultTable& table);

/// Seed of the data stream for (n, trial); shared by every m so that
/// single-machine DKRR rows equal KRR rows.
std::uint64_t cell_seed(std::uint64_t base, std::size_t n, int trial);

/// Seed of stream j (0-based) among m parallel streams; stream 0 reuses the cell seed.
std::uint64_t stream_seed(std::uint64_t cell, int m, int j);

ResultTable run_krr_sweep(const ExperimentConfig& config);

/// m <= max_machines(n); only m = 1 when 2r + s < 2 leaves no budget.
bool within_budget(std::size_t n_total, int m, double r, double s);

/// Machine counts the policy produces at sample size n.
std::vector<int> machine_counts(const ExperimentConfig& config, std::size_t n);

ResultTable run_dkrr_sweep(const ExperimentConfig& config);

struct RateFitResult {
  Norm norm = Norm::Rho;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double theoretical = 0.0;
  double tolerance = 0.1;
  bool pass = false;

  bool operator==(const RateFitResult&) const = default;
};

/// -r/(2r+s) for rho, -(r-1/2)/(2r+s) for RKHS.
double theoretical_exponent(Norm norm, double r, double s);

/// OLS of log(mean error over trials) against log n. Rows can be restricted
/// to one machine count with `m_filter` (0 keeps all rows). Requires at least
/// 4 distinct n and 5 rows per n. `log_average` regresses the mean of
/// log(error) instead, which is more robust to outlier trials.
RateFitResult fit_rate(const ResultTable& table, Norm norm, double r, double s, double tolerance = 0.1,
                       int m_filter = 0, bool log_average = false);

struct RatioRow {
  std::size_t n = 0;
  int m = 1;
  double ratio = 1.0;
  double lo = 1.0;  ///< bootstrap 5% quantile
  double hi = 1.0;  ///< bootstrap 95% quantile
};

/// Mean DKRR error over mean KRR error per (n, m), with a 200-resample
/// trial bootstrap. Throws InputError if the n grids differ.
std::vector<RatioRow> compare_dkrr_krr(const ResultTable& dkrr, const ResultTable& krr, Norm norm = Norm::Rho,
                                       std::uint64_t seed = 0x5eed);

/// Result CSV: `n,m,trial,seed,scenario,rho_err,rkhs_err,within_budget,wall_ms`.
void persist(const ResultTable& table, const std::filesystem::path& path);
ResultTable load_table(const std::filesystem::path& path);
std::string table_to_csv(const ResultTable& table);

/// Rate-fit CSV: `norm,slope,intercept,slope_se,theoretical,tolerance,verdict`.
void persist(const RateFitResult& result, const std::filesystem::path& path);
RateFitResult load_rate_fit(const std::filesystem::path& path);

std::string ratio_table_to_csv(const std::vector<RatioRow>& rows);

enum class PlotKind { RateCurve, DkrrRatio, EffdimCurve, AlphaDecay };
PlotKind parse_plot_kind(const std::string& s);
std::string to_string(PlotKind kind);

/// Generic (x, y) series for the curve kinds that do not come from a result table.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> yerr;
};

/// rate-curve: mean rho/RKHS error vs n per machine count (yerr = standard
/// error over trials). dkrr-ratio: mean rho error at m over mean at m = 1
/// per n. Throws InputError on an empty table or a kind that needs a series.
nlohmann::json plot_data(const ResultTable& table, PlotKind kind);
/// effdim-curve / alpha-decay from precomputed series.
nlohmann::json plot_data(const std::vector<Series>& series, PlotKind kind);
void emit_plot_data(const ResultTable& table, PlotKind kind, const std::filesystem::path& path);
void emit_plot_data(const std::vector<Series>& series, PlotKind kind, const std::filesystem::path& path);

}  // namespace mixkrr
