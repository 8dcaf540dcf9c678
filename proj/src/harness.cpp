#include "mixkrr/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mixkrr/error.hpp"
#include "mixkrr/io.hpp"
#include "mixkrr/krr.hpp"
#include "mixkrr/random.hpp"

namespace mixkrr {

namespace {

constexpr const char* kTableHeader = "n,m,trial,seed,scenario,rho_err,rkhs_err,within_budget,wall_ms";
constexpr const char* kRateHeader = "norm,slope,intercept,slope_se,theoretical,tolerance,verdict";

struct SweepContext {
  SpectralModel smodel;
  TargetFunction target;
  KernelSpec kernel;
};

SweepContext make_context(const ExperimentConfig& c) {
  if (c.kernel != "brownian")
    throw ConfigError("sweeps need the brownian kernel (the only kernel with a closed-form spectrum)");
  auto smodel = SpectralModel::brownian(c.k_max);
  auto target = synthesize_target(smodel, c.r, CoefficientRule::parse(c.h_rule), c.k_max);
  return {std::move(smodel), std::move(target), KernelSpec::brownian_min()};
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T parse_integer(const std::string& s, const std::string& path, std::size_t line) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size() || s.empty() || s.front() == '-') throw std::invalid_argument("trailing");
    return static_cast<T>(v);
  } catch (const std::logic_error&) {
    throw ParseError(path, line, "expected a non-negative integer, got '" + s + "'");
  }
}

double parse_real(const std::string& s, const std::string& path, std::size_t line) {
  const auto v = parse_double(s);
  if (!v) throw ParseError(path, line, "expected a number, got '" + s + "'");
  return *v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

double error_of(const ResultRow& row, Norm norm) { return norm == Norm::Rho ? row.rho_err : row.rkhs_err; }

struct Stats {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

Stats stats_of(const std::vector<double>& v) {
  Stats s;
  s.count = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return s;
}

}  // namespace

bool within_budget(std::size_t n, int m, double r, double s) {
  if (2.0 * r + s < 2.0) return m == 1;
  return m <= max_machines(n, r, s);
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw ConfigError("sweep n grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1) throw ConfigError("sweep n values must be >= 1");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw ConfigError("sweep n grid must be strictly increasing");
  }
  if (trials < 1) throw ConfigError("sweep needs trials >= 1");
  if (!(r >= 0.5 && r <= 1.0)) throw ConfigError("r must lie in [1/2, 1]");
  if (!(s > 0.0 && s <= 1.0)) throw ConfigError("s must lie in (0, 1]");
  if (k_max < 1) throw ConfigError("k_max must be >= 1");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  if (!(tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (machines.kind == MachinePolicy::Kind::Fixed) {
    if (machines.fixed.empty()) throw ConfigError("fixed machine policy needs at least one m");
    for (int m : machines.fixed)
      if (m < 1) throw ConfigError("machine counts must be >= 1");
  } else if (2.0 * r + s < 2.0) {
    throw ConfigError("theory-cap and overshoot policies require 2r + s >= 2");
  }
  mixkrr::validate(process);
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("process")) c.process = process_from_json(j.at("process"));
    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.kernel = m.value("kernel", c.kernel);
      c.k_max = m.value("k_max", c.k_max);
      c.r = m.value("r", c.r);
      c.s = m.value("s", c.s);
      c.h_rule = m.value("h_rule", c.h_rule);
    }
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      if (s.contains("n")) c.n_grid = s.at("n").get<std::vector<std::size_t>>();
      c.trials = s.value("trials", c.trials);
      c.base_seed = s.value("seed", c.base_seed);
      c.delta = s.value("delta", c.delta);
      c.tolerance = s.value("tolerance", c.tolerance);
      if (s.contains("norm")) c.norm = parse_norm(s.at("norm").get<std::string>());
      if (s.contains("scenario")) c.scenario = parse_scenario(s.at("scenario").get<std::string>());
      if (s.contains("machines")) {
        const auto& mp = s.at("machines");
        const auto policy = mp.value("policy", std::string("fixed"));
        if (policy == "fixed") {
          c.machines.kind = MachinePolicy::Kind::Fixed;
          c.machines.fixed = mp.value("m", std::vector<int>{1});
        } else if (policy == "theory-cap") {
          c.machines.kind = MachinePolicy::Kind::TheoryCap;
        } else if (policy == "overshoot") {
          c.machines.kind = MachinePolicy::Kind::Overshoot;
        } else {
          throw ConfigError("unknown machine policy '" + policy + "'");
        }
      }
    }
    if (j.contains("output")) {
      const auto& o = j.at("output");
      c.output_dir = o.value("dir", c.output_dir);
      c.table_name = o.value("table", c.table_name);
      c.timing = o.value("timing", c.timing);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json machines;
  switch (c.machines.kind) {
    case MachinePolicy::Kind::Fixed: machines = {{"policy", "fixed"}, {"m", c.machines.fixed}}; break;
    case MachinePolicy::Kind::TheoryCap: machines = {{"policy", "theory-cap"}}; break;
    case MachinePolicy::Kind::Overshoot: machines = {{"policy", "overshoot"}}; break;
  }
  return {{"process", to_json(c.process)},
          {"model", {{"kernel", c.kernel}, {"k_max", c.k_max}, {"r", c.r}, {"s", c.s}, {"h_rule", c.h_rule}}},
          {"sweep",
           {{"n", c.n_grid},
            {"trials", c.trials},
            {"seed", c.base_seed},
            {"machines", machines},
            {"scenario", to_string(c.scenario)},
            {"delta", c.delta},
            {"norm", to_string(c.norm)},
            {"tolerance", c.tolerance}}},
          {"output", {{"dir", c.output_dir}, {"table", c.table_name}, {"timing", c.timing}}}};
}

void stable_sort(ResultTable& table) {
  std::stable_sort(table.begin(), table.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.n, a.m, a.trial) < std::tie(b.n, b.m, b.trial);
  });
}

std::uint64_t cell_seed(std::uint64_t base, std::size_t n, int trial) {
  return mix_seed({base, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(trial)});
}

std::uint64_t stream_seed(std::uint64_t cell, int m, int j) {
  if (j == 0) return cell;
  return mix_seed({cell, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(j)});
}

ResultTable run_krr_sweep(const ExperimentConfig& config) {
  config.validate();
  const auto ctx = make_context(config);
  struct Cell {
    std::size_t n;
    int trial;
  };
  std::vector<Cell> cells;
  for (auto n : config.n_grid)
    for (int t = 0; t < config.trials; ++t) cells.push_back({n, t});
  ResultTable table(cells.size());
  parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
    const auto [n, trial] = cells[i];
    const auto start = std::chrono::steady_clock::now();
    ResultRow row;
    row.n = n;
    row.m = 1;
    row.trial = trial;
    row.seed = cell_seed(config.base_seed, n, trial);
    row.scenario = to_string(Scenario::Whole);
    try {
      const auto data = generate(config.process, ctx.target, ctx.smodel, n, row.seed);
      const auto model = fit(data, lambda_rule(n, config.r, config.s), ctx.kernel);
      const auto err = error_norms(model, ctx.target, ctx.smodel);
      row.rho_err = err.rho_err;
      row.rkhs_err = err.rkhs_err;
    } catch (const NumericError& e) {
      throw NumericError("cell (n=" + std::to_string(n) + ", trial=" + std::to_string(trial) + "): " + e.what(),
                         e.condition());
    } catch (const Error& e) {
      throw Error("cell (n=" + std::to_string(n) + ", trial=" + std::to_string(trial) + "): " + e.what());
    }
    row.within_budget = true;
    row.wall_ms = config.timing ? elapsed_ms(start) : 0.0;
    table[i] = row;
  });
  stable_sort(table);
  return table;
}

std::vector<int> machine_counts(const ExperimentConfig& config, std::size_t n) {
  std::set<int> ms;
  switch (config.machines.kind) {
    case MachinePolicy::Kind::Fixed:
      ms.insert(config.machines.fixed.begin(), config.machines.fixed.end());
      break;
    case MachinePolicy::Kind::TheoryCap: {
      const int cap = max_machines(n, config.r, config.s);
      ms = {1, cap};
      break;
    }
    case MachinePolicy::Kind::Overshoot: {
      const int cap = max_machines(n, config.r, config.s);
      ms = {1, cap, 4 * cap, 16 * cap};
      break;
    }
  }
  std::vector<int> out;
  for (int m : ms)
    if (static_cast<std::size_t>(m) <= n) out.push_back(m);
  return out;
}

ResultTable run_dkrr_sweep(const ExperimentConfig& config) {
  config.validate();
  if (config.scenario == Scenario::Whole) throw ConfigError("dkrr sweep needs the tandem or parallel scenario");
  const auto ctx = make_context(config);
  struct Cell {
    std::size_t n;
    int m;
    int trial;
  };
  std::vector<Cell> cells;
  for (auto n : config.n_grid)
    for (int m : machine_counts(config, n))
      for (int t = 0; t < config.trials; ++t) cells.push_back({n, m, t});
  ResultTable table(cells.size());
  parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
    const auto [n, m, trial] = cells[i];
    const auto start = std::chrono::steady_clock::now();
    ResultRow row;
    row.n = n;
    row.m = m;
    row.trial = trial;
    row.seed = cell_seed(config.base_seed, n, trial);
    row.scenario = to_string(config.scenario);
    const double lambda = lambda_rule(n, config.r, config.s);
    try {
      std::vector<Dataset> subsets;
      if (config.scenario == Scenario::Tandem) {
        subsets = partition_tandem(generate(config.process, ctx.target, ctx.smodel, n, row.seed), m);
      } else {
        std::vector<std::size_t> sizes;
        std::vector<std::uint64_t> seeds;
        for (int j = 0; j < m; ++j) {
          sizes.push_back(n / static_cast<std::size_t>(m) + (static_cast<std::size_t>(j) < n % static_cast<std::size_t>(m) ? 1 : 0));
          seeds.push_back(stream_seed(row.seed, m, j));
        }
        subsets = generate_parallel(config.process, ctx.target, ctx.smodel, sizes, seeds);
      }
      const auto ensemble = fit_distributed(subsets, lambda, ctx.kernel, config.scenario);
      const auto err = ensemble_error_norms(ensemble, ctx.target, ctx.smodel);
      row.rho_err = err.rho_err;
      row.rkhs_err = err.rkhs_err;
    } catch (const NumericError& e) {
      throw NumericError("cell (n=" + std::to_string(n) + ", m=" + std::to_string(m) +
                             ", trial=" + std::to_string(trial) + "): " + e.what(),
                         e.condition());
    } catch (const Error& e) {
      throw Error("cell (n=" + std::to_string(n) + ", m=" + std::to_string(m) + ", trial=" + std::to_string(trial) +
                  "): " + e.what());
    }
    row.within_budget = within_budget(n, m, config.r, config.s);
    row.wall_ms = config.timing ? elapsed_ms(start) : 0.0;
    table[i] = row;
  });
  stable_sort(table);
  return table;
}

double theoretical_exponent(Norm norm, double r, double s) {
  return norm == Norm::Rho ? -r / (2.0 * r + s) : -(r - 0.5) / (2.0 * r + s);
}

RateFitResult fit_rate(const ResultTable& table, Norm norm, double r, double s, double tolerance, int m_filter,
                       bool log_average) {
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& row : table)
    if (m_filter == 0 || row.m == m_filter) by_n[row.n].push_back(error_of(row, norm));
  if (by_n.size() < 4) throw InputError("rate fit needs at least 4 distinct n values");
  std::vector<double> lx, ly;
  for (const auto& [n, errs] : by_n) {
    if (errs.size() < 5) throw InputError("rate fit needs at least 5 trials per n (n = " + std::to_string(n) + ")");
    double level = 0.0;
    if (log_average) {
      for (double e : errs) {
        if (!(e > 0.0)) throw InputError("log-averaged rate fit needs positive errors");
        level += std::log(e);
      }
      level /= static_cast<double>(errs.size());
    } else {
      const double mean = stats_of(errs).mean;
      if (!(mean > 0.0)) throw InputError("rate fit needs positive mean errors");
      level = std::log(mean);
    }
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(level);
  }
  const double k = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  RateFitResult res;
  res.norm = norm;
  res.slope = sxy / sxx;
  res.intercept = my - res.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (res.intercept + res.slope * lx[i]);
    ssr += e * e;
  }
  res.slope_se = std::sqrt(ssr / (k - 2.0) / sxx);
  res.theoretical = theoretical_exponent(norm, r, s);
  res.tolerance = tolerance;
  res.pass = std::abs(res.slope - res.theoretical) <= tolerance;
  return res;
}

std::vector<RatioRow> compare_dkrr_krr(const ResultTable& dkrr, const ResultTable& krr, Norm norm,
                                       std::uint64_t seed) {
  std::map<std::size_t, std::map<int, double>> krr_by_n;
  std::map<std::pair<std::size_t, int>, std::map<int, double>> dkrr_by_cell;
  for (const auto& row : krr) krr_by_n[row.n][row.trial] = error_of(row, norm);
  for (const auto& row : dkrr) dkrr_by_cell[{row.n, row.m}][row.trial] = error_of(row, norm);
  std::set<std::size_t> n_krr, n_dkrr;
  for (const auto& [n, _] : krr_by_n) n_krr.insert(n);
  for (const auto& [key, _] : dkrr_by_cell) n_dkrr.insert(key.first);
  if (n_krr != n_dkrr || n_krr.empty()) throw InputError("dkrr and krr tables must cover the same n grid");

  constexpr int kResamples = 200;
  std::vector<RatioRow> out;
  for (const auto& [key, dk] : dkrr_by_cell) {
    const auto& kr = krr_by_n.at(key.first);
    std::vector<double> dv, kv;
    for (const auto& [t, e] : dk) dv.push_back(e);
    for (const auto& [t, e] : kr) kv.push_back(e);
    const auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    RatioRow row;
    row.n = key.first;
    row.m = key.second;
    row.ratio = mean(dv) / mean(kv);

    // Paired resampling when both sides ran the same trials.
    bool paired = dk.size() == kr.size();
    if (paired)
      for (const auto& [t, _] : dk) paired = paired && kr.count(t);
    Rng rng(mix_seed({seed, key.first, static_cast<std::uint64_t>(key.second)}));
    std::vector<double> boot;
    boot.reserve(kResamples);
    for (int b = 0; b < kResamples; ++b) {
      double sd = 0.0, sk = 0.0;
      std::uniform_int_distribution<std::size_t> pick_d(0, dv.size() - 1), pick_k(0, kv.size() - 1);
      for (std::size_t i = 0; i < dv.size(); ++i) {
        const std::size_t idx = pick_d(rng);
        sd += dv[idx];
        if (paired) sk += kv[idx];
      }
      if (!paired)
        for (std::size_t i = 0; i < kv.size(); ++i) sk += kv[pick_k(rng)];
      boot.push_back((sd / static_cast<double>(dv.size())) /
                     (sk / static_cast<double>(paired ? dv.size() : kv.size())));
    }
    std::sort(boot.begin(), boot.end());
    row.lo = boot[static_cast<std::size_t>(0.05 * (kResamples - 1))];
    row.hi = boot[static_cast<std::size_t>(std::ceil(0.95 * (kResamples - 1)))];
    out.push_back(row);
  }
  return out;
}

std::string table_to_csv(const ResultTable& table) {
  std::ostringstream os;
  os << kTableHeader << '\n';
  for (const auto& r : table) {
    os << r.n << ',' << r.m << ',' << r.trial << ',' << r.seed << ',' << r.scenario << ','
       << format_double(r.rho_err) << ',' << format_double(r.rkhs_err) << ',' << (r.within_budget ? 1 : 0) << ','
       << format_double(r.wall_ms) << '\n';
  }
  return os.str();
}

void persist(const ResultTable& table, const std::filesystem::path& path) {
  write_text_file(path, table_to_csv(table));
}

ResultTable load_table(const std::filesystem::path& path) {
  const auto lines = lines_of(read_file(path));
  const std::string p = path.string();
  if (lines.empty() || lines.front() != kTableHeader)
    throw ParseError(p, 1, std::string("expected header '") + kTableHeader + "'");
  ResultTable table;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t lineno = i + 1;
    if (lines[i].empty()) continue;
    const auto f = split_csv(lines[i]);
    if (f.size() != 9) throw ParseError(p, lineno, "expected 9 fields, got " + std::to_string(f.size()));
    ResultRow r;
    r.n = parse_integer<std::size_t>(f[0], p, lineno);
    r.m = parse_integer<int>(f[1], p, lineno);
    r.trial = parse_integer<int>(f[2], p, lineno);
    r.seed = parse_integer<std::uint64_t>(f[3], p, lineno);
    r.scenario = f[4];
    if (r.scenario != "whole" && r.scenario != "tandem" && r.scenario != "parallel")
      throw ParseError(p, lineno, "unknown scenario '" + r.scenario + "'");
    r.rho_err = parse_real(f[5], p, lineno);
    r.rkhs_err = parse_real(f[6], p, lineno);
    if (f[7] != "0" && f[7] != "1") throw ParseError(p, lineno, "within_budget must be 0 or 1");
    r.within_budget = f[7] == "1";
    r.wall_ms = parse_real(f[8], p, lineno);
    table.push_back(std::move(r));
  }
  return table;
}

void persist(const RateFitResult& res, const std::filesystem::path& path) {
  std::ostringstream os;
  os << kRateHeader << '\n'
     << to_string(res.norm) << ',' << format_double(res.slope) << ',' << format_double(res.intercept) << ','
     << format_double(res.slope_se) << ',' << format_double(res.theoretical) << ',' << format_double(res.tolerance)
     << ',' << (res.pass ? "pass" : "fail") << '\n';
  write_text_file(path, os.str());
}

RateFitResult load_rate_fit(const std::filesystem::path& path) {
  const auto lines = lines_of(read_file(path));
  const std::string p = path.string();
  if (lines.empty() || lines.front() != kRateHeader)
    throw ParseError(p, 1, std::string("expected header '") + kRateHeader + "'");
  if (lines.size() < 2 || lines[1].empty()) throw ParseError(p, 2, "missing rate-fit row");
  const auto f = split_csv(lines[1]);
  if (f.size() != 7) throw ParseError(p, 2, "expected 7 fields");
  RateFitResult r;
  try {
    r.norm = parse_norm(f[0]);
  } catch (const InputError&) {
    throw ParseError(p, 2, "unknown norm '" + f[0] + "'");
  }
  r.slope = parse_real(f[1], p, 2);
  r.intercept = parse_real(f[2], p, 2);
  r.slope_se = parse_real(f[3], p, 2);
  r.theoretical = parse_real(f[4], p, 2);
  r.tolerance = parse_real(f[5], p, 2);
  if (f[6] != "pass" && f[6] != "fail") throw ParseError(p, 2, "verdict must be pass or fail");
  r.pass = f[6] == "pass";
  return r;
}

std::string ratio_table_to_csv(const std::vector<RatioRow>& rows) {
  std::ostringstream os;
  os << "n,m,ratio,lo90,hi90\n";
  for (const auto& r : rows)
    os << r.n << ',' << r.m << ',' << format_double(r.ratio) << ',' << format_double(r.lo) << ','
       << format_double(r.hi) << '\n';
  return os.str();
}

PlotKind parse_plot_kind(const std::string& s) {
  if (s == "rate-curve") return PlotKind::RateCurve;
  if (s == "dkrr-ratio") return PlotKind::DkrrRatio;
  if (s == "effdim-curve") return PlotKind::EffdimCurve;
  if (s == "alpha-decay") return PlotKind::AlphaDecay;
  throw InputError("unknown plot kind '" + s + "' (expected rate-curve, dkrr-ratio, effdim-curve, alpha-decay)");
}

std::string to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::RateCurve: return "rate-curve";
    case PlotKind::DkrrRatio: return "dkrr-ratio";
    case PlotKind::EffdimCurve: return "effdim-curve";
    case PlotKind::AlphaDecay: return "alpha-decay";
  }
  return "rate-curve";
}

namespace {

nlohmann::json series_json(const Series& s) {
  return {{"label", s.label}, {"x", s.x}, {"y", s.y}, {"yerr", s.yerr}};
}

nlohmann::json plot_document(PlotKind kind, bool log_x, bool log_y, const std::vector<Series>& series) {
  nlohmann::json arr = nlohmann::json::array();
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& s : series) {
    arr.push_back(series_json(s));
    labels.push_back(s.label);
  }
  return {{"kind", to_string(kind)}, {"log_x", log_x}, {"log_y", log_y}, {"labels", labels}, {"series", arr}};
}

}  // namespace

nlohmann::json plot_data(const ResultTable& table, PlotKind kind) {
  if (table.empty()) throw InputError("cannot emit plot data for an empty table");
  std::map<int, std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>>> by_m;
  for (const auto& r : table) {
    auto& cell = by_m[r.m][r.n];
    cell.first.push_back(r.rho_err);
    cell.second.push_back(r.rkhs_err);
  }
  std::vector<Series> series;
  if (kind == PlotKind::RateCurve) {
    for (const auto& [m, by_n] : by_m) {
      Series rho{"rho m=" + std::to_string(m), {}, {}, {}};
      Series rkhs{"rkhs m=" + std::to_string(m), {}, {}, {}};
      for (const auto& [n, errs] : by_n) {
        const auto a = stats_of(errs.first), b = stats_of(errs.second);
        rho.x.push_back(static_cast<double>(n));
        rho.y.push_back(a.mean);
        rho.yerr.push_back(a.se);
        rkhs.x.push_back(static_cast<double>(n));
        rkhs.y.push_back(b.mean);
        rkhs.yerr.push_back(b.se);
      }
      series.push_back(std::move(rho));
      series.push_back(std::move(rkhs));
    }
    return plot_document(kind, true, true, series);
  }
  if (kind == PlotKind::DkrrRatio) {
    const auto base_it = by_m.find(1);
    if (base_it == by_m.end()) throw InputError("dkrr-ratio plot needs m = 1 rows as the baseline");
    std::set<std::size_t> ns;
    for (const auto& [m, by_n] : by_m)
      for (const auto& [n, _] : by_n) ns.insert(n);
    for (auto n : ns) {
      const auto b = base_it->second.find(n);
      if (b == base_it->second.end()) throw InputError("dkrr-ratio plot needs m = 1 rows for every n");
      const auto base = stats_of(b->second.first);
      Series s{"n=" + std::to_string(n), {}, {}, {}};
      for (const auto& [m, by_n] : by_m) {
        const auto it = by_n.find(n);
        if (it == by_n.end()) continue;
        const auto st = stats_of(it->second.first);
        s.x.push_back(m);
        s.y.push_back(st.mean / base.mean);
        s.yerr.push_back(st.se / base.mean);
      }
      series.push_back(std::move(s));
    }
    return plot_document(kind, true, false, series);
  }
  throw InputError(to_string(kind) + " plots are built from a series, not a result table");
}

nlohmann::json plot_data(const std::vector<Series>& series, PlotKind kind) {
  if (kind != PlotKind::EffdimCurve && kind != PlotKind::AlphaDecay)
    throw InputError(to_string(kind) + " plots are built from a result table");
  if (series.empty() || std::all_of(series.begin(), series.end(), [](const Series& s) { return s.x.empty(); }))
    throw InputError("cannot emit plot data for an empty series");
  for (const auto& s : series)
    if (s.x.size() != s.y.size()) throw InputError("series x and y lengths differ");
  std::vector<Series> sorted = series;
  for (auto& s : sorted) {
    if (s.yerr.empty()) s.yerr.assign(s.x.size(), 0.0);
    std::vector<std::size_t> idx(s.x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s.x[a] < s.x[b]; });
    Series t{s.label, {}, {}, {}};
    for (auto i : idx) {
      t.x.push_back(s.x[i]);
      t.y.push_back(s.y[i]);
      t.yerr.push_back(s.yerr[i]);
    }
    s = std::move(t);
  }
  return plot_document(kind, true, true, sorted);
}

void emit_plot_data(const ResultTable& table, PlotKind kind, const std::filesystem::path& path) {
  write_text_file(path, plot_data(table, kind).dump(2) + "\n");
}

void emit_plot_data(const std::vector<Series>& series, PlotKind kind, const std::filesystem::path& path) {
  write_text_file(path, plot_data(series, kind).dump(2) + "\n");
}

}  // namespace mixkrr
