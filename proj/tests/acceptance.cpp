// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Tolerances are fixed here on purpose; do not loosen them to make a run pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mixkrr/dkrr.hpp"
#include "mixkrr/harness.hpp"
#include "mixkrr/krr.hpp"
#include "mixkrr/spectraldiag.hpp"

using namespace mixkrr;
namespace fs = std::filesystem;

namespace {

constexpr double kExactTol = 1e-12;
constexpr double kOperatorTol = 1e-3;
constexpr double kEffdimTol = 1e-3;
constexpr double kShatLo = 0.45, kShatHi = 0.55;
constexpr double kIidSlopeTol = 0.10;
constexpr double kMixingSlopeTol = 0.12;
constexpr double kBudgetFactor = 1.5;
constexpr double kLemmaSlack = 0.1;

const unsigned kJobs = std::max(1u, std::thread::hardware_concurrency());

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates sub-checks; the first failure is reported.
struct Checker {
  Outcome o;
  std::ostringstream notes;
  void require(bool ok, const std::string& what) {
    if (!ok && o.pass) {
      o.pass = false;
      o.detail = what;
    }
  }
  Outcome done() {
    if (o.pass) o.detail = notes.str();
    return o;
  }
};

std::string num(double v, int prec = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

Dataset make_data(std::vector<double> x, std::vector<double> y) {
  Dataset d;
  d.x = std::move(x);
  d.y = std::move(y);
  return d;
}

double mean_rho(const ResultTable& t, int m) {
  double s = 0.0;
  int c = 0;
  for (const auto& r : t)
    if (r.m == m) {
      s += r.rho_err;
      ++c;
    }
  return s / c;
}

Outcome closed_form_oracles() {
  Checker c;
  const auto kernel = KernelSpec::brownian_min();

  // One sample at x = 1, y = 1, lambda = 1/2: (1 + 1/2) a = 1.
  const auto one = fit(make_data({1.0}, {1.0}), 0.5, kernel);
  c.require(std::abs(one.coeffs()(0) - 2.0 / 3.0) <= kExactTol, "one-point a != 2/3");
  c.require(std::abs(one.predict(0.5) - 1.0 / 3.0) <= kExactTol, "one-point f(0.5) != 1/3");

  // Tandem split of 3 points into sizes 2 and 1 gives weights 2/3 and 1/3.
  const auto data = make_data({0.2, 0.5, 0.9}, {0.3, -0.1, 0.7});
  const auto parts = partition_tandem(data, 2);
  const auto ens = fit_distributed(parts, 0.1, kernel);
  c.require(std::abs(ens.weights()[0] - 2.0 / 3.0) <= kExactTol && std::abs(ens.weights()[1] - 1.0 / 3.0) <= kExactTol,
            "tandem weights");
  const auto f1 = fit(parts[0], 0.1, kernel);
  const auto f2 = fit(parts[1], 0.1, kernel);
  double worst = 0.0;
  for (double x : {0.0, 0.1, 0.35, 0.5, 0.77, 1.0})
    worst = std::max(worst, std::abs(ens.predict(x) - (2.0 * f1.predict(x) + f2.predict(x)) / 3.0));
  c.require(worst <= kExactTol, "weighted mean off by " + num(worst));
  const auto single = fit_distributed({data}, 0.1, kernel);
  const auto whole = fit(data, 0.1, kernel);
  c.require(std::abs(single.predict(0.6) - whole.predict(0.6)) <= kExactTol, "m = 1 ensemble != KRR");

  c.require(std::abs(lambda_rule(1024, 1.0, 0.5) - 0.0625) <= kExactTol, "lambda_rule(1024)");
  c.require(std::abs(lambda_rule(4096, 0.5, 1.0) - 1.0 / 64.0) <= kExactTol, "lambda_rule(4096, r=1/2, s=1)");
  c.require(max_machines(10000, 1.0, 0.5) == 2, "max_machines(1e4)");
  c.require(max_machines(1u << 30, 1.0, 0.5) == 8, "max_machines(2^30)");
  c.require(max_machines(4096, 1.0, 0.5) == 2, "max_machines(4096)");
  c.require(max_machines(1000000, 1.0, 1.0) == 10, "max_machines(1e6, s=1)");
  c.notes << "max |ensemble - weighted mean| = " << num(worst);
  return c.done();
}

Outcome operator_equivalence() {
  Checker c;
  const auto smodel = SpectralModel::brownian(500);
  const auto target = synthesize_target(smodel, 1.0, CoefficientRule::inverse(), 500);
  const auto spec = ProcessSpec::make(IidUniform{}, 0.2);
  double worst = 0.0;
  for (std::size_t n : {16u, 64u, 256u}) {
    const auto data = generate(spec, target, smodel, n, 100 + n);
    const double lambda = lambda_rule(n, 1.0, 0.5);
    const auto model = fit(data, lambda, KernelSpec::brownian_min());
    const auto u = fit_operator_truncated(data, lambda, smodel);
    const std::vector<double> uv(u.data(), u.data() + u.size());
    double w = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const double x = i / 100.0;
      w = std::max(w, std::abs(model.predict(x) - predict_operator(uv, smodel, x)));
    }
    c.require(w <= kOperatorTol, "n=" + std::to_string(n) + " max gap " + num(w));
    worst = std::max(worst, w);
  }
  c.notes << "max pointwise gap " << num(worst) << " (tol " << kOperatorTol << ")";
  return c.done();
}

Outcome effective_dimension_check() {
  Checker c;
  const auto smodel = SpectralModel::brownian(500);
  double worst = 0.0;
  const std::vector<double> grid{1e-4, 1e-3, 1e-2, 1e-1};
  for (double lam : grid) {
    const double exact = std::tanh(1.0 / std::sqrt(lam)) / (2.0 * std::sqrt(lam));
    const double got = effective_dimension(smodel, lam);
    worst = std::max(worst, std::abs(got - exact));
  }
  c.require(worst <= kEffdimTol, "max |N - closed form| = " + num(worst));
  const auto cap = fit_capacity_exponent(smodel, grid);
  c.require(cap.s_hat >= kShatLo && cap.s_hat <= kShatHi, "s_hat = " + num(cap.s_hat));
  c.notes << "max |N - closed form| " << num(worst) << ", s_hat " << num(cap.s_hat);
  return c.done();
}

ExperimentConfig rate_config(ProcessSpec spec) {
  ExperimentConfig cfg;
  cfg.process = std::move(spec);
  cfg.r = 1.0;
  cfg.s = 0.5;
  cfg.n_grid = {256, 512, 1024, 2048, 4096};
  cfg.trials = 10;
  cfg.base_seed = 2024;
  cfg.jobs = kJobs;
  return cfg;
}

Outcome iid_rates() {
  Checker c;
  const auto table = run_krr_sweep(rate_config(ProcessSpec::make(IidUniform{}, 0.2)));
  const auto rho = fit_rate(table, Norm::Rho, 1.0, 0.5, kIidSlopeTol);
  const auto rk = fit_rate(table, Norm::Rkhs, 1.0, 0.5, kIidSlopeTol);
  c.require(std::abs(rho.slope + 0.40) <= kIidSlopeTol, "rho slope " + num(rho.slope));
  c.require(std::abs(rk.slope + 0.20) <= kIidSlopeTol, "rkhs slope " + num(rk.slope));
  c.notes << "rho slope " << num(rho.slope) << " (-0.40 +- 0.10), rkhs slope " << num(rk.slope) << " (-0.20 +- 0.10)";
  return c.done();
}

Outcome mixing_rates() {
  Checker c;
  const auto table = run_krr_sweep(rate_config(ProcessSpec::make(GaussCopulaAR1{0.5}, 0.2)));
  const auto rho = fit_rate(table, Norm::Rho, 1.0, 0.5, kMixingSlopeTol);
  c.require(std::abs(rho.slope + 0.40) <= kMixingSlopeTol, "rho slope " + num(rho.slope));
  c.notes << "AR1(0.5) rho slope " << num(rho.slope) << " (-0.40 +- 0.12)";
  return c.done();
}

Outcome dkrr_budget() {
  Checker c;
  auto cfg = rate_config(ProcessSpec::make(GaussCopulaAR1{0.5}, 0.2));
  cfg.n_grid = {4096};
  cfg.scenario = Scenario::Tandem;
  const int cap = max_machines(4096, 1.0, 0.5);
  cfg.machines.fixed = {1, cap, 32};
  const auto table = run_dkrr_sweep(cfg);
  const double e1 = mean_rho(table, 1), ecap = mean_rho(table, cap), e32 = mean_rho(table, 32);
  c.require(ecap <= kBudgetFactor * e1, "m=cap error ratio " + num(ecap / e1));
  c.require(e32 > e1, "m=32 error " + num(e32) + " not above m=1 " + num(e1));
  c.notes << "m=1 " << num(e1) << ", m=" << cap << " " << num(ecap) << " (ratio " << num(ecap / e1) << "), m=32 "
          << num(e32);
  return c.done();
}

Outcome lemma_suite() {
  Checker c;
  const auto smodel = SpectralModel::brownian(500);
  const auto target = synthesize_target(smodel, 1.0, CoefficientRule::inverse(), 500);
  const double kappa = KernelSpec::brownian_min().kappa();
  int checked = 0;
  for (const auto& spec : {ProcessSpec::make(IidUniform{}, 0.2), ProcessSpec::make(GaussCopulaAR1{0.5}, 0.2)})
    for (std::size_t n : {250u, 1000u}) {
      const auto rep = operator_deviation_moments(spec, target, smodel, n, lambda_rule(n, 1.0, 0.5), 1.0, 200,
                                                  77 + n, {200, kJobs});
      const auto res = lemma_bound_check(rep, spec.mixing, kappa, kLemmaSlack);
      for (const auto& chk : res.checks) {
        c.require(chk.pass, spec.name() + " n=" + std::to_string(n) + " " + chk.moment + " estimate " +
                                num(chk.estimate) + " > rhs " + num(chk.rhs));
        ++checked;
      }
    }
  c.notes << checked << " moment bounds hold (iid and AR1(0.5), n in {250, 1000}, 200 trials)";
  return c.done();
}

Outcome covariance() {
  Checker c;
  const auto smodel = SpectralModel::brownian(100);
  const int trials = 4000;
  const auto iid = covariance_inequality_check(ProcessSpec::make(IidUniform{}), smodel, 1, INFINITY, INFINITY, 1.0,
                                               trials, 31);
  const double floor = 3.0 / std::sqrt(double(trials));
  c.require(iid.lhs <= floor, "iid lhs " + num(iid.lhs) + " > " + num(floor));
  const auto ar = ProcessSpec::make(GaussCopulaAR1{0.9});
  const auto l1 = covariance_inequality_check(ar, smodel, 1, 4, 4, 2, trials, 32);
  const auto l8 = covariance_inequality_check(ar, smodel, 8, 4, 4, 2, trials, 32);
  c.require(l8.lhs < l1.lhs, "AR1(0.9) lhs lag 8 " + num(l8.lhs) + " >= lag 1 " + num(l1.lhs));
  c.notes << "iid lhs " << num(iid.lhs) << " <= " << num(floor) << "; AR1(0.9) lhs " << num(l1.lhs) << " -> "
          << num(l8.lhs);
  return c.done();
}

Outcome determinism() {
  Checker c;
  const auto dir = fs::temp_directory_path() / "mixkrr_acceptance";
  fs::remove_all(dir);
  auto cfg = rate_config(ProcessSpec::make(GaussCopulaAR1{0.5}, 0.2));
  cfg.n_grid = {128, 256, 512};
  cfg.trials = 3;
  cfg.machines.fixed = {1, 2, 4};
  persist(run_dkrr_sweep(cfg), dir / "a.csv");
  cfg.jobs = 1;
  persist(run_dkrr_sweep(cfg), dir / "b.csv");
  persist(run_krr_sweep(cfg), dir / "c.csv");
  persist(run_krr_sweep(cfg), dir / "d.csv");
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
  };
  c.require(slurp(dir / "a.csv") == slurp(dir / "b.csv"), "dkrr sweep re-run differs");
  c.require(slurp(dir / "c.csv") == slurp(dir / "d.csv"), "krr sweep re-run differs");

  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::uint64_t> bits;
  std::uniform_int_distribution<std::size_t> n(1, 1u << 24);
  ResultTable rows(10000);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& r = rows[i];
    r.n = n(rng);
    r.m = int(bits(rng) % 128) + 1;
    r.trial = int(i);
    r.seed = bits(rng);
    r.scenario = i % 2 ? "tandem" : "parallel";
    // Random finite bit patterns cover subnormals and extreme exponents.
    for (double* v : {&r.rho_err, &r.rkhs_err, &r.wall_ms}) {
      do {
        const auto b = bits(rng);
        std::memcpy(v, &b, sizeof b);
      } while (!std::isfinite(*v));
    }
    r.within_budget = bits(rng) & 1;
  }
  persist(rows, dir / "random.csv");
  const auto back = load_table(dir / "random.csv");
  bool exact = back.size() == rows.size();
  for (std::size_t i = 0; exact && i < rows.size(); ++i)
    exact = back[i].n == rows[i].n && back[i].m == rows[i].m && back[i].seed == rows[i].seed &&
            std::memcmp(&back[i].rho_err, &rows[i].rho_err, sizeof(double)) == 0 &&
            std::memcmp(&back[i].rkhs_err, &rows[i].rkhs_err, sizeof(double)) == 0 &&
            std::memcmp(&back[i].wall_ms, &rows[i].wall_ms, sizeof(double)) == 0 &&
            back[i].scenario == rows[i].scenario && back[i].within_budget == rows[i].within_budget;
  c.require(exact, "CSV round trip not bit-exact");
  fs::remove_all(dir);
  c.notes << "sweep re-runs byte-identical; 10000 random rows round-trip bit-exact";
  return c.done();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"closed-form unit oracles", closed_form_oracles},
      {"operator-form equivalence", operator_equivalence},
      {"effective dimension", effective_dimension_check},
      {"iid rate reproduction", iid_rates},
      {"mixing rate reproduction", mixing_rates},
      {"dkrr budget behavior", dkrr_budget},
      {"lemma bound suite", lemma_suite},
      {"covariance inequality", covariance},
      {"determinism and persistence", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s [%zu] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
