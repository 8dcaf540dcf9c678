#include "mixkrr/spectraldiag.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "mixkrr/error.hpp"
#include "mixkrr/random.hpp"

namespace mixkrr {

namespace {

double largest_eigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  const double n = static_cast<double>(v.size());
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return out;
}

Eigen::MatrixXd weighted_basis(std::span<const double> x, const SpectralModel& smodel, int k_max) {
  if (k_max < 1 || k_max > smodel.k_max()) throw InputError("diagnostic k_max outside the spectral model");
  std::vector<double> phi(static_cast<std::size_t>(k_max));
  Eigen::MatrixXd psi(static_cast<Eigen::Index>(x.size()), k_max);
  for (std::size_t i = 0; i < x.size(); ++i) {
    smodel.eigenfunctions(x[i], phi);
    for (int k = 0; k < k_max; ++k)
      psi(static_cast<Eigen::Index>(i), k) = std::sqrt(smodel.eigenvalue(k)) * phi[static_cast<std::size_t>(k)];
  }
  return psi;
}

}  // namespace

double effective_dimension(const SpectralModel& smodel, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("effective dimension needs lambda > 0");
  double n = 0.0;
  // Sum smallest terms first.
  for (int k = smodel.k_max() - 1; k >= 0; --k) {
    const double mu = smodel.eigenvalue(k);
    n += mu / (mu + lambda);
  }
  if (smodel.family() == SpectralModel::Family::Brownian) {
    // sum_{k > K} 1 / (1 + lambda ((k - 1/2) pi)^2) ~ int_{K + 1/2}^inf of the same.
    const double root = std::sqrt(lambda);
    const double pi = std::numbers::pi;
    n += (pi / 2.0 - std::atan(pi * root * smodel.k_max())) / (pi * root);
  }
  return n;
}

CapacityFit fit_capacity_exponent(const SpectralModel& smodel, std::span<const double> lambda_grid) {
  if (lambda_grid.size() < 2) throw InputError("capacity fit needs at least two grid points");
  for (double l : lambda_grid)
    if (!(l > 0.0) || !std::isfinite(l)) throw InputError("capacity fit grid must be positive");
  const auto [lo, hi] = std::minmax_element(lambda_grid.begin(), lambda_grid.end());
  if (std::log10(*hi / *lo) < 2.0 - 1e-12) throw InputError("capacity fit grid must span at least two decades");
  const std::size_t m = lambda_grid.size();
  std::vector<double> lx(m), ly(m);
  for (std::size_t i = 0; i < m; ++i) {
    lx[i] = std::log(lambda_grid[i]);
    ly[i] = std::log(effective_dimension(smodel, lambda_grid[i]));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(m);
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(m);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  CapacityFit fit;
  fit.s_hat = -sxy / sxx;
  double intercept = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) intercept = std::max(intercept, ly[i] + fit.s_hat * lx[i]);
  // Nudge up one ulp-scale step so the bound holds after exponentiation.
  fit.c0_hat = std::exp(intercept) * (1.0 + 1e-12);
  return fit;
}

std::vector<double> population_regularized_target(const TargetFunction& target, const SpectralModel& smodel,
                                                  double lambda) {
  if (!(lambda >= 0.0)) throw InputError("f_lambda needs lambda >= 0");
  std::vector<double> out(target.c.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double mu = smodel.eigenvalues()[k];
    out[k] = target.c[k] * mu / (mu + lambda);
  }
  return out;
}

Eigen::MatrixXd empirical_operator_matrix(const Dataset& data, const SpectralModel& smodel, int k_max) {
  if (data.size() == 0) throw InputError("empirical operator of an empty dataset");
  const Eigen::MatrixXd psi = weighted_basis(data.x, smodel, k_max);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k_max, k_max);
  m.selfadjointView<Eigen::Lower>().rankUpdate(psi.transpose(), 1.0 / static_cast<double>(data.size()));
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
  return m;
}

Eigen::VectorXd empirical_sampling_vector(const Dataset& data, const SpectralModel& smodel, int k_max) {
  if (data.size() == 0) throw InputError("sampling vector of an empty dataset");
  const Eigen::MatrixXd psi = weighted_basis(data.x, smodel, k_max);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(data.y.data(), static_cast<Eigen::Index>(data.size()));
  return psi.transpose() * y / static_cast<double>(data.size());
}

DeviationReport operator_deviation_moments(const ProcessSpec& spec, const TargetFunction& target,
                                           const SpectralModel& smodel, std::size_t n, double lambda,
                                           double delta, int trials, std::uint64_t seed,
                                           const DeviationOptions& options) {
  if (trials < 50) throw ConfigError("deviation moments need at least 50 trials");
  if (!(lambda > 0.0)) throw ConfigError("deviation moments need lambda > 0");
  if (!(delta > 0.0)) throw ConfigError("deviation moments need delta > 0");
  if (n < 1) throw ConfigError("deviation moments need n >= 1");
  const int k = std::min(options.k_max, smodel.k_max());
  if (static_cast<double>(n) * k * k > kDiagnosticBudget)
    throw ConfigError("n * k_max^2 exceeds the diagnostic budget of " + std::to_string(kDiagnosticBudget));

  Eigen::VectorXd mu(k), f_psi = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < k; ++i) {
    mu[i] = smodel.eigenvalue(i);
    if (static_cast<std::size_t>(i) < target.c.size()) f_psi[i] = std::sqrt(mu[i]) * target.c[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd w = (mu.array() + lambda).rsqrt().matrix();

  std::vector<double> ps(static_cast<std::size_t>(trials)), qs(ps.size()), rs(ps.size()), ss(ps.size()),
      ts(ps.size());
  double clip = 0.0;
  parallel_for(static_cast<std::size_t>(trials), options.jobs, [&](std::size_t trial) {
    const auto data = generate(spec, target, smodel, n, mix_seed({seed, trial, 0xd1a9}));
    if (trial == 0) clip = data.clip;
    const Eigen::MatrixXd m = empirical_operator_matrix(data, smodel, k);
    const Eigen::VectorXd b = empirical_sampling_vector(data, smodel, k);

    Eigen::MatrixXd diff = -m;
    diff.diagonal() += mu;
    ss[trial] = std::pow(largest_eigenvalue(diff), 2);

    const Eigen::MatrixXd wd = w.asDiagonal() * diff;
    ps[trial] = largest_eigenvalue(wd * wd.transpose());

    Eigen::MatrixXd reg = m;
    reg.diagonal().array() += lambda;
    Eigen::MatrixXd pop = Eigen::MatrixXd::Zero(k, k);
    pop.diagonal() = mu.array() + lambda;
    const Eigen::MatrixXd prod = reg.llt().solve(pop);
    qs[trial] = std::sqrt(largest_eigenvalue(prod.transpose() * prod));

    const Eigen::VectorXd g = f_psi - b;
    ts[trial] = g.squaredNorm();
    rs[trial] = w.cwiseProduct(g).squaredNorm();
  });

  DeviationReport rep;
  rep.n = n;
  rep.lambda = lambda;
  rep.delta = delta;
  rep.trials = trials;
  rep.k_max = k;
  rep.effective_dim = effective_dimension(smodel, lambda);
  rep.clip = clip;
  const auto p = mean_se(ps), q = mean_se(qs), r = mean_se(rs), s = mean_se(ss), t = mean_se(ts);
  rep.p = p.mean, rep.p_se = p.se;
  rep.q = q.mean, rep.q_se = q.se;
  rep.r = r.mean, rep.r_se = r.se;
  rep.s = s.mean, rep.s_se = s.se;
  rep.t = t.mean, rep.t_se = t.se;
  return rep;
}

LemmaBounds lemma_bounds(std::size_t n, double lambda, double delta, double effective_dim, double clip,
                         const MixingModel& mixing, double kappa) {
  const double nd = static_cast<double>(n);
  const long nl = static_cast<long>(n);
  const double sum_alpha = mixing_sum(mixing, nl, 1.0);
  const double power = delta / (delta + 2.0);
  const double sum_alpha_pow = mixing_sum(mixing, nl, power);
  const double kappa_pow = std::pow(kappa, 2.0 * delta * (delta + 1.0) / (2.0 * delta + 1.0));
  const double n_pow = std::pow(effective_dim, 2.0 / (delta + 2.0));
  const double k2 = kappa * kappa;

  LemmaBounds b;
  b.bound_s = k2 * k2 / nd * (1.0 + 30.0 * sum_alpha);
  b.bound_p = k2 * effective_dim / nd + 15.0 * kappa_pow * n_pow * std::pow(lambda, -power) * sum_alpha_pow;
  b.bound_q = 2.0 * k2 * effective_dim / (nd * lambda) +
                 30.0 * kappa_pow * n_pow * std::pow(lambda, -(2.0 * delta + 2.0) / (delta + 2.0)) * sum_alpha_pow +
                 2.0;
  b.bound_t = clip * clip * k2 / nd * (1.0 + 30.0 * sum_alpha);
  b.bound_r = clip * clip * effective_dim / nd + 15.0 * std::pow(kappa, 2.0 * power) * clip * clip * n_pow *
                                                   std::pow(lambda, -power) * sum_alpha_pow;
  return b;
}

bool LemmaCheckResult::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const LemmaCheck& c) { return c.pass; });
}

LemmaCheckResult lemma_bound_check(const DeviationReport& report, const MixingModel& mixing, double kappa,
                                   double slack) {
  LemmaCheckResult out;
  out.bounds =
      lemma_bounds(report.n, report.lambda, report.delta, report.effective_dim, report.clip, mixing, kappa);
  out.delta_in_r_bound_range = report.delta > 0.0 && report.delta < 1.0;
  const auto add = [&](const char* name, double est, double rhs) {
    out.checks.push_back({name, est, rhs, est <= rhs * (1.0 + slack)});
  };
  add("S", report.s, out.bounds.bound_s);
  add("P", report.p, out.bounds.bound_p);
  add("Q", report.q, out.bounds.bound_q);
  add("T", report.t, out.bounds.bound_t);
  add("R", report.r, out.bounds.bound_r);
  return out;
}

CovarianceReport covariance_inequality_check(const ProcessSpec& spec, const SpectralModel& smodel, long lag,
                                             double u, double v, double t, int trials, std::uint64_t seed,
                                             double kappa, double slack) {
  if (lag < 1) throw InputError("covariance check needs lag >= 1");
  if (trials < 2) throw InputError("covariance check needs at least two trials");
  const bool sup_case = std::isinf(u) && std::isinf(v) && t == 1.0;
  const bool holder_case = std::isfinite(u) && std::isfinite(v) && std::isfinite(t) && u > 1.0 && v > 1.0 &&
                           t > 1.0 && std::abs(1.0 / u + 1.0 / v + 1.0 / t - 1.0) <= 1e-12;
  if (!sup_case && !holder_case)
    throw InputError("covariance exponents need 1/u + 1/v + 1/t = 1 with u, v, t > 1, or u = v = inf and t = 1");

  const int k = smodel.k_max();
  Eigen::VectorXd sum_xi = Eigen::VectorXd::Zero(k), sum_eta = Eigen::VectorXd::Zero(k);
  double sum_inner = 0.0, sum_xi_u = 0.0, sum_eta_v = 0.0;
  Eigen::VectorXd sqrt_mu(k);
  for (int i = 0; i < k; ++i) sqrt_mu[i] = std::sqrt(smodel.eigenvalue(i));
  std::vector<double> phi(static_cast<std::size_t>(k));
  const auto embed = [&](double x) {
    smodel.eigenfunctions(x, phi);
    Eigen::VectorXd e(k);
    for (int i = 0; i < k; ++i) e[i] = sqrt_mu[i] * phi[static_cast<std::size_t>(i)];
    return e;
  };
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(mix_seed({seed, static_cast<std::uint64_t>(trial), 0xc0fa}));
    const auto xs = generate_inputs(spec, static_cast<std::size_t>(lag) + 1, rng);
    const Eigen::VectorXd xi = embed(xs.front());
    const Eigen::VectorXd eta = embed(xs.back());
    sum_xi += xi;
    sum_eta += eta;
    sum_inner += xi.dot(eta);
    if (!sup_case) {
      sum_xi_u += std::pow(xi.norm(), u);
      sum_eta_v += std::pow(eta.norm(), v);
    }
  }
  const double nt = static_cast<double>(trials);
  CovarianceReport rep;
  rep.lag = lag;
  rep.u = u;
  rep.v = v;
  rep.t = t;
  rep.trials = trials;
  rep.lhs = std::abs(sum_inner / nt - (sum_xi / nt).dot(sum_eta / nt));
  rep.alpha = mixing_bound(spec.mixing, lag);
  rep.moment_u = sup_case ? kappa : std::pow(sum_xi_u / nt, 1.0 / u);
  rep.moment_v = sup_case ? kappa : std::pow(sum_eta_v / nt, 1.0 / v);
  rep.rhs = 15.0 * std::pow(rep.alpha, 1.0 / t) * rep.moment_u * rep.moment_v;
  rep.noise_floor = 3.0 / std::sqrt(nt);
  rep.pass = rep.lhs <= rep.rhs * (1.0 + slack);
  rep.pass_within_noise = rep.lhs <= rep.rhs * (1.0 + slack) + rep.noise_floor;
  return rep;
}

nlohmann::json to_json(const DeviationReport& r) {
  return {{"n", r.n},
          {"lambda", r.lambda},
          {"delta", r.delta},
          {"trials", r.trials},
          {"k_max", r.k_max},
          {"effective_dimension", r.effective_dim},
          {"clip", r.clip},
          {"estimates", {{"P", r.p}, {"Q", r.q}, {"R", r.r}, {"S", r.s}, {"T", r.t}}},
          {"standard_errors", {{"P", r.p_se}, {"Q", r.q_se}, {"R", r.r_se}, {"S", r.s_se}, {"T", r.t_se}}}};
}

nlohmann::json to_json(const LemmaCheckResult& res) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : res.checks)
    checks.push_back({{"moment", c.moment}, {"estimate", c.estimate}, {"rhs", c.rhs}, {"pass", c.pass}});
  return {{"bound_s", res.bounds.bound_s},
          {"bound_p", res.bounds.bound_p},
          {"bound_q", res.bounds.bound_q},
          {"bound_t", res.bounds.bound_t},
          {"bound_r", res.bounds.bound_r},
          {"delta_in_r_bound_range", res.delta_in_r_bound_range},
          {"checks", checks},
          {"all_pass", res.all_pass()}};
}

nlohmann::json to_json(const CovarianceReport& r) {
  const auto num = [](double x) { return std::isinf(x) ? nlohmann::json("inf") : nlohmann::json(x); };
  return {{"lag", r.lag},       {"u", num(r.u)},     {"v", num(r.v)},           {"t", num(r.t)},
          {"trials", r.trials}, {"lhs", r.lhs},      {"alpha", r.alpha},        {"moment_u", r.moment_u},
          {"moment_v", r.moment_v}, {"rhs", r.rhs}, {"noise_floor", r.noise_floor},
          {"pass", r.pass}, {"pass_within_noise", r.pass_within_noise}};
}

}  // namespace mixkrr
