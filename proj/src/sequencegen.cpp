#include "mixkrr/sequencegen.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

#include "mixkrr/error.hpp"

namespace mixkrr {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double standard_normal_cdf(double g) { return 0.5 * std::erfc(-g / std::sqrt(2.0)); }

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Uniform on (0, 1], safe for negative powers.
double uniform_open0(Rng& rng) { return 1.0 - uniform01(rng); }

/// Pareto integer holding time with P(H >= j) = j^-beta.
long pareto_hold(double beta, Rng& rng) {
  if (std::isinf(beta)) return 1;
  const double h = std::floor(std::pow(uniform_open0(rng), -1.0 / beta));
  return h > 1e15 ? static_cast<long>(1e15) : std::max(1L, static_cast<long>(h));
}

/// Zeta(beta) variate, P(R = j) = j^-beta / zeta(beta), by Devroye's rejection.
long zeta_variate(double beta, Rng& rng) {
  if (std::isinf(beta) || beta > 60.0) return 1;
  const double b = std::pow(2.0, beta - 1.0);
  for (;;) {
    const double u = uniform_open0(rng);
    const double v = uniform01(rng);
    const double x = std::floor(std::pow(u, -1.0 / (beta - 1.0)));
    if (!(x < 1e15)) continue;
    const double t = std::pow(1.0 + 1.0 / x, beta - 1.0);
    if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<long>(x);
  }
}

double companion_spectral_radius(const std::vector<double>& ar) {
  if (ar.empty()) return 0.0;
  const auto p = static_cast<Eigen::Index>(ar.size());
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) c(0, i) = ar[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 1; i < p; ++i) c(i, i - 1) = 1.0;
  return c.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

double mixing_bound(const MixingModel& model, long j) {
  if (j < 1) throw InputError("mixing lag must be >= 1, got " + std::to_string(j));
  const double jd = static_cast<double>(j);
  return std::visit(Overloaded{
                        [](const IidMixing&) { return 0.0; },
                        [jd](const GeometricMixing& g) { return g.c0_star * std::exp(-g.b0 * std::pow(jd, g.gamma0)); },
                        [jd](const AlgebraicMixing& a) { return a.c1_star * std::pow(jd, -a.gamma1); },
                    },
                    model);
}

double mixing_sum(const MixingModel& model, long n, double power) {
  if (std::holds_alternative<IidMixing>(model)) return 0.0;
  double s = 0.0;
  for (long l = 1; l <= n; ++l) s += std::pow(mixing_bound(model, l), power);
  return s;
}

std::string describe(const MixingModel& model) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const IidMixing&) { os << "iid"; },
                 [&](const GeometricMixing& g) {
                   os << "geometric(c0=" << g.c0_star << ", b0=" << g.b0 << ", gamma0=" << g.gamma0 << ")";
                 },
                 [&](const AlgebraicMixing& a) { os << "algebraic(c1=" << a.c1_star << ", gamma1=" << a.gamma1 << ")"; },
             },
             model);
  return os.str();
}

MixingModel default_mixing(const ProcessVariant& process) {
  return std::visit(
      Overloaded{
          [](const IidUniform&) -> MixingModel { return IidMixing{}; },
          [](const GaussCopulaAR1& p) -> MixingModel {
            if (p.rho == 0.0) return IidMixing{};
            return GeometricMixing{1.0, -std::log(std::abs(p.rho)), 1.0};
          },
          [](const RenewalHold& p) -> MixingModel {
            if (std::isinf(p.beta)) return IidMixing{};
            return AlgebraicMixing{1.0, p.beta - 1.0};
          },
          [](const NonparametricARX& p) -> MixingModel {
            return GeometricMixing{1.0, -std::log(std::max(p.contraction, 1e-12)), 1.0};
          },
          [](const Arma& p) -> MixingModel {
            return GeometricMixing{1.0, -std::log(std::max(companion_spectral_radius(p.ar), 1e-12)), 1.0};
          },
          [](const DynamicTobit& p) -> MixingModel {
            return GeometricMixing{1.0, -std::log(std::max(std::abs(p.eta0), 1e-12)), 1.0};
          },
      },
      process);
}

ProcessSpec ProcessSpec::make(ProcessVariant process, double noise_sigma) {
  ProcessSpec spec;
  spec.mixing = default_mixing(process);
  spec.process = std::move(process);
  spec.noise_sigma = noise_sigma;
  return spec;
}

std::string ProcessSpec::name() const {
  return std::visit(Overloaded{
                        [](const IidUniform&) { return std::string("iid"); },
                        [](const GaussCopulaAR1&) { return std::string("ar1"); },
                        [](const RenewalHold&) { return std::string("renewal"); },
                        [](const NonparametricARX&) { return std::string("arx"); },
                        [](const Arma&) { return std::string("arma"); },
                        [](const DynamicTobit&) { return std::string("tobit"); },
                    },
                    process);
}

void validate(const ProcessSpec& spec) {
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma))
    throw ConfigError("noise_sigma must be a finite value >= 0");
  std::visit(Overloaded{
                 [](const IidUniform&) {},
                 [](const GaussCopulaAR1& p) {
                   if (!(p.rho > -1.0 && p.rho < 1.0)) throw ConfigError("ar1 rho must lie in (-1, 1)");
                 },
                 [](const RenewalHold& p) {
                   if (!(p.beta > 1.0)) throw ConfigError("renewal tail index beta must exceed 1");
                 },
                 [](const NonparametricARX& p) {
                   if (p.p < 1 || p.q < 1) throw ConfigError("arx orders p, q must be >= 1");
                   if (!(std::abs(p.contraction) < 1.0))
                     throw ConfigError("arx contraction factor must be < 1 (stationarity not guaranteed)");
                 },
                 [](const Arma& p) {
                   if (!(companion_spectral_radius(p.ar) < 1.0))
                     throw ConfigError("arma companion spectral radius must be < 1");
                 },
                 [](const DynamicTobit& p) {
                   if (!(std::abs(p.eta0) < 1.0)) throw ConfigError("tobit |eta0| must be < 1");
                 },
             },
             spec.process);
}

std::vector<double> generate_inputs(const ProcessSpec& spec, std::size_t n, Rng& rng) {
  validate(spec);
  std::vector<double> x(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::visit(
      Overloaded{
          [&](const IidUniform&) {
            for (auto& v : x) v = uniform01(rng);
          },
          [&](const GaussCopulaAR1& p) {
            const double innov = std::sqrt(1.0 - p.rho * p.rho);
            double g = gauss(rng);
            for (std::size_t t = 0; t < n; ++t) {
              if (t > 0) g = p.rho * g + innov * gauss(rng);
              x[t] = standard_normal_cdf(g);
            }
          },
          [&](const RenewalHold& p) {
            long remaining = zeta_variate(p.beta, rng);
            double value = uniform01(rng);
            for (std::size_t t = 0; t < n; ++t) {
              if (remaining == 0) {
                remaining = pareto_hold(p.beta, rng);
                value = uniform01(rng);
              }
              x[t] = value;
              --remaining;
            }
          },
          [&](const NonparametricARX& p) {
            std::deque<double> z(static_cast<std::size_t>(p.p), 0.0);
            std::deque<double> zx(static_cast<std::size_t>(p.q), 0.0);
            for (std::size_t t = 0; t < n + kBurnIn; ++t) {
              zx.pop_back();
              zx.push_front(gauss(rng));
              double ar = 0.0;
              for (double v : z) ar += std::tanh(v);
              const double ex = std::accumulate(zx.begin(), zx.end(), 0.0);
              const double next = p.contraction * ar / p.p + p.exogenous_weight * ex / p.q + gauss(rng);
              z.pop_back();
              z.push_front(next);
              if (t >= kBurnIn) x[t - kBurnIn] = logistic(next);
            }
          },
          [&](const Arma& p) {
            std::deque<double> z(p.ar.size(), 0.0);
            std::deque<double> eps(p.ma.size(), 0.0);
            for (std::size_t t = 0; t < n + kBurnIn; ++t) {
              const double e = gauss(rng);
              double next = e;
              for (std::size_t i = 0; i < p.ar.size(); ++i) next += p.ar[i] * z[i];
              for (std::size_t k = 0; k < p.ma.size(); ++k) next += p.ma[k] * eps[k];
              if (!z.empty()) {
                z.pop_back();
                z.push_front(next);
              }
              if (!eps.empty()) {
                eps.pop_back();
                eps.push_front(e);
              }
              if (t >= kBurnIn) x[t - kBurnIn] = logistic(next);
            }
          },
          [&](const DynamicTobit& p) {
            double z = 0.0;
            for (std::size_t t = 0; t < n + kBurnIn; ++t) {
              const double exo = gauss(rng);
              z = std::max(0.0, p.xi0 * exo + p.eta0 * z + p.gamma0 + gauss(rng));
              if (t >= kBurnIn) x[t - kBurnIn] = logistic(z);
            }
          },
      },
      spec.process);
  return x;
}

std::string Origin::str() const {
  switch (kind) {
    case Kind::Whole: return "whole";
    case Kind::TandemBlock: return "tandem-block(" + std::to_string(index) + " of " + std::to_string(count) + ")";
    case Kind::ParallelStream:
      return "parallel-stream(" + std::to_string(index) + " of " + std::to_string(count) + ")";
  }
  return "whole";
}

Dataset generate(const ProcessSpec& spec, const TargetFunction& target, const SpectralModel& model,
                 std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InputError("generate needs n >= 1");
  // Separate streams so the input sequence does not depend on the noise level.
  Rng x_rng(mix_seed({seed, 0x78}));
  Rng noise_rng(mix_seed({seed, 0x79}));
  Dataset d;
  d.spec = spec;
  d.seed = seed;
  d.x = generate_inputs(spec, n, x_rng);
  d.y.resize(n);
  const double sigma = spec.noise_sigma;
  d.clip = target.sup_bound + 3.0 * sigma;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> phi(target.c.size());
  for (std::size_t i = 0; i < n; ++i) {
    model.eigenfunctions(d.x[i], phi);
    double f = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) f += target.c[k] * phi[k];
    double eps = 0.0;
    if (sigma > 0.0) eps = std::clamp(sigma * gauss(noise_rng), -3.0 * sigma, 3.0 * sigma);
    d.y[i] = f + eps;
  }
  return d;
}

double empirical_alpha(const ProcessSpec& spec, long j, int trials, std::uint64_t seed) {
  if (j < 1) throw InputError("empirical_alpha needs lag j >= 1");
  if (trials < 1000) throw InputError("empirical_alpha needs at least 1000 trials");
  validate(spec);
  constexpr int kCells = 8;
  std::array<std::array<double, kCells>, kCells> joint{};
  const auto cell = [](double x) { return std::min(kCells - 1, static_cast<int>(x * kCells)); };
  for (int t = 0; t < trials; ++t) {
    Rng rng(mix_seed({seed, static_cast<std::uint64_t>(t), 0xa1fa}));
    const auto xs = generate_inputs(spec, static_cast<std::size_t>(j) + 1, rng);
    joint[static_cast<std::size_t>(cell(xs.front()))][static_cast<std::size_t>(cell(xs.back()))] += 1.0;
  }
  for (auto& row : joint)
    for (auto& v : row) v /= trials;

  // Dyadic intervals of levels 1..3 as [lo, hi) ranges of level-3 cells.
  std::vector<std::pair<int, int>> events;
  for (int level = 1; level <= 3; ++level) {
    const int width = kCells >> level;
    for (int a = 0; a < (1 << level); ++a) events.emplace_back(a * width, (a + 1) * width);
  }
  double best = 0.0;
  for (const auto& [alo, ahi] : events) {
    for (const auto& [blo, bhi] : events) {
      double pab = 0.0, pa = 0.0, pb = 0.0;
      for (int a = 0; a < kCells; ++a) {
        for (int b = 0; b < kCells; ++b) {
          const double p = joint[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
          const bool in_a = a >= alo && a < ahi;
          const bool in_b = b >= blo && b < bhi;
          if (in_a) pa += p;
          if (in_b) pb += p;
          if (in_a && in_b) pab += p;
        }
      }
      best = std::max(best, std::abs(pab - pa * pb));
    }
  }
  return best;
}

std::string to_string(Norm norm) { return norm == Norm::Rho ? "rho" : "rkhs"; }

Norm parse_norm(const std::string& s) {
  if (s == "rho") return Norm::Rho;
  if (s == "rkhs" || s == "RKHS") return Norm::Rkhs;
  throw InputError("unknown norm '" + s + "' (expected rho or rkhs)");
}

bool check_sufficient_condition(double gamma1, double r, double s, Norm norm) {
  if (!(r >= 0.5 && r <= 1.0) || !(s > 0.0 && s <= 1.0))
    throw InputError("sufficient condition needs 1/2 <= r <= 1 and 0 < s <= 1");
  const double threshold =
      norm == Norm::Rkhs ? 3.0 + (s + 2.0) / (2.0 * r + s) : 2.0 + (2.0 * r - 1.0) / (2.0 * r + s);
  return gamma1 > threshold;
}

nlohmann::json to_json(const MixingModel& model) {
  return std::visit(Overloaded{
                        [](const IidMixing&) { return nlohmann::json{{"kind", "iid"}}; },
                        [](const GeometricMixing& g) {
                          return nlohmann::json{{"kind", "geometric"}, {"c0_star", g.c0_star}, {"b0", g.b0},
                                                {"gamma0", g.gamma0}};
                        },
                        [](const AlgebraicMixing& a) {
                          return nlohmann::json{{"kind", "algebraic"}, {"c1_star", a.c1_star}, {"gamma1", a.gamma1}};
                        },
                    },
                    model);
}

MixingModel mixing_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "iid") return IidMixing{};
  if (kind == "geometric")
    return GeometricMixing{j.value("c0_star", 1.0), j.at("b0").get<double>(), j.value("gamma0", 1.0)};
  if (kind == "algebraic") return AlgebraicMixing{j.value("c1_star", 1.0), j.at("gamma1").get<double>()};
  throw InputError("unknown mixing kind '" + kind + "'");
}

nlohmann::json to_json(const ProcessSpec& spec) {
  nlohmann::json j;
  j["process"] = spec.name();
  std::visit(Overloaded{
                 [](const IidUniform&) {},
                 [&](const GaussCopulaAR1& p) { j["rho"] = p.rho; },
                 [&](const RenewalHold& p) {
                   if (std::isinf(p.beta))
                     j["beta"] = "inf";
                   else
                     j["beta"] = p.beta;
                 },
                 [&](const NonparametricARX& p) {
                   j["p"] = p.p;
                   j["q"] = p.q;
                   j["contraction"] = p.contraction;
                   j["exogenous_weight"] = p.exogenous_weight;
                 },
                 [&](const Arma& p) {
                   j["ar"] = p.ar;
                   j["ma"] = p.ma;
                 },
                 [&](const DynamicTobit& p) {
                   j["xi0"] = p.xi0;
                   j["eta0"] = p.eta0;
                   j["gamma0"] = p.gamma0;
                 },
             },
             spec.process);
  j["noise_sigma"] = spec.noise_sigma;
  j["mixing"] = to_json(spec.mixing);
  return j;
}

ProcessSpec process_from_json(const nlohmann::json& j) {
  const auto name = j.at("process").get<std::string>();
  ProcessVariant v;
  if (name == "iid") {
    v = IidUniform{};
  } else if (name == "ar1") {
    v = GaussCopulaAR1{j.value("rho", 0.5)};
  } else if (name == "renewal") {
    double beta = 2.0;
    if (j.contains("beta")) {
      const auto& b = j.at("beta");
      beta = b.is_string() ? std::stod(b.get<std::string>()) : b.get<double>();
    }
    v = RenewalHold{beta};
  } else if (name == "arx") {
    v = NonparametricARX{j.value("p", 1), j.value("q", 1), j.value("contraction", 0.5),
                         j.value("exogenous_weight", 0.5)};
  } else if (name == "arma") {
    v = Arma{j.value("ar", std::vector<double>{0.5}), j.value("ma", std::vector<double>{})};
  } else if (name == "tobit") {
    v = DynamicTobit{j.value("xi0", 0.5), j.value("eta0", 0.5), j.value("gamma0", 0.0)};
  } else {
    throw InputError("unknown process '" + name + "' (expected iid, ar1, renewal, arx, arma, tobit)");
  }
  auto spec = ProcessSpec::make(v, j.value("noise_sigma", 0.0));
  if (j.contains("mixing")) spec.mixing = mixing_from_json(j.at("mixing"));
  validate(spec);
  return spec;
}

}  // namespace mixkrr
