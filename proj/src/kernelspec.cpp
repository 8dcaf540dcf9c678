#include "mixkrr/kernelspec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mixkrr/error.hpp"

namespace mixkrr {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

}  // namespace

SpectralModel SpectralModel::brownian(int k_max) {
  if (k_max < 1) throw InputError("brownian spectral model needs k_max >= 1");
  std::vector<double> mu(static_cast<std::size_t>(k_max));
  for (int k = 0; k < k_max; ++k) {
    const double w = (k + 0.5) * kPi;
    mu[static_cast<std::size_t>(k)] = 1.0 / (w * w);
  }
  const double tail = 1.0 / (kPi * kPi * (k_max - 0.5));
  return SpectralModel(Family::Brownian, std::move(mu), tail);
}

SpectralModel SpectralModel::finite(std::vector<double> eigenvalues) {
  if (eigenvalues.empty()) throw InputError("finite spectral model needs at least one eigenvalue");
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    if (!(eigenvalues[k] > 0.0) || !std::isfinite(eigenvalues[k]))
      throw InputError("eigenvalues must be positive and finite");
    if (k > 0 && eigenvalues[k] > eigenvalues[k - 1])
      throw InputError("eigenvalues must be nonincreasing");
  }
  return SpectralModel(Family::Finite, std::move(eigenvalues), 0.0);
}

SpectralModel brownian_spectral_model(int k_max) { return SpectralModel::brownian(k_max); }

double SpectralModel::eigenfunction(int k, double x) const {
  return kSqrt2 * std::sin((k + 0.5) * kPi * x);
}

void SpectralModel::eigenfunctions(double x, std::span<double> out) const {
  if (out.empty()) return;
  // sin((k+3/2)t) = 2 cos(t) sin((k+1/2)t) - sin((k-1/2)t)
  const double t = kPi * x;
  const double two_cos = 2.0 * std::cos(t);
  double prev = -std::sin(0.5 * t);  // sin(-t/2)
  double cur = std::sin(0.5 * t);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = kSqrt2 * cur;
    const double next = two_cos * cur - prev;
    prev = cur;
    cur = next;
  }
}

Eigen::MatrixXd SpectralModel::basis_matrix(std::span<const double> points) const {
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(points.size()), k_max());
  std::vector<double> row(static_cast<std::size_t>(k_max()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    eigenfunctions(points[i], row);
    for (int k = 0; k < k_max(); ++k) phi(static_cast<Eigen::Index>(i), k) = row[static_cast<std::size_t>(k)];
  }
  return phi;
}

double SpectralModel::kernel_sum(double x, double xp) const {
  std::vector<double> a(mu_.size()), b(mu_.size());
  eigenfunctions(x, a);
  eigenfunctions(xp, b);
  double s = 0.0;
  for (std::size_t k = 0; k < mu_.size(); ++k) s += mu_[k] * a[k] * b[k];
  return s;
}

KernelSpec KernelSpec::brownian_min() { return KernelSpec(Kind::BrownianMin, 0.0, 1.0, nullptr); }

KernelSpec KernelSpec::gaussian(double bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
    throw InputError("gaussian bandwidth must be positive");
  return KernelSpec(Kind::Gaussian, bandwidth, 1.0, nullptr);
}

KernelSpec KernelSpec::synthetic(std::shared_ptr<const SpectralModel> model) {
  if (!model) throw InputError("synthetic kernel needs a spectral model");
  if (model->family() != SpectralModel::Family::Finite)
    throw InputError("synthetic kernel needs a finite-rank spectral model");
  const double trace = std::accumulate(model->eigenvalues().begin(), model->eigenvalues().end(), 0.0);
  const double kappa = std::sqrt(2.0 * trace);  // phi_k^2 <= 2
  return KernelSpec(Kind::SyntheticSpectral, 0.0, kappa, std::move(model));
}

std::string KernelSpec::name() const {
  switch (kind_) {
    case Kind::BrownianMin: return "brownian";
    case Kind::Gaussian: return "gaussian";
    case Kind::SyntheticSpectral: return "synthetic";
  }
  return "unknown";
}

void KernelSpec::check_domain(double x) const {
  if (!std::isfinite(x)) throw InputError("kernel argument is not finite");
  if (kind_ != Kind::Gaussian && (x < 0.0 || x > 1.0))
    throw InputError(name() + " kernel is defined on [0,1], got " + std::to_string(x));
}

double KernelSpec::operator()(double x, double xp) const {
  switch (kind_) {
    case Kind::BrownianMin: return std::min(x, xp);
    case Kind::Gaussian: {
      const double d = (x - xp) / bandwidth_;
      return std::exp(-0.5 * d * d);
    }
    // Ordered arguments keep the truncated sum bitwise symmetric.
    case Kind::SyntheticSpectral: return model_->kernel_sum(std::min(x, xp), std::max(x, xp));
  }
  return 0.0;
}

bool KernelSpec::matches(const SpectralModel& m) const {
  switch (kind_) {
    case Kind::BrownianMin: return m.family() == SpectralModel::Family::Brownian;
    case Kind::Gaussian: return false;
    case Kind::SyntheticSpectral: return *model_ == m;
  }
  return false;
}

double kernel_eval(const KernelSpec& spec, double x, double xp) {
  spec.check_domain(x);
  spec.check_domain(xp);
  return spec(x, xp);
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, std::span<const double> points) {
  if (points.empty()) throw InputError("gram matrix of an empty point list");
  for (double x : points) spec.check_domain(x);
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd g(n, n);
  if (spec.kind() == KernelSpec::Kind::SyntheticSpectral) {
    const auto& model = *spec.model();
    const Eigen::MatrixXd phi = model.basis_matrix(points);
    const Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(model.eigenvalues().data(), model.k_max());
    g.noalias() = phi * mu.asDiagonal() * phi.transpose();
    return g;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double v = spec(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)]);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

CoefficientRule CoefficientRule::inverse() {
  return {"inverse", [](int k) { return 1.0 / k; }};
}

CoefficientRule CoefficientRule::single_mode(int mode) {
  if (mode < 1) throw InputError("single-mode rule needs mode >= 1");
  return {mode == 1 ? "single" : "single:" + std::to_string(mode),
          [mode](int k) { return k == mode ? 1.0 : 0.0; }};
}

CoefficientRule CoefficientRule::parse(const std::string& name) {
  if (name == "inverse") return inverse();
  if (name == "single") return single_mode(1);
  if (name.rfind("single:", 0) == 0) {
    try {
      return single_mode(std::stoi(name.substr(7)));
    } catch (const std::logic_error&) {
    }
  }
  throw InputError("unknown coefficient rule '" + name + "' (expected inverse, single, single:<k>)");
}

TargetFunction synthesize_target(const SpectralModel& model, double r, const CoefficientRule& rule,
                                 int k_max) {
  if (!(r >= 0.5 && r <= 1.0))
    throw ConfigError("source exponent r must lie in [1/2, 1], got " + std::to_string(r));
  if (k_max < 1) throw InputError("target needs k_max >= 1");
  const int k_eff = std::min(k_max, model.k_max());
  TargetFunction f;
  f.r = r;
  f.h_rule = rule.name;
  f.h.resize(static_cast<std::size_t>(k_eff));
  f.c.resize(static_cast<std::size_t>(k_eff));
  double abs_sum = 0.0;
  for (int k = 0; k < k_eff; ++k) {
    const double h = rule.h(k + 1);
    const double c = std::pow(model.eigenvalue(k), r) * h;
    f.h[static_cast<std::size_t>(k)] = h;
    f.c[static_cast<std::size_t>(k)] = c;
    abs_sum += std::abs(c);
  }
  f.sup_bound = SpectralModel::eigenfunction_sup() * abs_sum;
  return f;
}

double target_eval(const TargetFunction& f, const SpectralModel& model, double x) {
  std::vector<double> phi(f.c.size());
  model.eigenfunctions(x, phi);
  double s = 0.0;
  for (std::size_t k = 0; k < f.c.size(); ++k) s += f.c[k] * phi[k];
  return s;
}

SpectralNorms spectral_norms(std::span<const double> coeffs, const SpectralModel& model) {
  if (coeffs.size() > static_cast<std::size_t>(model.k_max()))
    throw InputError("more coefficients than the spectral model holds");
  SpectralNorms out;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    out.rho += coeffs[k] * coeffs[k];
    out.rkhs += coeffs[k] * coeffs[k] / model.eigenvalues()[k];
  }
  out.rho = std::sqrt(out.rho);
  out.rkhs = std::sqrt(out.rkhs);
  return out;
}

nlohmann::json to_json(const SpectralModel& model, const TargetFunction* target) {
  nlohmann::json j;
  j["kernel"] = model.family() == SpectralModel::Family::Brownian ? "brownian" : "synthetic";
  j["marginal"] = model.marginal();
  j["K_max"] = model.k_max();
  j["tail_bound"] = model.tail_bound();
  j["mu"] = model.eigenvalues();
  if (target) {
    j["target"] = {{"r", target->r}, {"h_rule", target->h_rule}, {"c", target->c},
                   {"sup_bound", target->sup_bound}};
  }
  return j;
}

nlohmann::json to_json(const KernelSpec& kernel) {
  nlohmann::json j{{"kind", kernel.name()}, {"kappa", kernel.kappa()}};
  if (kernel.kind() == KernelSpec::Kind::Gaussian) j["bandwidth"] = kernel.bandwidth();
  if (kernel.kind() == KernelSpec::Kind::SyntheticSpectral) j["mu"] = kernel.model()->eigenvalues();
  return j;
}

KernelSpec kernel_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "brownian") return KernelSpec::brownian_min();
  if (kind == "gaussian") return KernelSpec::gaussian(j.at("bandwidth").get<double>());
  if (kind == "synthetic")
    return KernelSpec::synthetic(
        std::make_shared<const SpectralModel>(SpectralModel::finite(j.at("mu").get<std::vector<double>>())));
  throw InputError("unknown kernel kind '" + kind + "'");
}

}  // namespace mixkrr
