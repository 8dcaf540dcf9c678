#include "mixkrr/krr.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mixkrr/error.hpp"
#include "mixkrr/spectraldiag.hpp"

namespace mixkrr {

double KrrModel::predict(double x) const {
  kernel_.check_domain(x);
  double s = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) s += coeffs_[static_cast<Eigen::Index>(i)] * kernel_(points_[i], x);
  return s;
}

std::vector<double> KrrModel::predict(std::span<const double> xs) const {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(predict(x));
  return out;
}

double KrrModel::rkhs_norm_sq() const {
  if (points_.empty()) return 0.0;
  if (kernel_.kind() == KernelSpec::Kind::BrownianMin) {
    KernelExpansion e{points_, std::vector<double>(coeffs_.data(), coeffs_.data() + coeffs_.size())};
    return brownian_expansion_norms(e).second;
  }
  const Eigen::MatrixXd g = gram_matrix(kernel_, points_);
  return coeffs_.dot(g * coeffs_);
}

KrrModel fit(std::span<const double> x, std::span<const double> y, double lambda, const KernelSpec& kernel) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ConfigError("lambda must be positive and finite, got " + std::to_string(lambda));
  if (x.empty()) throw InputError("fit needs at least one sample");
  if (x.size() != y.size()) throw InputError("x and y lengths differ");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a_mat = gram_matrix(kernel, x);
  a_mat.diagonal().array() += static_cast<double>(n) * lambda;
  const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(y.data(), n);

  Eigen::VectorXd coeffs;
  Eigen::LLT<Eigen::MatrixXd> llt(a_mat);
  if (llt.info() == Eigen::Success) {
    coeffs = llt.solve(rhs);
  }
  if (llt.info() != Eigen::Success || !coeffs.allFinite()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a_mat);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double cond = ev.cwiseAbs().maxCoeff() / std::max(ev.cwiseAbs().minCoeff(), 1e-300);
    if (es.info() != Eigen::Success || ev.minCoeff() <= 0.0)
      throw NumericError("kernel ridge system is not positive definite", cond);
    coeffs = es.eigenvectors() * (es.eigenvectors().transpose() * rhs).cwiseQuotient(ev);
    if (!coeffs.allFinite()) throw NumericError("kernel ridge solve produced non-finite coefficients", cond);
  }
  return KrrModel(std::vector<double>(x.begin(), x.end()), std::move(coeffs), lambda, kernel);
}

KrrModel fit(const Dataset& data, double lambda, const KernelSpec& kernel) {
  return fit(data.x, data.y, lambda, kernel);
}

double predict(const KrrModel& model, double x) { return model.predict(x); }

std::vector<double> spectral_coeffs(const KrrModel& model, const SpectralModel& smodel) {
  if (!model.kernel().matches(smodel))
    throw ConfigError("model kernel '" + model.kernel().name() + "' is not described by the spectral model");
  const auto k_max = static_cast<std::size_t>(smodel.k_max());
  std::vector<double> d(k_max, 0.0), phi(k_max);
  for (std::size_t i = 0; i < model.size(); ++i) {
    smodel.eigenfunctions(model.points()[i], phi);
    const double a = model.coeffs()[static_cast<Eigen::Index>(i)];
    for (std::size_t k = 0; k < k_max; ++k) d[k] += a * phi[k];
  }
  for (std::size_t k = 0; k < k_max; ++k) d[k] *= smodel.eigenvalues()[k];
  return d;
}

std::pair<double, double> brownian_expansion_norms(const KernelExpansion& f) {
  // f(x) = sum_{x_i <= x} a_i x_i + x * sum_{x_i > x} a_i: linear between
  // sorted knots with slope equal to the coefficient mass to the right.
  std::vector<std::size_t> order(f.points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f.points[a] < f.points[b]; });
  double slope = 0.0;
  for (double a : f.coeffs) slope += a;
  double rho_sq = 0.0, rkhs_sq = 0.0;
  double x0 = 0.0, f0 = 0.0;
  for (std::size_t idx : order) {
    const double x1 = f.points[idx];
    const double h = x1 - x0;
    const double f1 = f0 + slope * h;
    rho_sq += h * (f0 * f0 + f0 * f1 + f1 * f1) / 3.0;
    rkhs_sq += h * slope * slope;
    x0 = x1;
    f0 = f1;
    slope -= f.coeffs[idx];
  }
  // Constant beyond the last knot (slope is zero up to rounding).
  rho_sq += (1.0 - x0) * f0 * f0;
  return {rho_sq, rkhs_sq};
}

ErrorNorms error_norms_from_coeffs(std::span<const double> d, double rho_sq, double rkhs_sq,
                                   const TargetFunction& target, const SpectralModel& smodel) {
  ErrorNorms out;
  double in_rho = 0.0, in_rkhs = 0.0, d_rho = 0.0, d_rkhs = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double mu = smodel.eigenvalues()[k];
    const double c = k < target.c.size() ? target.c[k] : 0.0;
    const double diff = d[k] - c;
    in_rho += diff * diff;
    in_rkhs += diff * diff / mu;
    d_rho += d[k] * d[k];
    d_rkhs += d[k] * d[k] / mu;
  }
  for (std::size_t k = d.size(); k < target.c.size(); ++k) {
    in_rho += target.c[k] * target.c[k];
    in_rkhs += target.c[k] * target.c[k] / smodel.eigenvalues()[k];
  }
  out.tail_rho = std::max(0.0, rho_sq - d_rho);
  out.tail_rkhs = std::max(0.0, rkhs_sq - d_rkhs);
  out.rho_err = std::sqrt(in_rho + out.tail_rho);
  out.rkhs_err = std::sqrt(in_rkhs + out.tail_rkhs);
  return out;
}

ErrorNorms error_norms(const KrrModel& model, const TargetFunction& target, const SpectralModel& smodel) {
  const auto d = spectral_coeffs(model, smodel);
  double rho_sq = 0.0, rkhs_sq = 0.0;
  if (model.kernel().kind() == KernelSpec::Kind::BrownianMin) {
    KernelExpansion e{model.points(),
                      std::vector<double>(model.coeffs().data(), model.coeffs().data() + model.coeffs().size())};
    std::tie(rho_sq, rkhs_sq) = brownian_expansion_norms(e);
  } else {
    // Finite-rank kernel: the estimator lies inside the basis.
    for (std::size_t k = 0; k < d.size(); ++k) {
      rho_sq += d[k] * d[k];
      rkhs_sq += d[k] * d[k] / smodel.eigenvalues()[k];
    }
  }
  return error_norms_from_coeffs(d, rho_sq, rkhs_sq, target, smodel);
}

Eigen::VectorXd fit_operator_truncated(const Dataset& data, double lambda, const SpectralModel& smodel) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw ConfigError("lambda must be positive and finite, got " + std::to_string(lambda));
  if (data.size() == 0) throw InputError("fit needs at least one sample");
  const Eigen::MatrixXd m = empirical_operator_matrix(data, smodel, smodel.k_max());
  const Eigen::VectorXd b = empirical_sampling_vector(data, smodel, smodel.k_max());
  Eigen::MatrixXd sys = m;
  sys.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(sys);
  Eigen::VectorXd u;
  if (llt.info() == Eigen::Success) u = llt.solve(b);
  if (llt.info() != Eigen::Success || !u.allFinite()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sys);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double cond = ev.cwiseAbs().maxCoeff() / std::max(ev.cwiseAbs().minCoeff(), 1e-300);
    throw NumericError("truncated operator system could not be factored", cond);
  }
  return u;
}

double predict_operator(std::span<const double> u, const SpectralModel& smodel, double x) {
  std::vector<double> phi(u.size());
  smodel.eigenfunctions(x, phi);
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) s += std::sqrt(smodel.eigenvalues()[k]) * u[k] * phi[k];
  return s;
}

nlohmann::json to_json(const KrrModel& model) {
  return {{"lambda", model.lambda()},
          {"n", model.size()},
          {"x", model.points()},
          {"a", std::vector<double>(model.coeffs().data(), model.coeffs().data() + model.coeffs().size())},
          {"kernel", to_json(model.kernel())}};
}

KrrModel krr_model_from_json(const nlohmann::json& j) {
  auto x = j.at("x").get<std::vector<double>>();
  auto a = j.at("a").get<std::vector<double>>();
  if (x.size() != a.size()) throw InputError("model dump: x and a lengths differ");
  Eigen::VectorXd coeffs = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
  return KrrModel(std::move(x), std::move(coeffs), j.at("lambda").get<double>(), kernel_from_json(j.at("kernel")));
}

}  // namespace mixkrr
