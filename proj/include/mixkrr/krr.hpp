#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include <json.hpp>

#include "mixkrr/kernelspec.hpp"
#include "mixkrr/sequencegen.hpp"

namespace mixkrr {

/// Fitted kernel ridge regressor f(x) = sum_i a_i K(x_i, x).
///
/// The coefficients solve (G + n lambda I) a = y, which is the minimizer of
/// (1/n) sum (f(x_i) - y_i)^2 + lambda ||f||_K^2 over H_K.
class KrrModel {
 public:
  KrrModel(std::vector<double> points, Eigen::VectorXd coeffs, double lambda, KernelSpec kernel)
      : points_(std::move(points)), coeffs_(std::move(coeffs)), lambda_(lambda), kernel_(std::move(kernel)) {}

  const std::vector<double>& points() const noexcept { return points_; }
  const Eigen::VectorXd& coeffs() const noexcept { return coeffs_; }
  double lambda() const noexcept { return lambda_; }
  const KernelSpec& kernel() const noexcept { return kernel_; }
  std::size_t size() const noexcept { return points_.size(); }

  double predict(double x) const;
  std::vector<double> predict(std::span<const double> xs) const;

  /// ||f||_K^2 = a^T G a.
  double rkhs_norm_sq() const;

 private:
  std::vector<double> points_;
  Eigen::VectorXd coeffs_;
  double lambda_;
  KernelSpec kernel_;
};

/// Solves (G + n lambda I) a = y by Cholesky, falling back to a symmetric
/// eigendecomposition when the factorization fails.
/// Throws ConfigError for lambda <= 0, NumericError on non-finite output.
KrrModel fit(const Dataset& data, double lambda, const KernelSpec& kernel);
KrrModel fit(std::span<const double> x, std::span<const double> y, double lambda, const KernelSpec& kernel);

double predict(const KrrModel& model, double x);

/// <f, phi_k>_rho = mu_k sum_i a_i phi_k(x_i) for k < k_max.
/// Throws ConfigError when the model's kernel is not described by smodel.
std::vector<double> spectral_coeffs(const KrrModel& model, const SpectralModel& smodel);

struct ErrorNorms {
  double rho_err = 0.0;
  double rkhs_err = 0.0;
  /// Energy of the estimator outside the truncated basis, in rho and RKHS norm squared.
  double tail_rho = 0.0;
  double tail_rkhs = 0.0;
};

/// Kernel expansion sum_i a_i K(x_i, .) used for exact norm evaluation.
struct KernelExpansion {
  std::vector<double> points;
  std::vector<double> coeffs;
};

/// Exact ||f||_rho^2 and ||f||_K^2 of an expansion of the Brownian min kernel
/// (f is piecewise linear with f(0) = 0, ||f||_K^2 = int f'^2).
std::pair<double, double> brownian_expansion_norms(const KernelExpansion& f);

/// Error norms from spectral coefficients d of an estimator whose exact
/// norms are (rho_sq, rkhs_sq); out-of-basis energy is added explicitly.
ErrorNorms error_norms_from_coeffs(std::span<const double> d, double rho_sq, double rkhs_sq,
                                   const TargetFunction& target, const SpectralModel& smodel);

/// ||f_D - f_rho|| in L2(rho_X) and H_K.
ErrorNorms error_norms(const KrrModel& model, const TargetFunction& target, const SpectralModel& smodel);

/// Independent operator-form solve in the orthonormal H_K basis psi_k = sqrt(mu_k) phi_k:
/// (M + lambda I) u = b with M the truncated empirical operator and
/// b_k = (1/n) sum_i y_i psi_k(x_i). Returns u; multiply by sqrt(mu_k)
/// for rho-basis coefficients.
Eigen::VectorXd fit_operator_truncated(const Dataset& data, double lambda, const SpectralModel& smodel);

/// Evaluates sum_k sqrt(mu_k) u_k phi_k(x).
double predict_operator(std::span<const double> u, const SpectralModel& smodel, double x);

nlohmann::json to_json(const KrrModel& model);
KrrModel krr_model_from_json(const nlohmann::json& j);

}  // namespace mixkrr
