#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace mixkrr {

/// Spectral model of a Mercer kernel under the uniform marginal on [0,1].
///
/// Eigenfunctions are always the sine family phi_k(x) = sqrt(2) sin((k - 1/2) pi x),
/// k = 1, 2, ... (orthonormal in L2[0,1]). Two eigenvalue families exist:
///  - Brownian: mu_k = ((k - 1/2) pi)^-2, the exact spectrum of min(x, x').
///    The series is infinite; only the first k_max terms are stored and the
///    remainder is covered by tail_bound.
///  - Finite: caller-supplied nonincreasing positive eigenvalues. The kernel
///    is exactly sum_k mu_k phi_k phi_k, so there is no tail.
///
/// Indices in the public API are 0-based: eigenvalue(0) is mu_1.
class SpectralModel {
 public:
  enum class Family { Brownian, Finite };

  static SpectralModel brownian(int k_max);
  static SpectralModel finite(std::vector<double> eigenvalues);

  Family family() const noexcept { return family_; }
  const std::string& marginal() const noexcept { return marginal_; }
  int k_max() const noexcept { return static_cast<int>(mu_.size()); }
  const std::vector<double>& eigenvalues() const noexcept { return mu_; }
  double eigenvalue(int k) const { return mu_.at(static_cast<std::size_t>(k)); }
  /// Upper bound on sum_{k >= k_max} mu_k (0-based), i.e. the discarded trace.
  double tail_bound() const noexcept { return tail_bound_; }
  /// Bound on sup_x |phi_k(x)|.
  static constexpr double eigenfunction_sup() { return 1.4142135623730951; }

  double eigenfunction(int k, double x) const;
  /// Fills out[k] = phi_k(x) for k < out.size() via the sine recurrence.
  void eigenfunctions(double x, std::span<double> out) const;
  /// Row i holds phi_k(points[i]) for k < k_max.
  Eigen::MatrixXd basis_matrix(std::span<const double> points) const;

  /// Truncated Mercer sum sum_{k < k_max} mu_k phi_k(x) phi_k(x').
  double kernel_sum(double x, double xp) const;

  bool operator==(const SpectralModel&) const = default;

 private:
  SpectralModel(Family family, std::vector<double> mu, double tail_bound)
      : family_(family), mu_(std::move(mu)), tail_bound_(tail_bound) {}

  Family family_;
  std::string marginal_ = "uniform";
  std::vector<double> mu_;
  double tail_bound_;
};

/// Shorthand for brownian(k_max); the default truncation is 500.
SpectralModel brownian_spectral_model(int k_max = 500);

/// Mercer kernel on [0,1] (Gaussian accepts any finite real).
class KernelSpec {
 public:
  enum class Kind { BrownianMin, Gaussian, SyntheticSpectral };

  static KernelSpec brownian_min();
  static KernelSpec gaussian(double bandwidth);
  /// K(x, x') = sum_k mu_k phi_k(x) phi_k(x') for a finite spectral model.
  static KernelSpec synthetic(std::shared_ptr<const SpectralModel> model);

  Kind kind() const noexcept { return kind_; }
  double bandwidth() const noexcept { return bandwidth_; }
  double kappa() const noexcept { return kappa_; }
  const std::shared_ptr<const SpectralModel>& model() const noexcept { return model_; }
  std::string name() const;

  /// Throws InputError when x lies outside the kernel's domain.
  void check_domain(double x) const;
  double operator()(double x, double xp) const;

  /// True when `m` describes this kernel's integral operator exactly
  /// (up to the truncation recorded in m.tail_bound()).
  bool matches(const SpectralModel& m) const;

 private:
  KernelSpec(Kind kind, double bandwidth, double kappa, std::shared_ptr<const SpectralModel> model)
      : kind_(kind), bandwidth_(bandwidth), kappa_(kappa), model_(std::move(model)) {}

  Kind kind_;
  double bandwidth_ = 0.0;
  double kappa_ = 1.0;
  std::shared_ptr<const SpectralModel> model_;
};

double kernel_eval(const KernelSpec& spec, double x, double xp);

/// Gram matrix G_ij = K(x_i, x_j). Throws InputError on an empty list.
Eigen::MatrixXd gram_matrix(const KernelSpec& spec, std::span<const double> points);

/// Coefficient rule h_k (1-based k) for the source representer h_rho.
struct CoefficientRule {
  std::string name;
  std::function<double(int)> h;

  /// h_k = 1/k.
  static CoefficientRule inverse();
  /// h_k = delta_{k, mode}.
  static CoefficientRule single_mode(int mode = 1);
  /// Parses "inverse" or "single" / "single:<mode>".
  static CoefficientRule parse(const std::string& name);
};

/// Regression function f_rho = L_K^r h_rho in the phi basis.
struct TargetFunction {
  double r = 1.0;
  std::string h_rule;
  std::vector<double> h;
  std::vector<double> c;  ///< c_k = mu_k^r h_k
  double sup_bound = 0.0;  ///< M_f >= sup |f_rho|
};

/// Builds f_rho from the rule; only the first min(k_max, model.k_max()) modes
/// are populated. Throws ConfigError unless 1/2 <= r <= 1.
TargetFunction synthesize_target(const SpectralModel& model, double r, const CoefficientRule& rule,
                                 int k_max);

double target_eval(const TargetFunction& f, const SpectralModel& model, double x);

struct SpectralNorms {
  double rho = 0.0;
  double rkhs = 0.0;
};

/// rho = sqrt(sum c_k^2), rkhs = sqrt(sum c_k^2 / mu_k).
SpectralNorms spectral_norms(std::span<const double> coeffs, const SpectralModel& model);

nlohmann::json to_json(const SpectralModel& model, const TargetFunction* target = nullptr);
nlohmann::json to_json(const KernelSpec& kernel);
KernelSpec kernel_from_json(const nlohmann::json& j);

}  // namespace mixkrr
