#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mixkrr/kernelspec.hpp"
#include "mixkrr/random.hpp"

namespace mixkrr {

// ---------------------------------------------------------------------------
// Mixing-coefficient envelopes
// ---------------------------------------------------------------------------

struct IidMixing {
  bool operator==(const IidMixing&) const = default;
};

/// alpha_j <= c0 exp(-b0 j^gamma0)
struct GeometricMixing {
  double c0_star = 1.0;
  double b0 = 1.0;
  double gamma0 = 1.0;
  bool operator==(const GeometricMixing&) const = default;
};

/// alpha_j <= c1 j^-gamma1
struct AlgebraicMixing {
  double c1_star = 1.0;
  double gamma1 = 1.0;
  bool operator==(const AlgebraicMixing&) const = default;
};

using MixingModel = std::variant<IidMixing, GeometricMixing, AlgebraicMixing>;

/// Envelope value at lag j >= 1; throws InputError for j < 1.
double mixing_bound(const MixingModel& model, long j);

/// sum_{l=1}^{n} mixing_bound(l)^power.
double mixing_sum(const MixingModel& model, long n, double power = 1.0);

std::string describe(const MixingModel& model);

// ---------------------------------------------------------------------------
// Processes
// ---------------------------------------------------------------------------

/// x_t iid uniform on [0,1].
struct IidUniform {};

/// Gaussian copula of a stationary AR(1): g_t = rho g_{t-1} + sqrt(1-rho^2) xi_t,
/// x_t = Phi(g_t). Exactly uniform marginals from t = 1.
struct GaussCopulaAR1 {
  double rho = 0.5;
};

/// Piecewise-constant uniform draws held for Pareto(beta) integer holding
/// times, P(H >= j) = j^-beta. The first hold is drawn from the stationary
/// residual law P(R = j) = j^-beta / zeta(beta), so the sequence is
/// stationary from t = 1. beta = +inf regenerates every step.
struct RenewalHold {
  double beta = 2.0;
};

/// z_t = a * mean_i tanh(z_{t-i}) + b * mean_k z'_{t-k} + e_t with iid
/// standard Gaussian z' and e; `contraction` is a (Lipschitz constant of the
/// autoregressive part in the max norm). Output x_t = logistic(z_t).
struct NonparametricARX {
  int p = 1;
  int q = 1;
  double contraction = 0.5;
  double exogenous_weight = 0.5;
};

/// z_t = sum_i ar_i z_{t-i} + eps_t + sum_k ma_k eps_{t-k}; x_t = logistic(z_t).
struct Arma {
  std::vector<double> ar{0.5};
  std::vector<double> ma{};
};

/// z_t = max(0, xi0 z'_t + eta0 z_{t-1} + gamma0 + eps_t); x_t = logistic(z_t).
struct DynamicTobit {
  double xi0 = 0.5;
  double eta0 = 0.5;
  double gamma0 = 0.0;
};

using ProcessVariant =
    std::variant<IidUniform, GaussCopulaAR1, RenewalHold, NonparametricARX, Arma, DynamicTobit>;

struct ProcessSpec {
  ProcessVariant process = IidUniform{};
  double noise_sigma = 0.0;
  MixingModel mixing = IidMixing{};

  /// Spec with the variant's default mixing envelope attached.
  static ProcessSpec make(ProcessVariant process, double noise_sigma = 0.0);
  std::string name() const;
};

/// Envelope declared for a process: Iid for IidUniform, Geometric(1, -ln|rho|, 1)
/// for GaussCopulaAR1, Algebraic(1, beta - 1) for RenewalHold, Geometric with
/// a unit-rate envelope for the logistic-transformed recursions.
MixingModel default_mixing(const ProcessVariant& process);

/// Throws ConfigError when the variant's stationarity surrogate fails.
void validate(const ProcessSpec& spec);

/// Number of discarded warm-up steps for recursions without an exact
/// stationary start.
inline constexpr int kBurnIn = 1000;

/// x-only realization of length n, consuming randomness from `rng`.
std::vector<double> generate_inputs(const ProcessSpec& spec, std::size_t n, Rng& rng);

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct Origin {
  enum class Kind { Whole, TandemBlock, ParallelStream };
  Kind kind = Kind::Whole;
  int index = 0;  ///< 1-based block/stream index
  int count = 1;
  bool operator==(const Origin&) const = default;
  std::string str() const;
};

/// Ordered sample sequence. Order is part of the data: the mixing
/// metadata only makes sense for the stored order.
struct Dataset {
  std::vector<double> x;
  std::vector<double> y;
  ProcessSpec spec;
  std::uint64_t seed = 0;
  Origin origin;
  double clip = 0.0;  ///< M: every |y_i| <= clip

  std::size_t size() const noexcept { return x.size(); }
};

/// y_i = f_rho(x_i) + eps_i with eps clipped Gaussian in [-3 sigma, 3 sigma].
/// Deterministic in (spec, target, n, seed).
Dataset generate(const ProcessSpec& spec, const TargetFunction& target, const SpectralModel& model,
                 std::size_t n, std::uint64_t seed);

/// Monte-Carlo lower bound on alpha_j: the supremum in the definition is
/// restricted to dyadic intervals of levels 1..3 for both x_1 and x_{1+j}.
double empirical_alpha(const ProcessSpec& spec, long j, int trials, std::uint64_t seed);

enum class Norm { Rho, Rkhs };
std::string to_string(Norm norm);
Norm parse_norm(const std::string& s);

/// Mixing-exponent conditions under which the iid rates carry over:
/// RKHS: gamma1 > 3 + (s+2)/(2r+s); rho: gamma1 > 2 + (2r-1)/(2r+s).
bool check_sufficient_condition(double gamma1, double r, double s, Norm norm);

nlohmann::json to_json(const MixingModel& model);
MixingModel mixing_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProcessSpec& spec);
ProcessSpec process_from_json(const nlohmann::json& j);

}  // namespace mixkrr
