#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "mixkrr/dkrr.hpp"
#include "mixkrr/error.hpp"
#include "mixkrr/krr.hpp"
#include "mixkrr/random.hpp"

using namespace mixkrr;
using std::numbers::pi;

namespace {

Dataset make_data(std::vector<double> x, std::vector<double> y) {
  Dataset d;
  d.x = std::move(x);
  d.y = std::move(y);
  return d;
}

Dataset iid_sample(std::size_t n, std::uint64_t seed, double noise = 0.2, const char* rule = "inverse") {
  const auto smodel = SpectralModel::brownian(500);
  const auto target = synthesize_target(smodel, 1.0, CoefficientRule::parse(rule), 500);
  return generate(ProcessSpec::make(IidUniform{}, noise), target, smodel, n, seed);
}

std::vector<double> grid101() {
  std::vector<double> g(101);
  for (int i = 0; i <= 100; ++i) g[i] = i / 100.0;
  return g;
}

}  // namespace

TEST_CASE("one-point closed form") {
  const auto m = fit(make_data({0.5}, {1.0}), 1.0, KernelSpec::brownian_min());
  CHECK(m.coeffs()(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.predict(0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(m.predict(1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(predict(m, 0.25) == doctest::Approx(2.0 / 3.0 * 0.25).epsilon(1e-15));
}

TEST_CASE("zero labels give the zero predictor") {
  const auto m = fit(make_data({0.1, 0.4, 0.9}, {0.0, 0.0, 0.0}), 0.1, KernelSpec::brownian_min());
  CHECK(m.coeffs().isZero(0.0));
  for (double x : grid101()) CHECK(m.predict(x) == 0.0);
  const auto smodel = SpectralModel::brownian(50);
  for (double c : spectral_coeffs(m, smodel)) CHECK(c == 0.0);
}

TEST_CASE("2x2 hand solve oracle") {
  const auto m = fit(make_data({0.25, 0.75}, {1.0, 0.0}), 0.5, KernelSpec::brownian_min());
  // (G + I) a = y with G = [[.25,.25],[.25,.75]]: [[1.25,.25],[.25,1.75]].
  const double a11 = 1.25, a12 = 0.25, a22 = 1.75;
  const double det = a11 * a22 - a12 * a12;
  CHECK(m.coeffs()(0) == doctest::Approx(a22 / det).epsilon(1e-14));
  CHECK(m.coeffs()(1) == doctest::Approx(-a12 / det).epsilon(1e-14));
}

TEST_CASE("fit errors") {
  const auto bm = KernelSpec::brownian_min();
  CHECK_THROWS_AS(fit(make_data({0.5}, {1.0}), 0.0, bm), ConfigError);
  CHECK_THROWS_AS(fit(make_data({0.5}, {1.0}), -1.0, bm), ConfigError);
  CHECK_THROWS_AS(fit(make_data({}, {}), 1.0, bm), InputError);
  CHECK_THROWS_AS(fit(make_data({1.5}, {1.0}), 1.0, bm), InputError);
  CHECK_THROWS_AS(fit(make_data({0.5}, {NAN}), 1.0, bm), NumericError);
}

TEST_CASE("coefficients solve the regularized system") {
  const auto d = iid_sample(300, 3);
  for (const auto& k : {KernelSpec::brownian_min(), KernelSpec::gaussian(0.2)}) {
    const double lambda = 1e-3;
    const auto m = fit(d, lambda, k);
    const auto g = gram_matrix(k, d.x);
    const Eigen::Map<const Eigen::VectorXd> y(d.y.data(), d.y.size());
    const Eigen::VectorXd res = (g + d.size() * lambda * Eigen::MatrixXd::Identity(d.size(), d.size())) * m.coeffs() - y;
    CHECK(res.cwiseAbs().maxCoeff() <= 1e-8 * y.cwiseAbs().maxCoeff());
    // Representer form.
    for (double x : {0.05, 0.5, 0.93}) {
      double s = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) s += m.coeffs()(i) * k(d.x[i], x);
      CHECK(m.predict(x) == doctest::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("sign flip linearity") {
  auto d = iid_sample(100, 4);
  const auto m = fit(d, 0.01, KernelSpec::brownian_min());
  for (auto& v : d.y) v = -v;
  const auto neg = fit(d, 0.01, KernelSpec::brownian_min());
  for (double x : grid101()) CHECK(neg.predict(x) == doctest::Approx(-m.predict(x)).epsilon(1e-12));
}

TEST_CASE("spectral_coeffs: direct formula and quadrature oracle") {
  const auto smodel = SpectralModel::brownian(500);
  const auto one = fit(make_data({0.5}, {1.0}), 1.0, KernelSpec::brownian_min());
  const auto d1 = spectral_coeffs(one, smodel);
  for (int k = 0; k < 500; k += 7)
    CHECK(d1[k] == doctest::Approx(smodel.eigenvalue(k) * (2.0 / 3.0) * std::sqrt(2.0) * std::sin((k + 0.5) * pi / 2))
                       .epsilon(1e-12)
                       .scale(1e-12));

  const auto d = iid_sample(200, 5);
  const auto m = fit(d, 0.01, KernelSpec::brownian_min());
  const auto c = spectral_coeffs(m, smodel);
  // Trapezoid on a 10^4 grid.
  constexpr int N = 10000;
  double q = 0.0;
  for (int i = 0; i <= N; ++i) {
    const double x = double(i) / N;
    q += (i == 0 || i == N ? 0.5 : 1.0) * m.predict(x) * smodel.eigenfunction(0, x);
  }
  q /= N;
  CHECK(std::abs(c[0] - q) <= 1e-6);

  CHECK_THROWS_AS(spectral_coeffs(fit(d, 0.01, KernelSpec::gaussian(0.2)), smodel), ConfigError);
}

TEST_CASE("exact Brownian expansion norms agree with a^T G a and quadrature") {
  const auto d = iid_sample(150, 6);
  const auto m = fit(d, 0.003, KernelSpec::brownian_min());
  KernelExpansion e{m.points(), std::vector<double>(m.coeffs().data(), m.coeffs().data() + m.size())};
  const auto [rho_sq, rkhs_sq] = brownian_expansion_norms(e);
  CHECK(rkhs_sq == doctest::Approx(m.rkhs_norm_sq()).epsilon(1e-10));
  constexpr int N = 200000;
  double q = 0.0;
  for (int i = 0; i < N; ++i) {
    const double v = m.predict((i + 0.5) / N);
    q += v * v;
  }
  CHECK(rho_sq == doctest::Approx(q / N).epsilon(1e-6));
}

TEST_CASE("error_norms limits") {
  const auto smodel = SpectralModel::brownian(500);
  const auto target = synthesize_target(smodel, 1.0, CoefficientRule::inverse(), 500);
  const auto d = iid_sample(100, 7);
  const auto big = fit(d, 1e6, KernelSpec::brownian_min());
  const auto e = error_norms(big, target, smodel);
  const auto nf = spectral_norms(target.c, smodel);
  CHECK(e.rho_err == doctest::Approx(nf.rho).epsilon(1e-3));
  CHECK(e.rkhs_err == doctest::Approx(nf.rkhs).epsilon(1e-3));

  TargetFunction zero = target;
  std::fill(zero.c.begin(), zero.c.end(), 0.0);
  auto z = d;
  std::fill(z.y.begin(), z.y.end(), 0.0);
  const auto ez = error_norms(fit(z, 0.01, KernelSpec::brownian_min()), zero, smodel);
  CHECK(ez.rho_err == 0.0);
  CHECK(ez.rkhs_err == 0.0);
}

TEST_CASE("Monte-Carlo oracle for the rho error") {
  const auto smodel = SpectralModel::brownian(500);
  const auto target = synthesize_target(smodel, 1.0, CoefficientRule::single_mode(1), 500);
  const auto d = generate(ProcessSpec::make(IidUniform{}, 0.2), target, smodel, 512, 8);
  const auto m = fit(d, lambda_rule(512, 1.0, 0.5), KernelSpec::brownian_min());
  const auto e = error_norms(m, target, smodel);
  Rng rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double s = 0.0;
  constexpr int N = 100000;
  for (int i = 0; i < N; ++i) {
    const double x = u(rng);
    const double diff = m.predict(x) - target_eval(target, smodel, x);
    s += diff * diff;
  }
  CHECK(e.rho_err == doctest::Approx(std::sqrt(s / N)).epsilon(0.02));
  CHECK(e.tail_rho >= 0.0);
  CHECK(e.tail_rho < 1e-3 * e.rho_err * e.rho_err + 1e-12);
}

TEST_CASE("operator form: one point") {
  const auto smodel = SpectralModel::brownian(500);
  const auto d = make_data({0.5}, {1.0});
  const auto u = fit_operator_truncated(d, 1.0, smodel);
  const auto m = fit(d, 1.0, KernelSpec::brownian_min());
  for (int i = 1; i <= 9; ++i) {
    const double x = i / 10.0;
    CHECK(std::abs(predict_operator(std::span<const double>(u.data(), u.size()), smodel, x) - m.predict(x)) <=
          5 * smodel.tail_bound());
  }
  CHECK(fit_operator_truncated(make_data({0.3, 0.6}, {0.0, 0.0}), 0.1, smodel).isZero(0.0));
  const auto huge = fit_operator_truncated(make_data({0.3, 0.6}, {1.0, -1.0}), 1e8, smodel);
  CHECK(huge.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("operator form equivalence on a 101-point grid") {
  const auto smodel = SpectralModel::brownian(500);
  for (std::size_t n : {16u, 64u, 256u}) {
    const auto d = iid_sample(n, 20 + n);
    const double lambda = lambda_rule(n, 1.0, 0.5);
    const auto m = fit(d, lambda, KernelSpec::brownian_min());
    const auto u = fit_operator_truncated(d, lambda, smodel);
    double worst = 0.0;
    for (double x : grid101())
      worst = std::max(worst, std::abs(m.predict(x) - predict_operator(std::span<const double>(u.data(), u.size()), smodel, x)));
    CAPTURE(n);
    CHECK(worst <= 1e-3);
  }
}

TEST_CASE("interpolation limit and shrinkage monotonicity") {
  std::vector<double> x(20), y(20);
  for (int i = 0; i < 20; ++i) {
    x[i] = (i + 0.5) / 20.0;
    y[i] = std::sin(5.0 * x[i]);
  }
  const auto d = make_data(x, y);
  double prev_res = std::numeric_limits<double>::infinity();
  double prev_norm = 0.0;
  for (double lambda : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const auto m = fit(d, lambda, KernelSpec::brownian_min());
    double res = 0.0;
    for (int i = 0; i < 20; ++i) res = std::max(res, std::abs(m.predict(x[i]) - y[i]));
    CHECK(res < prev_res);
    const double nrm = std::sqrt(m.rkhs_norm_sq());
    CHECK(nrm >= prev_norm);
    prev_res = res;
    prev_norm = nrm;
  }
  CHECK(prev_res < 1e-3);
}

TEST_CASE("permuting samples leaves the predictor unchanged") {
  auto d = iid_sample(120, 9);
  const auto m = fit(d, 0.01, KernelSpec::brownian_min());
  std::vector<std::size_t> p(d.size());
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), std::mt19937_64(1));
  Dataset q = d;
  for (std::size_t i = 0; i < p.size(); ++i) {
    q.x[i] = d.x[p[i]];
    q.y[i] = d.y[p[i]];
  }
  const auto mq = fit(q, 0.01, KernelSpec::brownian_min());
  for (double x : grid101()) CHECK(std::abs(m.predict(x) - mq.predict(x)) <= 1e-10);
}

TEST_CASE("model json round trip") {
  const auto d = iid_sample(30, 10);
  for (const auto& k : {KernelSpec::brownian_min(), KernelSpec::gaussian(0.3)}) {
    const auto m = fit(d, 0.02, k);
    const auto back = krr_model_from_json(nlohmann::json::parse(to_json(m).dump()));
    CHECK(back.points() == m.points());
    CHECK(back.coeffs() == m.coeffs());
    CHECK(back.lambda() == m.lambda());
    CHECK(back.kernel().kind() == k.kind());
    for (double x : {0.1, 0.7}) CHECK(back.predict(x) == m.predict(x));
  }
}
