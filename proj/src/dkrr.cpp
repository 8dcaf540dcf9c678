#include "mixkrr/dkrr.hpp"

#include <cmath>
#include <optional>
#include <set>

#include "mixkrr/error.hpp"
#include "mixkrr/random.hpp"

namespace mixkrr {

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::Whole: return "whole";
    case Scenario::Tandem: return "tandem";
    case Scenario::Parallel: return "parallel";
  }
  return "whole";
}

Scenario parse_scenario(const std::string& s) {
  if (s == "whole") return Scenario::Whole;
  if (s == "tandem") return Scenario::Tandem;
  if (s == "parallel") return Scenario::Parallel;
  throw InputError("unknown scenario '" + s + "' (expected tandem or parallel)");
}

std::vector<Dataset> partition_tandem(const Dataset& data, int m) {
  const std::size_t n = data.size();
  if (m < 1 || static_cast<std::size_t>(m) > n)
    throw InputError("tandem split needs 1 <= m <= n (m = " + std::to_string(m) + ", n = " + std::to_string(n) + ")");
  const std::size_t base = n / static_cast<std::size_t>(m);
  const std::size_t extra = n % static_cast<std::size_t>(m);
  std::vector<Dataset> blocks;
  blocks.reserve(static_cast<std::size_t>(m));
  std::size_t start = 0;
  for (int j = 0; j < m; ++j) {
    const std::size_t len = base + (static_cast<std::size_t>(j) < extra ? 1 : 0);
    Dataset b;
    b.spec = data.spec;
    b.seed = data.seed;
    b.clip = data.clip;
    b.origin = m == 1 ? data.origin : Origin{Origin::Kind::TandemBlock, j + 1, m};
    const auto first = static_cast<std::ptrdiff_t>(start);
    const auto last = static_cast<std::ptrdiff_t>(start + len);
    b.x.assign(data.x.begin() + first, data.x.begin() + last);
    b.y.assign(data.y.begin() + first, data.y.begin() + last);
    blocks.push_back(std::move(b));
    start += len;
  }
  return blocks;
}

std::vector<Dataset> generate_parallel(const ProcessSpec& spec, const TargetFunction& target,
                                       const SpectralModel& smodel, std::span<const std::size_t> sizes,
                                       std::span<const std::uint64_t> seeds) {
  if (sizes.size() != seeds.size()) throw ConfigError("parallel streams need one seed per size");
  if (sizes.empty()) throw ConfigError("parallel scenario needs at least one stream");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("parallel streams need distinct seeds (independence)");
  const int m = static_cast<int>(sizes.size());
  std::vector<Dataset> streams;
  streams.reserve(sizes.size());
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    auto d = generate(spec, target, smodel, sizes[j], seeds[j]);
    if (m > 1) d.origin = Origin{Origin::Kind::ParallelStream, static_cast<int>(j) + 1, m};
    streams.push_back(std::move(d));
  }
  return streams;
}

DkrrEnsemble::DkrrEnsemble(std::vector<LocalMachine> machines, Scenario scenario)
    : machines_(std::move(machines)), scenario_(scenario) {
  if (machines_.empty()) throw InputError("ensemble needs at least one machine");
  for (const auto& mc : machines_) {
    if (mc.sample_count() == 0) throw InputError("ensemble machine without samples");
    total_ += mc.sample_count();
  }
  const double lam = machines_.front().model_for_diagnostics().lambda();
  for (const auto& mc : machines_) {
    if (mc.model_for_diagnostics().lambda() != lam) throw InputError("all machines must share lambda");
    weights_.push_back(static_cast<double>(mc.sample_count()) / static_cast<double>(total_));
  }
}

double DkrrEnsemble::predict(double x, AggregationAudit* audit) const {
  double s = 0.0;
  for (std::size_t j = 0; j < machines_.size(); ++j) {
    const AggregationMessage msg{machines_[j].index(), weights_[j], machines_[j].answer(x)};
    if (audit) audit->messages.push_back(msg);
    s += msg.weight * msg.value;
  }
  return s;
}

DkrrEnsemble fit_distributed(const std::vector<Dataset>& subsets, double lambda, const KernelSpec& kernel,
                             Scenario scenario, unsigned jobs) {
  if (subsets.empty()) throw InputError("fit_distributed needs at least one subset");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  std::vector<std::optional<KrrModel>> local(subsets.size());
  parallel_for(subsets.size(), jobs, [&](std::size_t j) {
    try {
      if (subsets[j].size() == 0) throw InputError("subset is empty");
      local[j].emplace(fit(subsets[j], lambda, kernel));
    } catch (const NumericError& e) {
      throw NumericError("machine " + std::to_string(j + 1) + ": " + e.what(), e.condition());
    } catch (const ConfigError& e) {
      throw ConfigError("machine " + std::to_string(j + 1) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("machine " + std::to_string(j + 1) + ": " + e.what());
    }
  });
  std::vector<LocalMachine> machines;
  machines.reserve(subsets.size());
  for (std::size_t j = 0; j < local.size(); ++j) machines.emplace_back(static_cast<int>(j) + 1, std::move(*local[j]));
  return DkrrEnsemble(std::move(machines), scenario);
}

double predict(const DkrrEnsemble& ensemble, double x, AggregationAudit* audit) {
  return ensemble.predict(x, audit);
}

std::vector<double> ensemble_spectral_coeffs(const DkrrEnsemble& ensemble, const SpectralModel& smodel) {
  std::vector<double> d(static_cast<std::size_t>(smodel.k_max()), 0.0);
  for (std::size_t j = 0; j < ensemble.machines().size(); ++j) {
    const auto local = spectral_coeffs(ensemble.machines()[j].model_for_diagnostics(), smodel);
    for (std::size_t k = 0; k < d.size(); ++k) d[k] += ensemble.weights()[j] * local[k];
  }
  return d;
}

ErrorNorms ensemble_error_norms(const DkrrEnsemble& ensemble, const TargetFunction& target,
                                const SpectralModel& smodel) {
  if (ensemble.machines().size() == 1) {
    return error_norms(ensemble.machines().front().model_for_diagnostics(), target, smodel);
  }
  const auto d = ensemble_spectral_coeffs(ensemble, smodel);
  const auto& kernel = ensemble.machines().front().model_for_diagnostics().kernel();
  double rho_sq = 0.0, rkhs_sq = 0.0;
  if (kernel.kind() == KernelSpec::Kind::BrownianMin) {
    KernelExpansion combined;
    combined.points.reserve(ensemble.total_size());
    combined.coeffs.reserve(ensemble.total_size());
    for (std::size_t j = 0; j < ensemble.machines().size(); ++j) {
      const auto& mdl = ensemble.machines()[j].model_for_diagnostics();
      for (std::size_t i = 0; i < mdl.size(); ++i) {
        combined.points.push_back(mdl.points()[i]);
        combined.coeffs.push_back(ensemble.weights()[j] * mdl.coeffs()[static_cast<Eigen::Index>(i)]);
      }
    }
    std::tie(rho_sq, rkhs_sq) = brownian_expansion_norms(combined);
  } else {
    for (std::size_t k = 0; k < d.size(); ++k) {
      rho_sq += d[k] * d[k];
      rkhs_sq += d[k] * d[k] / smodel.eigenvalues()[k];
    }
  }
  return error_norms_from_coeffs(d, rho_sq, rkhs_sq, target, smodel);
}

double lambda_rule(std::size_t n_total, double r, double s) {
  if (n_total < 1) throw InputError("lambda rule needs n >= 1");
  if (!(2.0 * r + s > 0.0)) throw InputError("lambda rule needs 2r + s > 0");
  return std::pow(static_cast<double>(n_total), -1.0 / (2.0 * r + s));
}

int max_machines(std::size_t n_total, double r, double s) {
  if (2.0 * r + s < 2.0)
    throw ConfigError("machine budget requires 2r + s >= 2 (got 2r + s = " + std::to_string(2.0 * r + s) + ")");
  if (n_total < 1) throw InputError("machine budget needs n >= 1");
  const double exponent = (2.0 * r + s - 2.0) / (4.0 * r + 2.0 * s);
  const double cap = std::floor(std::pow(static_cast<double>(n_total), exponent) + 1e-12);
  return std::max(1, static_cast<int>(cap));
}

nlohmann::json to_json(const DkrrEnsemble& ensemble) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& mc : ensemble.machines()) models.push_back(to_json(mc.model_for_diagnostics()));
  return {{"scenario", to_string(ensemble.scenario())},
          {"lambda", ensemble.lambda()},
          {"weights", ensemble.weights()},
          {"models", models}};
}

}  // namespace mixkrr
