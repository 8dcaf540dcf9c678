#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "mixkrr/krr.hpp"
#include "mixkrr/sequencegen.hpp"

namespace mixkrr {

enum class Scenario { Whole, Tandem, Parallel };
std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& s);

/// Contiguous, order-preserving blocks whose sizes differ by at most one;
/// the remainder goes to the leading blocks. Throws InputError unless 1 <= m <= n.
std::vector<Dataset> partition_tandem(const Dataset& data, int m);

/// Independent streams, one per (size, seed). Throws ConfigError on
/// duplicate seeds or mismatched list lengths.
std::vector<Dataset> generate_parallel(const ProcessSpec& spec, const TargetFunction& target,
                                       const SpectralModel& smodel, std::span<const std::size_t> sizes,
                                       std::span<const std::uint64_t> seeds);

/// One message on the aggregation channel: a machine's weight and its scalar answer.
struct AggregationMessage {
  int machine = 0;
  double weight = 0.0;
  double value = 0.0;
};

/// Records everything that crosses the machine -> aggregator boundary.
/// The message type carries scalars only, so support points cannot leak.
struct AggregationAudit {
  std::vector<AggregationMessage> messages;
};

/// A local machine holds its fitted model privately and answers point queries.
class LocalMachine {
 public:
  LocalMachine(int index, KrrModel model) : index_(index), model_(std::move(model)) {}

  int index() const noexcept { return index_; }
  std::size_t sample_count() const noexcept { return model_.size(); }
  double answer(double x) const { return model_.predict(x); }

  /// Diagnostic access for ground-truth evaluation and model dumps; not used
  /// on the prediction path.
  const KrrModel& model_for_diagnostics() const noexcept { return model_; }

 private:
  int index_;
  KrrModel model_;
};

/// Weighted average of local estimators, weights |D_j| / |D|.
class DkrrEnsemble {
 public:
  DkrrEnsemble(std::vector<LocalMachine> machines, Scenario scenario);

  const std::vector<LocalMachine>& machines() const noexcept { return machines_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  Scenario scenario() const noexcept { return scenario_; }
  double lambda() const noexcept { return machines_.front().model_for_diagnostics().lambda(); }
  std::size_t total_size() const noexcept { return total_; }

  /// Broadcasts x, collects one scalar per machine, returns the weighted mean.
  double predict(double x, AggregationAudit* audit = nullptr) const;

 private:
  std::vector<LocalMachine> machines_;
  std::vector<double> weights_;
  Scenario scenario_;
  std::size_t total_ = 0;
};

/// Fits every subset with the shared lambda (in parallel when jobs > 1).
/// Local failures are rethrown with the machine index attached.
DkrrEnsemble fit_distributed(const std::vector<Dataset>& subsets, double lambda, const KernelSpec& kernel,
                             Scenario scenario = Scenario::Tandem, unsigned jobs = 1);

double predict(const DkrrEnsemble& ensemble, double x, AggregationAudit* audit = nullptr);

/// Weighted sum of local spectral coefficients.
std::vector<double> ensemble_spectral_coeffs(const DkrrEnsemble& ensemble, const SpectralModel& smodel);

ErrorNorms ensemble_error_norms(const DkrrEnsemble& ensemble, const TargetFunction& target,
                                const SpectralModel& smodel);

/// lambda = n^{-1/(2r+s)}.
double lambda_rule(std::size_t n_total, double r, double s);

/// floor(n^{(2r+s-2)/(4r+2s)}), at least 1. Throws ConfigError when 2r + s < 2.
int max_machines(std::size_t n_total, double r, double s);

nlohmann::json to_json(const DkrrEnsemble& ensemble);

}  // namespace mixkrr
