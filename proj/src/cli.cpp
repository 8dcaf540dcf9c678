#include "mixkrr/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixkrr/dkrr.hpp"
#include "mixkrr/error.hpp"
#include "mixkrr/harness.hpp"
#include "mixkrr/io.hpp"
#include "mixkrr/kernelspec.hpp"
#include "mixkrr/krr.hpp"
#include "mixkrr/sequencegen.hpp"
#include "mixkrr/spectraldiag.hpp"

namespace mixkrr::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string out_dir = ".";
  bool json = false;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct ProcessFlags {
  std::string process = "iid";
  double rho = 0.5;
  std::string beta = "2";
  int p = 1;
  int q = 1;
  double contraction = 0.5;
  double exogenous_weight = 0.5;
  std::vector<double> ar{0.5};
  std::vector<double> ma;
  double xi0 = 0.5;
  double eta0 = 0.5;
  double gamma0 = 0.0;
  double noise = 0.2;

  ProcessSpec spec() const {
    nlohmann::json j{{"process", process}, {"noise_sigma", noise}};
    if (process == "ar1") j["rho"] = rho;
    if (process == "renewal") j["beta"] = beta;
    if (process == "arx") {
      j["p"] = p;
      j["q"] = q;
      j["contraction"] = contraction;
      j["exogenous_weight"] = exogenous_weight;
    }
    if (process == "arma") {
      j["ar"] = ar;
      j["ma"] = ma;
    }
    if (process == "tobit") {
      j["xi0"] = xi0;
      j["eta0"] = eta0;
      j["gamma0"] = gamma0;
    }
    try {
      return process_from_json(j);
    } catch (const std::invalid_argument&) {
      throw InputError("renewal --beta must be a number or 'inf'");
    }
  }
};

struct ModelFlags {
  int k_max = 500;
  double r = 1.0;
  double s = 0.5;
  std::string h_rule = "inverse";
};

void add_process_flags(CLI::App* app, ProcessFlags& f) {
  app->add_option("--process", f.process, "Process: iid, ar1, renewal, arx, arma, tobit")
      ->check(CLI::IsMember({"iid", "ar1", "renewal", "arx", "arma", "tobit"}));
  app->add_option("--rho", f.rho, "ar1 latent autocorrelation");
  app->add_option("--beta", f.beta, "renewal Pareto tail index (> 1, or 'inf')");
  app->add_option("--p", f.p, "arx autoregressive order");
  app->add_option("--q", f.q, "arx exogenous order");
  app->add_option("--contraction", f.contraction, "arx contraction factor (< 1)");
  app->add_option("--exo-weight", f.exogenous_weight, "arx exogenous weight");
  app->add_option("--ar", f.ar, "arma autoregressive coefficients")->delimiter(',');
  app->add_option("--ma", f.ma, "arma moving-average coefficients")->delimiter(',');
  app->add_option("--xi0", f.xi0, "tobit exogenous coefficient");
  app->add_option("--eta0", f.eta0, "tobit autoregressive coefficient");
  app->add_option("--gamma0", f.gamma0, "tobit intercept");
  app->add_option("--noise", f.noise, "noise standard deviation (clipped at 3 sigma)");
}

void add_model_flags(CLI::App* app, ModelFlags& f) {
  app->add_option("--kmax", f.k_max, "spectral truncation");
  app->add_option("--r", f.r, "source exponent in [1/2, 1]");
  app->add_option("--s", f.s, "capacity exponent in (0, 1]");
  app->add_option("--h-rule", f.h_rule, "target coefficient rule: inverse, single, single:<k>");
}

/// Resolves an output name under --out; rejects anything that escapes it.
fs::path output_path(const Common& c, const std::string& name) {
  const fs::path rel(name);
  if (rel.is_absolute()) throw InputError("output name must be relative to --out: " + name);
  for (const auto& part : rel)
    if (part == "..") throw InputError("output name may not leave --out: " + name);
  return fs::path(c.out_dir) / rel;
}

void require_file(const std::string& path) {
  if (!fs::exists(path)) throw InputError("input file not found: " + path);
}

double resolve_lambda(const std::string& flag, std::size_t n, double r, double s) {
  if (flag == "auto") return lambda_rule(n, r, s);
  const auto v = parse_double(flag);
  if (!v) throw InputError("--lambda must be 'auto' or a number, got '" + flag + "'");
  return *v;
}

KernelSpec make_kernel(const std::string& kind, double bandwidth) {
  if (kind == "brownian") return KernelSpec::brownian_min();
  if (kind == "gaussian") return KernelSpec::gaussian(bandwidth);
  throw InputError("unknown kernel '" + kind + "' (expected brownian or gaussian)");
}

struct GroundTruth {
  SpectralModel smodel;
  TargetFunction target;
};

/// Ground truth recorded in a dataset sidecar, if any.
std::optional<GroundTruth> ground_truth(const DatasetMeta& meta) {
  if (!meta.model) return std::nullopt;
  const auto& m = *meta.model;
  if (m.value("kernel", std::string()) != "brownian" || !m.contains("target")) return std::nullopt;
  auto smodel = SpectralModel::brownian(m.at("K_max").get<int>());
  const auto& t = m.at("target");
  auto target = synthesize_target(smodel, t.at("r").get<double>(),
                                  CoefficientRule::parse(t.at("h_rule").get<std::string>()), smodel.k_max());
  return GroundTruth{std::move(smodel), std::move(target)};
}

void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  const auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c)
      out << (c ? "  " : "") << std::setw(static_cast<int>(width[c])) << r[c];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

std::string version_string() {
  return std::string("mixkrr ") + MIXKRR_VERSION + " (" + __DATE__ + ", " +
#if defined(__clang__)
         "clang " + __clang_version__ +
#elif defined(__GNUC__)
         "gcc " + __VERSION__ +
#else
         "unknown compiler" +
#endif
         ")";
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distributed kernel ridge regression on strongly mixing sequences", "mixkrr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());
  Common common;
  const auto add_common = [&](CLI::App* sub, bool randomness) {
    sub->add_option("--out", common.out_dir, "output directory; every written path is relative to it");
    sub->add_flag("--json", common.json, "print JSON instead of a table");
    if (randomness) sub->add_option("--seed", common.seed, "random seed");
  };

  // gen
  ProcessFlags gen_proc;
  ModelFlags gen_model;
  std::size_t gen_n = 0;
  std::string gen_name = "data";
  auto* gen = app.add_subcommand("gen", "Generate a dataset (CSV + JSON sidecar)");
  add_common(gen, true);
  add_process_flags(gen, gen_proc);
  add_model_flags(gen, gen_model);
  gen->add_option("--n", gen_n, "sample size")->required();
  gen->add_option("--name", gen_name, "file stem under --out");

  // fit
  std::string fit_data, fit_lambda = "auto", fit_kernel = "brownian", fit_name = "model.json";
  double fit_bw = 0.2, fit_r = 1.0, fit_s = 0.5;
  auto* fitc = app.add_subcommand("fit", "Fit kernel ridge regression to a dataset");
  add_common(fitc, false);
  fitc->add_option("--data", fit_data, "dataset CSV")->required();
  fitc->add_option("--lambda", fit_lambda, "'auto' (n^{-1/(2r+s)}) or a positive number");
  fitc->add_option("--kernel", fit_kernel, "brownian or gaussian");
  fitc->add_option("--bandwidth", fit_bw, "gaussian bandwidth");
  fitc->add_option("--r", fit_r, "source exponent for the lambda rule");
  fitc->add_option("--s", fit_s, "capacity exponent for the lambda rule");
  fitc->add_option("--name", fit_name, "model dump name under --out");

  // predict
  std::string pred_model;
  std::vector<double> pred_x;
  int pred_grid = 0;
  auto* pred = app.add_subcommand("predict", "Evaluate a fitted model");
  add_common(pred, false);
  pred->add_option("--model", pred_model, "model JSON from 'fit'")->required();
  pred->add_option("--x", pred_x, "query points")->delimiter(',');
  pred->add_option("--grid", pred_grid, "evaluate on an evenly spaced grid of this many points on [0,1]");

  // dkrr
  std::string dk_data, dk_scenario = "tandem", dk_lambda = "auto", dk_name = "ensemble.json";
  int dk_machines = 1;
  std::size_t dk_n = 0;
  ProcessFlags dk_proc;
  ModelFlags dk_model;
  auto* dk = app.add_subcommand("dkrr", "Fit the distributed (divide-and-conquer) estimator");
  add_common(dk, true);
  add_process_flags(dk, dk_proc);
  add_model_flags(dk, dk_model);
  dk->add_option("--data", dk_data, "dataset CSV (tandem scenario)");
  dk->add_option("--machines", dk_machines, "number of local machines")->required();
  dk->add_option("--scenario", dk_scenario, "tandem or parallel")->check(CLI::IsMember({"tandem", "parallel"}));
  dk->add_option("--lambda", dk_lambda, "'auto' or a positive number");
  dk->add_option("--n", dk_n, "total sample size for generated parallel streams");
  dk->add_option("--name", dk_name, "ensemble dump name under --out");

  // effdim
  std::string ed_kernel = "brownian";
  std::vector<double> ed_lambda;
  int ed_kmax = 500;
  bool ed_fit = false;
  std::string ed_plot;
  auto* ed = app.add_subcommand("effdim", "Effective dimension N(lambda) of a spectral model");
  add_common(ed, false);
  ed->add_option("--kernel", ed_kernel, "brownian")->check(CLI::IsMember({"brownian"}));
  ed->add_option("--lambda", ed_lambda, "one or more lambda values")->required()->delimiter(',');
  ed->add_option("--kmax", ed_kmax, "spectral truncation");
  ed->add_flag("--fit-capacity", ed_fit, "fit N(lambda) <= C0 lambda^-s over the given lambdas");
  ed->add_option("--plot", ed_plot, "write effdim-curve plot data to this name under --out");

  // diagnose
  ProcessFlags dg_proc;
  ModelFlags dg_model;
  std::size_t dg_n = 1000;
  std::string dg_lambda = "auto", dg_name = "diagnose.json";
  double dg_delta = 1.0;
  int dg_trials = 200, dg_kdiag = 200;
  bool dg_no_control = false;
  auto* dg = app.add_subcommand("diagnose", "Monte-Carlo operator deviation moments and lemma bound checks");
  add_common(dg, true);
  add_process_flags(dg, dg_proc);
  add_model_flags(dg, dg_model);
  dg->add_option("--n", dg_n, "sample size");
  dg->add_option("--lambda", dg_lambda, "'auto' or a positive number");
  dg->add_option("--delta", dg_delta, "free exponent parameter of the bounds");
  dg->add_option("--trials", dg_trials, "Monte-Carlo trials (>= 50)");
  dg->add_option("--kmax-diag", dg_kdiag, "basis size for operator matrices");
  dg->add_option("--jobs", common.jobs, "worker threads");
  dg->add_flag("--no-control", dg_no_control, "skip the iid control run");
  dg->add_option("--name", dg_name, "report name under --out");

  // alpha
  ProcessFlags al_proc;
  std::vector<long> al_lags{1, 2, 4, 8, 16};
  int al_trials = 10000;
  std::string al_plot;
  auto* al = app.add_subcommand("alpha", "Empirical alpha-mixing coefficients (dyadic-event lower bound)");
  add_common(al, true);
  add_process_flags(al, al_proc);
  al->add_option("--lags", al_lags, "lags j >= 1")->delimiter(',');
  al->add_option("--trials", al_trials, "Monte-Carlo trials (>= 1000)");
  al->add_option("--plot", al_plot, "write alpha-decay plot data to this name under --out");

  // sweep
  std::string sw_config, sw_kind = "krr";
  auto* sw = app.add_subcommand("sweep", "Run a KRR or DKRR sweep from a JSON config");
  add_common(sw, false);
  sw->add_option("--config", sw_config, "experiment config (JSON with process/model/sweep/output sections)")
      ->required();
  sw->add_option("--kind", sw_kind, "krr or dkrr")->check(CLI::IsMember({"krr", "dkrr"}));
  sw->add_option("--jobs", common.jobs, "worker threads");

  // rate
  std::string rt_in, rt_norm = "rho", rt_save;
  double rt_r = 1.0, rt_s = 0.5, rt_tol = 0.1;
  int rt_m = 0;
  bool rt_log = false;
  auto* rt = app.add_subcommand("rate", "Fit a learning-rate exponent to a sweep table");
  add_common(rt, false);
  rt->add_option("--in", rt_in, "sweep CSV")->required();
  rt->add_option("--norm", rt_norm, "rho or rkhs")->check(CLI::IsMember({"rho", "rkhs"}));
  rt->add_option("--r", rt_r, "source exponent");
  rt->add_option("--s", rt_s, "capacity exponent");
  rt->add_option("--tolerance", rt_tol, "allowed |slope - theory|");
  rt->add_option("--m", rt_m, "restrict to this machine count (0 = all rows)");
  rt->add_flag("--log-average", rt_log, "average log errors over trials instead of taking log of the mean");
  rt->add_option("--save", rt_save, "write the fit as CSV to this name under --out");

  // report
  std::string rp_in, rp_kind = "rate-curve", rp_krr, rp_name;
  auto* rp = app.add_subcommand("report", "Emit plot data / DKRR-vs-KRR ratios from sweep tables");
  add_common(rp, false);
  rp->add_option("--in", rp_in, "sweep CSV")->required();
  rp->add_option("--kind", rp_kind, "rate-curve or dkrr-ratio");
  rp->add_option("--krr", rp_krr, "KRR sweep CSV; adds a bootstrap ratio table (ratio.csv)");
  rp->add_option("--name", rp_name, "plot data name under --out (default plot_<kind>.json)");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kExitOk;
    err << app.help();
    return kExitInput;
  }

  try {
    if (*gen) {
      const auto spec = gen_proc.spec();
      const auto smodel = SpectralModel::brownian(gen_model.k_max);
      const auto target = synthesize_target(smodel, gen_model.r, CoefficientRule::parse(gen_model.h_rule), gen_model.k_max);
      if (gen_n < 1) throw InputError("--n must be >= 1");
      const auto data = generate(spec, target, smodel, gen_n, common.seed);
      const auto path = output_path(common, gen_name + ".csv");
      save_dataset(data, path, to_json(smodel, &target));
      if (common.json)
        out << sidecar_json(data, std::nullopt).dump(2) << '\n';
      else
        out << "wrote " << path.string() << " (" << data.size() << " samples, process " << spec.name()
            << ", |y| <= " << fmt(data.clip) << ")\n";
      return kExitOk;
    }

    if (*fitc) {
      require_file(fit_data);
      DatasetMeta meta;
      const auto data = load_dataset(fit_data, &meta);
      if (data.size() == 0) throw InputError("dataset is empty: " + fit_data);
      const double lambda = resolve_lambda(fit_lambda, data.size(), fit_r, fit_s);
      const auto model = fit(data, lambda, make_kernel(fit_kernel, fit_bw));
      const auto path = output_path(common, fit_name);
      write_text_file(path, to_json(model).dump(2) + "\n");
      nlohmann::json summary{{"n", data.size()}, {"lambda", lambda}, {"kernel", fit_kernel}, {"model", path.string()}};
      if (const auto gt = ground_truth(meta); gt && model.kernel().matches(gt->smodel)) {
        const auto e = error_norms(model, gt->target, gt->smodel);
        summary["rho_err"] = e.rho_err;
        summary["rkhs_err"] = e.rkhs_err;
        summary["tail_rho"] = e.tail_rho;
      }
      if (common.json) {
        out << summary.dump(2) << '\n';
      } else {
        out << "fitted n=" << data.size() << " lambda=" << fmt(lambda) << " kernel=" << fit_kernel << " -> "
            << path.string() << '\n';
        if (summary.contains("rho_err"))
          out << "rho_err=" << fmt(summary["rho_err"].get<double>())
              << " rkhs_err=" << fmt(summary["rkhs_err"].get<double>()) << '\n';
      }
      return kExitOk;
    }

    if (*pred) {
      require_file(pred_model);
      KrrModel model = [&] {
        try {
          return krr_model_from_json(read_json_file(pred_model));
        } catch (const nlohmann::json::exception& e) {
          throw InputError("malformed model file " + pred_model + ": " + e.what());
        }
      }();
      std::vector<double> xs = pred_x;
      if (pred_grid > 0)
        for (int i = 0; i < pred_grid; ++i) xs.push_back(pred_grid == 1 ? 0.0 : static_cast<double>(i) / (pred_grid - 1));
      if (xs.empty()) throw InputError("predict needs --x or --grid");
      const auto ys = model.predict(xs);
      if (common.json) {
        out << nlohmann::json{{"x", xs}, {"y", ys}}.dump() << '\n';
      } else {
        out << "x,y\n";
        for (std::size_t i = 0; i < xs.size(); ++i) out << format_double(xs[i]) << ',' << format_double(ys[i]) << '\n';
      }
      return kExitOk;
    }

    if (*dk) {
      const auto scenario = parse_scenario(dk_scenario);
      std::vector<Dataset> subsets;
      std::optional<GroundTruth> gt;
      std::size_t n_total = 0;
      if (scenario == Scenario::Tandem) {
        if (dk_data.empty()) throw InputError("tandem scenario needs --data");
        require_file(dk_data);
        DatasetMeta meta;
        const auto data = load_dataset(dk_data, &meta);
        gt = ground_truth(meta);
        n_total = data.size();
        subsets = partition_tandem(data, dk_machines);
      } else {
        if (dk_n < 1) throw InputError("parallel scenario generates streams; give --n (total size)");
        if (dk_machines < 1 || static_cast<std::size_t>(dk_machines) > dk_n)
          throw InputError("--machines must lie in [1, n]");
        auto smodel = SpectralModel::brownian(dk_model.k_max);
        auto target = synthesize_target(smodel, dk_model.r, CoefficientRule::parse(dk_model.h_rule), dk_model.k_max);
        std::vector<std::size_t> sizes;
        std::vector<std::uint64_t> seeds;
        const auto m = static_cast<std::size_t>(dk_machines);
        for (std::size_t j = 0; j < m; ++j) {
          sizes.push_back(dk_n / m + (j < dk_n % m ? 1 : 0));
          seeds.push_back(stream_seed(common.seed, dk_machines, static_cast<int>(j)));
        }
        subsets = generate_parallel(dk_proc.spec(), target, smodel, sizes, seeds);
        gt = GroundTruth{std::move(smodel), std::move(target)};
        n_total = dk_n;
      }
      const double lambda = resolve_lambda(dk_lambda, n_total, dk_model.r, dk_model.s);
      const auto ensemble = fit_distributed(subsets, lambda, KernelSpec::brownian_min(), scenario);
      const auto path = output_path(common, dk_name);
      write_text_file(path, to_json(ensemble).dump(2) + "\n");
      nlohmann::json summary{{"n", n_total},       {"machines", dk_machines}, {"scenario", dk_scenario},
                             {"lambda", lambda},   {"weights", ensemble.weights()}, {"ensemble", path.string()}};
      try {
        const int cap = max_machines(n_total, dk_model.r, dk_model.s);
        summary["max_machines"] = cap;
        summary["within_budget"] = dk_machines <= cap;
      } catch (const ConfigError&) {
        summary["within_budget"] = dk_machines == 1;
      }
      if (gt) {
        const auto e = ensemble_error_norms(ensemble, gt->target, gt->smodel);
        summary["rho_err"] = e.rho_err;
        summary["rkhs_err"] = e.rkhs_err;
      }
      if (common.json) {
        out << summary.dump(2) << '\n';
      } else {
        out << "dkrr " << dk_scenario << " n=" << n_total << " m=" << dk_machines << " lambda=" << fmt(lambda)
            << " within_budget=" << (summary["within_budget"].get<bool>() ? "yes" : "no") << " -> " << path.string()
            << '\n';
        if (gt)
          out << "rho_err=" << fmt(summary["rho_err"].get<double>())
              << " rkhs_err=" << fmt(summary["rkhs_err"].get<double>()) << '\n';
      }
      return kExitOk;
    }

    if (*ed) {
      const auto smodel = SpectralModel::brownian(ed_kmax);
      nlohmann::json j = nlohmann::json::array();
      Series series{"N(lambda)", {}, {}, {}};
      for (double l : ed_lambda) {
        const double nl = effective_dimension(smodel, l);
        j.push_back({{"lambda", l}, {"N", nl}});
        series.x.push_back(l);
        series.y.push_back(nl);
      }
      nlohmann::json doc{{"kernel", ed_kernel}, {"values", j}};
      if (ed_fit) {
        const auto cf = fit_capacity_exponent(smodel, ed_lambda);
        doc["s_hat"] = cf.s_hat;
        doc["C0_hat"] = cf.c0_hat;
      }
      if (!ed_plot.empty()) emit_plot_data({series}, PlotKind::EffdimCurve, output_path(common, ed_plot));
      if (common.json) {
        out << doc.dump(2) << '\n';
      } else if (ed_lambda.size() == 1 && !ed_fit) {
        out << std::fixed << std::setprecision(6) << series.y.front() << '\n';
      } else {
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < series.x.size(); ++i) rows.push_back({fmt(series.x[i]), fmt(series.y[i], 8)});
        print_table(out, {"lambda", "N(lambda)"}, rows);
        if (ed_fit) out << "s_hat=" << fmt(doc["s_hat"].get<double>()) << " C0_hat=" << fmt(doc["C0_hat"].get<double>()) << '\n';
      }
      return kExitOk;
    }

    if (*dg) {
      const auto spec = dg_proc.spec();
      const auto smodel = SpectralModel::brownian(dg_model.k_max);
      const auto target = synthesize_target(smodel, dg_model.r, CoefficientRule::parse(dg_model.h_rule), dg_model.k_max);
      const double lambda = resolve_lambda(dg_lambda, dg_n, dg_model.r, dg_model.s);
      DeviationOptions opts{dg_kdiag, common.jobs};
      const auto run = [&](const ProcessSpec& ps) {
        const auto rep = operator_deviation_moments(ps, target, smodel, dg_n, lambda, dg_delta, dg_trials, common.seed, opts);
        return std::make_pair(rep, lemma_bound_check(rep, ps.mixing, KernelSpec::brownian_min().kappa()));
      };
      nlohmann::json doc;
      std::vector<std::pair<std::string, std::pair<DeviationReport, LemmaCheckResult>>> runs;
      runs.emplace_back(spec.name(), run(spec));
      if (!dg_no_control && spec.name() != "iid")
        runs.emplace_back("iid-control", run(ProcessSpec::make(IidUniform{}, spec.noise_sigma)));
      for (const auto& [label, res] : runs) {
        doc[label] = {{"report", to_json(res.first)}, {"lemmas", to_json(res.second)}};
      }
      doc[spec.name()]["mixing"] = to_json(spec.mixing);
      write_text_file(output_path(common, dg_name), doc.dump(2) + "\n");
      if (common.json) {
        out << doc.dump(2) << '\n';
      } else {
        for (const auto& [label, res] : runs) {
          out << label << ": n=" << dg_n << " lambda=" << fmt(lambda) << " N(lambda)=" << fmt(res.first.effective_dim)
              << " trials=" << dg_trials << " delta=" << dg_delta << '\n';
          std::vector<std::vector<std::string>> rows;
          for (const auto& c : res.second.checks)
            rows.push_back({c.moment, fmt(c.estimate), fmt(c.rhs), c.pass ? "pass" : "FAIL"});
          print_table(out, {"moment", "estimate", "bound", "verdict"}, rows);
        }
      }
      return kExitOk;
    }

    if (*al) {
      const auto spec = al_proc.spec();
      Series series{"alpha_hat " + spec.name(), {}, {}, {}};
      nlohmann::json j = nlohmann::json::array();
      for (long lag : al_lags) {
        const double a = empirical_alpha(spec, lag, al_trials, common.seed);
        const double env = mixing_bound(spec.mixing, lag);
        series.x.push_back(static_cast<double>(lag));
        series.y.push_back(a);
        j.push_back({{"lag", lag}, {"alpha_hat", a}, {"envelope", env}});
      }
      if (!al_plot.empty()) emit_plot_data({series}, PlotKind::AlphaDecay, output_path(common, al_plot));
      if (common.json) {
        out << nlohmann::json{{"process", to_json(spec)}, {"trials", al_trials}, {"values", j}}.dump(2) << '\n';
      } else {
        std::vector<std::vector<std::string>> rows;
        for (const auto& v : j)
          rows.push_back({std::to_string(v["lag"].get<long>()), fmt(v["alpha_hat"].get<double>()),
                          fmt(v["envelope"].get<double>())});
        print_table(out, {"lag", "alpha_hat", "envelope"}, rows);
      }
      return kExitOk;
    }

    if (*sw) {
      require_file(sw_config);
      auto config = config_from_json(read_json_file(sw_config));
      config.jobs = common.jobs;
      const auto table = sw_kind == "krr" ? run_krr_sweep(config) : run_dkrr_sweep(config);
      const auto path = output_path(common, (fs::path(config.output_dir) / config.table_name).string());
      persist(table, path);
      if (common.json)
        out << nlohmann::json{{"rows", table.size()}, {"table", path.string()}}.dump() << '\n';
      else
        out << "wrote " << table.size() << " rows to " << path.string() << '\n';
      return kExitOk;
    }

    if (*rt) {
      require_file(rt_in);
      const auto table = load_table(rt_in);
      const auto res = fit_rate(table, parse_norm(rt_norm), rt_r, rt_s, rt_tol, rt_m, rt_log);
      if (!rt_save.empty()) persist(res, output_path(common, rt_save));
      if (common.json) {
        out << nlohmann::json{{"norm", rt_norm},          {"slope", res.slope},
                              {"intercept", res.intercept}, {"slope_se", res.slope_se},
                              {"theoretical", res.theoretical}, {"tolerance", res.tolerance},
                              {"verdict", res.pass ? "pass" : "fail"}}
                   .dump(2)
            << '\n';
      } else {
        out << "slope=" << fmt(res.slope, 10) << " se=" << fmt(res.slope_se) << " theory=" << fmt(res.theoretical)
            << " tolerance=" << fmt(res.tolerance) << " verdict=" << (res.pass ? "pass" : "fail") << '\n';
      }
      return kExitOk;
    }

    if (*rp) {
      require_file(rp_in);
      const auto table = load_table(rp_in);
      const auto kind = parse_plot_kind(rp_kind);
      const auto name = rp_name.empty() ? "plot_" + rp_kind + ".json" : rp_name;
      emit_plot_data(table, kind, output_path(common, name));
      if (!rp_krr.empty()) {
        require_file(rp_krr);
        const auto ratios = compare_dkrr_krr(table, load_table(rp_krr));
        write_text_file(output_path(common, "ratio.csv"), ratio_table_to_csv(ratios));
        if (!common.json) {
          std::vector<std::vector<std::string>> rows;
          for (const auto& r : ratios)
            rows.push_back({std::to_string(r.n), std::to_string(r.m), fmt(r.ratio), fmt(r.lo), fmt(r.hi)});
          print_table(out, {"n", "m", "ratio", "lo90", "hi90"}, rows);
        }
      }
      out << "wrote " << output_path(common, name).string() << '\n';
      return kExitOk;
    }
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  }
  err << app.help();
  return kExitInput;
}

}  // namespace mixkrr::cli
