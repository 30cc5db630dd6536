// Command-line front end: dataset simulation, inference, report extraction,
// and the convergence / timing benchmark protocols.

#ifndef BAYESTOMO_CLI_HPP
#define BAYESTOMO_CLI_HPP

#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bayestomo/bench.hpp"
#include "bayestomo/inference.hpp"
#include "bayestomo/io.hpp"
#include "bayestomo/measurements.hpp"

namespace bayestomo {

namespace cli_detail {

inline double parse_sigma2_rule(const std::string& rule, long n_total) {
  if (rule == "1/N") return 1.0 / static_cast<double>(n_total);
  if (rule == "2/N") return 2.0 / static_cast<double>(n_total);
  try {
    const double v = std::stod(rule);
    if (v > 0.0) return v;
  } catch (...) {
  }
  throw std::runtime_error("invalid --sigma2 rule \"" + rule +
                           "\" (expected 1/N, 2/N, or a positive number)");
}

struct SimulateArgs {
  long d = 2;
  double lambda = 0.95;
  long shots = 400;
  std::string type = "mub2";
  std::uint64_t seed = 0;
  std::string out;
};

inline int run_simulate(const SimulateArgs& a) {
  const MeasurementSet m = measurement_set_from(a.d, a.type);
  const CMat rho = ground_truth_state(a.d, a.lambda);
  CountsFile cf;
  cf.d = a.d;
  cf.type = a.type;
  cf.counts = simulate_counts(rho, m, a.shots, a.seed);
  cf.ground_truth_lambda = a.lambda;
  save_counts(a.out, cf, m);
  std::cout << "wrote " << a.out << " (" << m.settings() << " settings, "
            << cf.counts.grand_total << " events)\n";
  return 0;
}

struct InferArgs {
  std::string counts_path;
  std::string likelihood = "full";
  std::string sampler = "pcn";
  double alpha = 1.0;
  std::string sigma2_rule = "1/N";
  long R = SamplerConfig{}.R;
  long T = SamplerConfig{}.T;
  long burn_in = SamplerConfig{}.burn_in;  // keep in sync with the sampler
  std::uint64_t seed = 0;
  bool compact = false;
  std::string out;
};

inline int run_infer(const InferArgs& a) {
  const CountsFile cf = load_counts(a.counts_path);
  const auto m = std::make_shared<const MeasurementSet>(
      measurement_set_from(cf.d, cf.type));
  if (cf.counts.settings() != m->settings())
    throw std::runtime_error("counts file does not match the " + cf.type +
                             " measurement layout");

  LikelihoodSpec lik;
  double sigma2 = 0.0;
  if (a.likelihood == "full") {
    lik = make_full_likelihood(m, cf.counts);
  } else if (a.likelihood == "pseudo") {
    const auto ls = least_squares_estimate(cf.counts, *m);
    sigma2 = parse_sigma2_rule(a.sigma2_rule, cf.counts.grand_total);
    lik = make_pseudo_likelihood(ls.rho_ls, ls.subspace, cf.counts.grand_total, sigma2);
  } else {
    throw std::runtime_error("unknown likelihood \"" + a.likelihood + "\"");
  }

  SamplerConfig sc;
  sc.R = a.R;
  sc.T = a.T;
  sc.burn_in = a.burn_in;
  sc.seed = a.seed;
  const PriorConfig prior{a.alpha, m->D};
  const PosteriorChain chain = a.sampler == "slice" ? slice_chain(prior, lik, sc)
                             : a.sampler == "pcn"   ? pcn_chain(prior, lik, sc)
                             : throw std::runtime_error("unknown sampler \"" +
                                                        a.sampler + "\"");

  ChainFile out;
  out.config = {cf.d,        cf.type,      a.likelihood,     a.sampler,
                a.alpha,     sigma2,       sc.R,             sc.T,
                sc.burn_in,  sc.adapt_window, sc.adapt_factor, sc.beta_y,
                sc.beta_z,   sc.seed};
  out.acceptance_rate = chain.acceptance_rate;
  out.density_evals = chain.density_eval_count;
  out.final_beta_y = chain.final_beta_y;
  out.final_beta_z = chain.final_beta_z;
  if (a.compact) {
    out.compact = true;
    const auto fid = fidelity_functional(ideal_bell_state(cf.d));
    std::vector<double> fs, ps;
    fs.reserve(chain.samples.size());
    ps.reserve(chain.samples.size());
    for (const auto& x : chain.samples) {
      const CMat rho = rho_from_params(x);
      fs.push_back(fid(rho));
      ps.push_back(purity(rho));
    }
    out.functionals["fidelity"] = std::move(fs);
    out.functionals["purity"] = std::move(ps);
  } else {
    out.samples = chain.samples;
  }
  save_chain(a.out, out);
  std::cout << "wrote " << a.out << " (R=" << chain.samples.size()
            << ", acceptance=" << chain.acceptance_rate << ")\n";
  return 0;
}

struct ReportArgs {
  std::string chain_path;
  std::string format = "json";
  std::string out;
};

inline int run_report(const ReportArgs& a) {
  const ChainFile cf = load_chain(a.chain_path);
  std::vector<double> fs, ps;
  if (cf.compact) {
    fs = cf.functionals.count("fidelity") ? cf.functionals.at("fidelity")
                                          : std::vector<double>{};
    ps = cf.functionals.count("purity") ? cf.functionals.at("purity")
                                        : std::vector<double>{};
  } else {
    const auto fid = fidelity_functional(ideal_bell_state(cf.config.d));
    for (const auto& x : cf.samples) {
      const CMat rho = rho_from_params(x);
      fs.push_back(fid(rho));
      ps.push_back(purity(rho));
    }
  }
  if (fs.empty()) throw std::runtime_error("chain file contains no samples");

  const auto stats = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::pair<double, double>(mean, std::sqrt(var / static_cast<double>(v.size())));
  };
  const auto [fm, fsd] = stats(fs);

  json j = {{"format_version", 1},
            {"kind", "report"},
            {"samples", fs.size()},
            {"f_mean", fm},
            {"f_std", fsd},
            {"acceptance_rate", cf.acceptance_rate},
            {"density_evals", cf.density_evals}};
  if (!ps.empty()) {
    const auto [pm, psd] = stats(ps);
    j["purity_mean"] = pm;
    j["purity_std"] = psd;
  }

  if (a.format == "json") {
    atomic_write(a.out, j.dump(2) + "\n");
  } else if (a.format == "csv") {
    CsvWriter csv({"samples", "f_mean", "f_std", "purity_mean", "purity_std",
                   "acceptance_rate", "density_evals"});
    const auto [pm, psd] =
        ps.empty() ? std::pair<double, double>(0.0, 0.0) : stats(ps);
    csv.row({std::to_string(fs.size()), format_double(fm), format_double(fsd),
             ps.empty() ? "" : format_double(pm), ps.empty() ? "" : format_double(psd),
             format_double(cf.acceptance_rate), std::to_string(cf.density_evals)});
    atomic_write(a.out, csv.str());
  } else {
    throw std::runtime_error("unknown format \"" + a.format + "\"");
  }
  std::cout << "wrote " << a.out << " (F = " << fm << " +- " << fsd << ")\n";
  return 0;
}

}  // namespace cli_detail

/// Entry point shared by the binary and the tests. Returns 0 on success,
/// 1 on usage errors, 2 on runtime failures.
inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Bayesian quantum state tomography toolkit"};
  app.require_subcommand(1);

  cli_detail::SimulateArgs sim;
  auto* simulate = app.add_subcommand(
      "simulate", "Simulate measurement counts for a two-qudit ground truth");
  simulate->add_option("--d", sim.d, "Qudit dimension (prime)")->capture_default_str();
  simulate->add_option("--lambda", sim.lambda, "Ground-truth mixing weight")
      ->capture_default_str();
  simulate->add_option("--shots", sim.shots, "Shots per measurement setting")
      ->capture_default_str();
  simulate->add_option("--type", sim.type, "Measurement set: mub2 | xz2qubit")
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "Output counts JSON path")->required();

  cli_detail::InferArgs inf;
  auto* infer = app.add_subcommand("infer", "Sample the posterior for a counts file");
  infer->add_option("--counts", inf.counts_path, "Counts JSON path")->required();
  infer->add_option("--likelihood", inf.likelihood, "full | pseudo")
      ->capture_default_str();
  infer->add_option("--sampler", inf.sampler, "pcn | slice")->capture_default_str();
  infer->add_option("--alpha", inf.alpha, "Prior shape parameter")
      ->capture_default_str();
  infer->add_option("--sigma2", inf.sigma2_rule,
                    "Pseudo-likelihood variance: 1/N | 2/N | positive value")
      ->capture_default_str();
  infer->add_option("--R", inf.R, "Retained samples")->capture_default_str();
  infer->add_option("--thin", inf.T, "Thinning factor")->capture_default_str();
  infer->add_option("--burn-in", inf.burn_in, "Burn-in iterations")
      ->capture_default_str();
  infer->add_option("--seed", inf.seed, "RNG seed")->capture_default_str();
  infer->add_flag("--compact", inf.compact,
                  "Store per-sample functionals instead of parameters");
  infer->add_option("--out", inf.out, "Output chain JSON path")->required();

  cli_detail::ReportArgs rep;
  auto* report = app.add_subcommand("report", "Summarize a chain file");
  report->add_option("--chain", rep.chain_path, "Chain JSON path")->required();
  report->add_option("--format", rep.format, "json | csv")->capture_default_str();
  report->add_option("--out", rep.out, "Output path")->required();

  ConvergenceConfig conv;
  std::string conv_out, conv_format = "csv";
  auto* bconv = app.add_subcommand(
      "bench-convergence", "Independent-sampler convergence study over thinning");
  bconv->add_option("--d", conv.d, "Qudit dimension (prime)")->capture_default_str();
  bconv->add_option("--lambda", conv.lambda, "Ground-truth mixing weight")
      ->capture_default_str();
  bconv->add_option("--shots", conv.shots_per_setting, "Shots per setting")
      ->capture_default_str();
  bconv->add_option("--likelihood", conv.likelihood, "full | pseudo")
      ->capture_default_str();
  bconv->add_option("--sampler", conv.sampler, "pcn | slice")->capture_default_str();
  bconv->add_option("--alpha", conv.alpha, "Prior shape parameter")
      ->capture_default_str();
  bconv->add_option("--R", conv.R, "Retained samples per chain")->capture_default_str();
  bconv->add_option("--burn-in", conv.burn_in, "Burn-in iterations")
      ->capture_default_str();
  bconv->add_option("--T-grid", conv.thinning_grid, "Thinning values")
      ->delimiter(',')
      ->capture_default_str();
  bconv->add_option("--chains", conv.chains, "Independent chains per T")
      ->capture_default_str();
  bconv->add_option("--seed", conv.seed, "Master seed")->capture_default_str();
  bconv->add_option("--format", conv_format, "csv | json")->capture_default_str();
  bconv->add_option("--out", conv_out, "Output path")->required();

  TimingConfig tim;
  std::string tim_out, tim_format = "csv";
  auto* btim = app.add_subcommand(
      "bench-timing", "Full vs pseudo likelihood per-sample timing study");
  btim->add_option("--d-list", tim.d_values, "Prime qudit dimensions")
      ->delimiter(',')
      ->capture_default_str();
  btim->add_option("--lambda", tim.lambda, "Ground-truth mixing weight")
      ->capture_default_str();
  btim->add_option("--shots-factor", tim.shots_factor,
                   "Shots per setting = factor * D")
      ->capture_default_str();
  btim->add_option("--points", tim.points, "Retained samples per run")
      ->capture_default_str();
  btim->add_option("--burn-in", tim.burn_in, "Burn-in iterations")
      ->capture_default_str();
  btim->add_option("--seed", tim.seed, "Master seed")->capture_default_str();
  btim->add_option("--format", tim_format, "csv | json")->capture_default_str();
  btim->add_option("--out", tim_out, "Output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed()) return cli_detail::run_simulate(sim);
    if (infer->parsed()) return cli_detail::run_infer(inf);
    if (report->parsed()) return cli_detail::run_report(rep);
    if (bconv->parsed()) {
      const ConvergenceReport r = run_convergence_study(conv);
      emit_report(r, conv_out, conv_format);
      std::cout << "wrote " << conv_out << " (" << r.records.size() << " records)\n";
      return 0;
    }
    if (btim->parsed()) {
      const TimingReport r = run_timing_study(tim);
      emit_report(r, tim_out, tim_format);
      std::cout << "wrote " << tim_out << " (" << r.records.size() << " records)\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

inline int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("bayestomo");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace bayestomo

#endif  // BAYESTOMO_CLI_HPP
