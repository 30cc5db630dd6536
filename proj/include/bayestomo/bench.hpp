// Benchmark harness: multi-chain convergence studies over a thinning grid
// and full-vs-pseudo likelihood timing studies over qudit dimension, with
// CSV/JSON report emission.

#ifndef BAYESTOMO_BENCH_HPP
#define BAYESTOMO_BENCH_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bayestomo/inference.hpp"
#include "bayestomo/io.hpp"
#include "bayestomo/measurements.hpp"

namespace bayestomo {

// ---------------------------------------------------------------------------
// Convergence study (independent samplers over a thinning grid)
// ---------------------------------------------------------------------------

struct ConvergenceConfig {
  long d = 2;
  double lambda = 0.95;
  long shots_per_setting = 400;
  std::string likelihood = "full";  // "full" | "pseudo"
  std::string sampler = "pcn";      // "pcn" | "slice"
  double alpha = 1.0;
  double sigma2 = 0.0;  // 0 = default 1/N
  long R = 1 << 10;
  // The convergence protocol launches independent samplers from random
  // prior points with no burn-in; the initial transient is part of what
  // the study measures.
  long burn_in = 0;
  std::vector<long> thinning_grid = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512};
  long chains = 20;
  std::uint64_t seed = 0;
};

struct ConvergenceRecord {
  long T = 0;
  long chain = 0;
  double f_mean = 0.0;
  double f_std = 0.0;
  double wall_seconds = 0.0;
  long density_evals = 0;
  double acceptance = 0.0;
};

/// Box statistics per thinning value, for both the fidelity-mean and
/// fidelity-std estimates across chains. Whiskers extend to the farthest
/// point within 1.5x the interquartile range.
struct BoxStats {
  double median = 0.0, q25 = 0.0, q75 = 0.0;
  double whisker_lo = 0.0, whisker_hi = 0.0;
  double spread = 0.0;  // standard deviation across chains
};

struct ConvergenceStats {
  long T = 0;
  BoxStats f_mean;
  BoxStats f_std;
  long post_burn_in_evals = 0;  // R * T, the per-chain sampling cost
};

struct ConvergenceReport {
  ConvergenceConfig config;
  std::vector<ConvergenceRecord> records;
  std::vector<ConvergenceStats> stats;
};

namespace detail {

/// Linear-interpolation quantile of a sorted copy of v.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

inline BoxStats box_stats(const std::vector<double>& v) {
  BoxStats b;
  b.median = quantile(v, 0.5);
  b.q25 = quantile(v, 0.25);
  b.q75 = quantile(v, 0.75);
  const double iqr = b.q75 - b.q25;
  b.whisker_lo = b.median;
  b.whisker_hi = b.median;
  for (double x : v) {
    if (x >= b.q25 - 1.5 * iqr) b.whisker_lo = std::min(b.whisker_lo, x);
    if (x <= b.q75 + 1.5 * iqr) b.whisker_hi = std::max(b.whisker_hi, x);
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  b.spread = std::sqrt(var / static_cast<double>(v.size()));
  return b;
}

inline LikelihoodSpec build_likelihood(const std::string& kind,
                                       const std::shared_ptr<const MeasurementSet>& m,
                                       const CountData& counts, double sigma2) {
  if (kind == "full") return make_full_likelihood(m, counts);
  if (kind == "pseudo") {
    const auto ls = least_squares_estimate(counts, *m);
    return make_pseudo_likelihood(ls.rho_ls, ls.subspace, counts.grand_total, sigma2);
  }
  if (kind == "none") return unit_likelihood();
  throw std::invalid_argument("unknown likelihood kind \"" + kind + "\"");
}

inline PosteriorChain run_chain(const std::string& sampler, const PriorConfig& prior,
                                const LikelihoodSpec& lik, const SamplerConfig& cfg,
                                ChainTiming* timing = nullptr) {
  if (sampler == "pcn") return pcn_chain(prior, lik, cfg, timing);
  if (sampler == "slice") return slice_chain(prior, lik, cfg, timing);
  throw std::invalid_argument("unknown sampler \"" + sampler + "\"");
}

}  // namespace detail

/// Run `chains` independent samplers per thinning value on one simulated
/// dataset; report per-chain fidelity mean/std plus per-T box statistics.
/// Chain i of grid slot t uses the derived seed
/// derive_seed(cfg.seed, 1 + t*chains + i); slot 0 with T grid starting at 1
/// therefore reproduces `chains` plain inference runs.
inline ConvergenceReport run_convergence_study(const ConvergenceConfig& cfg) {
  const auto m = std::make_shared<const MeasurementSet>(
      two_qudit_mub_measurements(cfg.d));
  const CMat rho_true = ground_truth_state(cfg.d, cfg.lambda);
  const CountData counts =
      simulate_counts(rho_true, *m, cfg.shots_per_setting, derive_seed(cfg.seed, 0));
  const LikelihoodSpec lik =
      detail::build_likelihood(cfg.likelihood, m, counts, cfg.sigma2);
  const auto fidelity_of = fidelity_functional(ideal_bell_state(cfg.d));
  const PriorConfig prior{cfg.alpha, m->D};

  ConvergenceReport report;
  report.config = cfg;
  for (std::size_t t = 0; t < cfg.thinning_grid.size(); ++t) {
    std::vector<double> means, stds;
    for (long i = 0; i < cfg.chains; ++i) {
      SamplerConfig sc;
      sc.R = cfg.R;
      sc.T = cfg.thinning_grid[t];
      sc.burn_in = cfg.burn_in;
      sc.seed = derive_seed(cfg.seed, 1 + t * static_cast<std::size_t>(cfg.chains) + i);
      ChainTiming timing;
      const PosteriorChain chain = detail::run_chain(cfg.sampler, prior, lik, sc, &timing);
      const auto [fm, fs] = posterior_expectation(chain, fidelity_of);
      report.records.push_back({cfg.thinning_grid[t], i, fm, fs,
                                timing.sampling_seconds, chain.density_eval_count,
                                chain.acceptance_rate});
      means.push_back(fm);
      stds.push_back(fs);
    }
    ConvergenceStats st;
    st.T = cfg.thinning_grid[t];
    st.f_mean = detail::box_stats(means);
    st.f_std = detail::box_stats(stds);
    st.post_burn_in_evals = cfg.R * cfg.thinning_grid[t];
    report.stats.push_back(st);
  }
  return report;
}

/// Least-squares slope of log(spread) against log(cost) over the first
/// `points` grid entries (the pre-plateau regime).
inline double fit_loglog_slope(const ConvergenceReport& report, std::size_t points,
                               bool use_f_std_spread = true) {
  points = std::min(points, report.stats.size());
  if (points < 2) throw std::invalid_argument("fit_loglog_slope: need >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < points; ++i) {
    const double x = std::log(static_cast<double>(report.stats[i].post_burn_in_evals));
    const double spread = use_f_std_spread ? report.stats[i].f_std.spread
                                           : report.stats[i].f_mean.spread;
    const double y = std::log(spread);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(points);
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Timing study (full vs pseudo likelihood across qudit dimension)
// ---------------------------------------------------------------------------

struct TimingConfig {
  std::vector<long> d_values = {2, 3, 5, 7};
  double lambda = 0.95;
  long shots_factor = 100;  // shots per setting = factor * D
  double alpha = 1.0;
  long points = 1 << 14;
  long burn_in = 1 << 10;
  std::uint64_t seed = 0;
};

struct TimingRecord {
  long d = 0;
  std::string likelihood;
  long points = 0;
  double mean_seconds_per_sample = 0.0;
  double std_seconds_per_sample = 0.0;
  long density_evals = 0;
  double acceptance = 0.0;
};

struct TimingReport {
  TimingConfig config;
  std::vector<TimingRecord> records;
  // full:pseudo mean per-sample time ratio per d, in d order
  std::vector<std::pair<long, double>> ratios;
};

/// Per d: simulate the complete MUB protocol, then time the pCN chain for
/// `points` retained samples (T = 1) after burn-in, once with the full
/// multinomial likelihood and once with the pseudo-likelihood.
inline TimingReport run_timing_study(const TimingConfig& cfg) {
  TimingReport report;
  report.config = cfg;
  for (std::size_t di = 0; di < cfg.d_values.size(); ++di) {
    const long d = cfg.d_values[di];
    const auto m = std::make_shared<const MeasurementSet>(two_qudit_mub_measurements(d));
    const CMat rho_true = ground_truth_state(d, cfg.lambda);
    const long shots = cfg.shots_factor * m->D;
    const CountData counts =
        simulate_counts(rho_true, *m, shots, derive_seed(cfg.seed, 1000 + di));

    double mean_full = 0.0;
    for (const std::string kind : {"full", "pseudo"}) {
      const LikelihoodSpec lik = detail::build_likelihood(kind, m, counts, 0.0);
      SamplerConfig sc;
      sc.R = cfg.points;
      sc.T = 1;
      sc.burn_in = cfg.burn_in;
      sc.seed = derive_seed(cfg.seed, 2000 + 2 * di + (kind == "full" ? 0 : 1));
      const PriorConfig prior{cfg.alpha, m->D};
      ChainTiming timing;
      const PosteriorChain chain = pcn_chain(prior, lik, sc, &timing);

      double mean = 0.0;
      for (double t : timing.per_sample_seconds) mean += t;
      mean /= static_cast<double>(timing.per_sample_seconds.size());
      double var = 0.0;
      for (double t : timing.per_sample_seconds) var += (t - mean) * (t - mean);
      var /= static_cast<double>(timing.per_sample_seconds.size());

      report.records.push_back({d, kind, cfg.points, mean, std::sqrt(var),
                                chain.density_eval_count, chain.acceptance_rate});
      if (kind == "full")
        mean_full = mean;
      else
        report.ratios.emplace_back(d, mean_full / mean);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

inline json convergence_report_to_json(const ConvergenceReport& r) {
  json records = json::array();
  for (const auto& rec : r.records)
    records.push_back({{"T", rec.T},
                       {"chain", rec.chain},
                       {"f_mean", rec.f_mean},
                       {"f_std", rec.f_std},
                       {"wall_seconds", rec.wall_seconds},
                       {"density_evals", rec.density_evals},
                       {"acceptance", rec.acceptance}});
  json stats = json::array();
  const auto box = [](const BoxStats& b) {
    return json{{"median", b.median},     {"q25", b.q25},
                {"q75", b.q75},           {"whisker_lo", b.whisker_lo},
                {"whisker_hi", b.whisker_hi}, {"spread", b.spread}};
  };
  for (const auto& st : r.stats)
    stats.push_back({{"T", st.T},
                     {"post_burn_in_evals", st.post_burn_in_evals},
                     {"f_mean", box(st.f_mean)},
                     {"f_std", box(st.f_std)}});
  return json{{"format_version", 1},
              {"kind", "convergence"},
              {"config",
               {{"d", r.config.d},
                {"lambda", r.config.lambda},
                {"shots_per_setting", r.config.shots_per_setting},
                {"likelihood", r.config.likelihood},
                {"sampler", r.config.sampler},
                {"alpha", r.config.alpha},
                {"sigma2", r.config.sigma2},
                {"R", r.config.R},
                {"burn_in", r.config.burn_in},
                {"thinning_grid", r.config.thinning_grid},
                {"chains", r.config.chains},
                {"seed", r.config.seed}}},
              {"records", records},
              {"stats", stats}};
}

/// Single CSV with a row_kind column: "record" rows carry per-chain results,
/// "stat" rows the per-T box statistics (columns unused by a kind are empty).
inline std::string convergence_report_to_csv(const ConvergenceReport& r) {
  CsvWriter csv({"row_kind", "T", "chain", "f_mean", "f_std", "wall_seconds",
                 "density_evals", "acceptance", "stat_of", "median", "q25", "q75",
                 "whisker_lo", "whisker_hi", "spread", "post_burn_in_evals"});
  for (const auto& rec : r.records)
    csv.row({"record", std::to_string(rec.T), std::to_string(rec.chain),
             format_double(rec.f_mean), format_double(rec.f_std),
             format_double(rec.wall_seconds), std::to_string(rec.density_evals),
             format_double(rec.acceptance), "", "", "", "", "", "", "", ""});
  for (const auto& st : r.stats) {
    const auto stat_row = [&](const char* name, const BoxStats& b) {
      csv.row({"stat", std::to_string(st.T), "", "", "", "", "", "", name,
               format_double(b.median), format_double(b.q25), format_double(b.q75),
               format_double(b.whisker_lo), format_double(b.whisker_hi),
               format_double(b.spread), std::to_string(st.post_burn_in_evals)});
    };
    stat_row("f_mean", st.f_mean);
    stat_row("f_std", st.f_std);
  }
  return csv.str();
}

inline json timing_report_to_json(const TimingReport& r) {
  json records = json::array();
  for (const auto& rec : r.records)
    records.push_back({{"d", rec.d},
                       {"likelihood", rec.likelihood},
                       {"points", rec.points},
                       {"mean_seconds_per_sample", rec.mean_seconds_per_sample},
                       {"std_seconds_per_sample", rec.std_seconds_per_sample},
                       {"density_evals", rec.density_evals},
                       {"acceptance", rec.acceptance}});
  json ratios = json::array();
  for (const auto& [d, ratio] : r.ratios)
    ratios.push_back({{"d", d}, {"full_pseudo_ratio", ratio}});
  return json{{"format_version", 1},
              {"kind", "timing"},
              {"config",
               {{"d_values", r.config.d_values},
                {"lambda", r.config.lambda},
                {"shots_factor", r.config.shots_factor},
                {"alpha", r.config.alpha},
                {"points", r.config.points},
                {"burn_in", r.config.burn_in},
                {"seed", r.config.seed}}},
              {"records", records},
              {"ratios", ratios}};
}

inline std::string timing_report_to_csv(const TimingReport& r) {
  CsvWriter csv({"row_kind", "d", "likelihood", "points", "mean_seconds_per_sample",
                 "std_seconds_per_sample", "density_evals", "acceptance",
                 "full_pseudo_ratio"});
  for (const auto& rec : r.records)
    csv.row({"record", std::to_string(rec.d), rec.likelihood,
             std::to_string(rec.points), format_double(rec.mean_seconds_per_sample),
             format_double(rec.std_seconds_per_sample),
             std::to_string(rec.density_evals), format_double(rec.acceptance), ""});
  for (const auto& [d, ratio] : r.ratios)
    csv.row({"ratio", std::to_string(d), "", "", "", "", "", "", format_double(ratio)});
  return csv.str();
}

/// Atomic, deterministic report emission: identical reports give
/// byte-identical files.
inline void emit_report(const ConvergenceReport& r, const std::filesystem::path& path,
                        const std::string& format) {
  if (format == "json")
    atomic_write(path, convergence_report_to_json(r).dump(2) + "\n");
  else if (format == "csv")
    atomic_write(path, convergence_report_to_csv(r));
  else
    throw std::invalid_argument("emit_report: unknown format \"" + format + "\"");
}

inline void emit_report(const TimingReport& r, const std::filesystem::path& path,
                        const std::string& format) {
  if (format == "json")
    atomic_write(path, timing_report_to_json(r).dump(2) + "\n");
  else if (format == "csv")
    atomic_write(path, timing_report_to_csv(r));
  else
    throw std::invalid_argument("emit_report: unknown format \"" + format + "\"");
}

}  // namespace bayestomo

#endif  // BAYESTOMO_BENCH_HPP
