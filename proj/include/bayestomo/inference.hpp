// Posterior sampling: Gamma/Gaussian prior, pseudo- and full likelihoods,
// the preconditioned Crank-Nicolson Metropolis-Hastings chain with tandem
// step-size adaptation during burn-in, a stepping-out/shrinkage slice
// sampler baseline, and Monte Carlo functional estimation.

#ifndef BAYESTOMO_INFERENCE_HPP
#define BAYESTOMO_INFERENCE_HPP

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "bayestomo/measurements.hpp"
#include "bayestomo/rng.hpp"
#include "bayestomo/states.hpp"

namespace bayestomo {

/// Gamma(alpha,1) weights and standard-normal complex directions. alpha = 1
/// is uniform over states; alpha < 1 favors low rank.
struct PriorConfig {
  double alpha = 1.0;
  Eigen::Index D = 0;
};

inline void validate_prior(const PriorConfig& p) {
  if (!(p.alpha > 0.0)) throw std::domain_error("PriorConfig: alpha must be > 0");
  if (p.D < 1) throw std::domain_error("PriorConfig: D must be >= 1");
}

inline ParamVector sample_prior(const PriorConfig& cfg, Rng& rng) {
  validate_prior(cfg);
  ParamVector x;
  x.y.resize(cfg.D);
  x.z.resize(cfg.D, cfg.D);
  for (Eigen::Index k = 0; k < cfg.D; ++k) x.y[k] = rng.gamma(cfg.alpha);
  for (Eigen::Index k = 0; k < cfg.D; ++k)
    for (Eigen::Index i = 0; i < cfg.D; ++i)
      x.z(i, k) = cplx(rng.normal(), rng.normal());
  return x;
}

inline ParamVector sample_prior(const PriorConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  return sample_prior(cfg, rng);
}

/// Unnormalized log prior density in the sampled coordinates.
inline double log_prior_density(const ParamVector& x, double alpha) {
  double lp = 0.0;
  for (Eigen::Index k = 0; k < x.dim(); ++k)
    lp += (alpha - 1.0) * std::log(x.y[k]) - x.y[k];
  lp -= 0.5 * x.z.squaredNorm();
  return lp;
}

/// Data term of the posterior. `none` is the unit likelihood used by
/// prior-recovery diagnostics.
struct LikelihoodSpec {
  enum class Kind { none, pseudo, full };

  Kind kind = Kind::none;

  // pseudo: -(1/(2 sigma2)) || P(rho(x)) - rho_ls ||_F^2
  CMat rho_ls;
  ObservedSubspace subspace;
  long n_total = 0;
  double sigma2 = 0.0;

  // full: sum_r N_r log Tr(rho(x) L_r), evaluated through the W map
  std::shared_ptr<const MeasurementSet> measurements;
  RVec count_vec;  // stacked in W row order
};

inline LikelihoodSpec unit_likelihood() { return LikelihoodSpec{}; }

/// sigma2 <= 0 selects the default variance 1/N.
inline LikelihoodSpec make_pseudo_likelihood(CMat rho_ls, ObservedSubspace subspace,
                                             long n_total, double sigma2 = 0.0) {
  if (n_total < 1)
    throw std::domain_error("make_pseudo_likelihood: N must be >= 1");
  if (rho_ls.size() == 0)
    throw std::invalid_argument("make_pseudo_likelihood: missing rho_ls");
  LikelihoodSpec s;
  s.kind = LikelihoodSpec::Kind::pseudo;
  s.rho_ls = std::move(rho_ls);
  s.subspace = std::move(subspace);
  s.n_total = n_total;
  s.sigma2 = sigma2 > 0.0 ? sigma2 : 1.0 / static_cast<double>(n_total);
  return s;
}

inline LikelihoodSpec make_full_likelihood(std::shared_ptr<const MeasurementSet> m,
                                           const CountData& counts) {
  if (!m) throw std::invalid_argument("make_full_likelihood: null measurement set");
  if (counts.settings() != m->settings())
    throw std::invalid_argument("make_full_likelihood: setting count mismatch");
  LikelihoodSpec s;
  s.kind = LikelihoodSpec::Kind::full;
  s.measurements = std::move(m);
  s.count_vec.resize(s.measurements->total_outcomes());
  Eigen::Index r = 0;
  for (const auto& row : counts.counts)
    for (long c : row) s.count_vec[r++] = static_cast<double>(c);
  s.n_total = counts.grand_total;
  return s;
}

inline double log_pseudo_likelihood(const ParamVector& x, const LikelihoodSpec& spec) {
  if (spec.kind != LikelihoodSpec::Kind::pseudo)
    throw std::invalid_argument("log_pseudo_likelihood: spec is not pseudo");
  const CMat rho = rho_from_params(x);
  const double d2 = (spec.subspace.project(rho) - spec.rho_ls).squaredNorm();
  return -0.5 * d2 / spec.sigma2;
}

inline double log_full_likelihood(const ParamVector& x, const LikelihoodSpec& spec) {
  if (spec.kind != LikelihoodSpec::Kind::full)
    throw std::invalid_argument("log_full_likelihood: spec is not full");
  const MeasurementSet& m = *spec.measurements;
  const CMat rho = rho_from_params(x);
  const CVec pc = m.W * vec(rho);
  double ll = 0.0;
  for (Eigen::Index r = 0; r < pc.size(); ++r) {
    if (spec.count_vec[r] == 0.0) continue;  // 0 log 0 := 0
    double p = pc[r].real();
    if (p < -1e-12)
      throw std::runtime_error("log_full_likelihood: negative outcome probability");
    if (p < 1e-300) p = 1e-300;
    ll += spec.count_vec[r] * std::log(p);
  }
  return ll;
}

inline double log_likelihood(const ParamVector& x, const LikelihoodSpec& spec) {
  switch (spec.kind) {
    case LikelihoodSpec::Kind::none:
      return 0.0;
    case LikelihoodSpec::Kind::pseudo:
      return log_pseudo_likelihood(x, spec);
    case LikelihoodSpec::Kind::full:
      return log_full_likelihood(x, spec);
  }
  throw std::logic_error("log_likelihood: bad kind");
}

/// Sampler knobs. Step sizes are the Algorithm-level beta_y (lognormal y
/// step) and beta_z (Crank-Nicolson mixing); both adapt in tandem during
/// burn-in toward a window acceptance rate inside [accept_low, accept_high]
/// and are frozen afterwards.
struct SamplerConfig {
  double beta_y = 0.1;
  double beta_z = 0.1;
  long R = 1 << 10;       // retained samples
  long T = 1 << 6;        // thinning
  long burn_in = 1 << 13;
  // Adaptation triggers on an interior corridor (the band inset by 25% per
  // side), so a frozen step size keeps its long-run acceptance inside the
  // band even under window noise. The factor drops to its square root for
  // the second half of burn-in: coarse steps to find the corridor, fine
  // steps to settle inside it.
  long adapt_window = 100;
  double adapt_factor = 1.3;
  double accept_low = 0.1;
  double accept_high = 0.3;
  std::uint64_t seed = 0;

  // slice baseline
  double slice_width = 1.0;
  long slice_max_stepout = 100;
};

inline void validate_sampler(const SamplerConfig& c) {
  if (!(c.beta_y > 0.0 && c.beta_y < 1.0 && c.beta_z > 0.0 && c.beta_z < 1.0))
    throw std::domain_error("SamplerConfig: step sizes must lie in (0,1)");
  if (c.R < 1 || c.T < 1) throw std::domain_error("SamplerConfig: R and T must be >= 1");
  if (c.burn_in < 0) throw std::domain_error("SamplerConfig: burn_in must be >= 0");
  if (c.adapt_window < 1 || !(c.adapt_factor > 1.0))
    throw std::domain_error("SamplerConfig: bad adaptation parameters");
}

/// y'_k = y_k exp(beta_y eta_k), z'_k = sqrt(1-beta_z^2) z_k + beta_z xi_k.
/// The z update leaves the Gaussian prior invariant for any beta_z.
inline ParamVector pcn_propose(const ParamVector& x, const SamplerConfig& cfg,
                               Rng& rng) {
  ParamVector p;
  const auto D = x.dim();
  p.y.resize(D);
  p.z.resize(D, D);
  for (Eigen::Index k = 0; k < D; ++k)
    p.y[k] = x.y[k] * std::exp(cfg.beta_y * rng.normal());
  const double keep = std::sqrt(1.0 - cfg.beta_z * cfg.beta_z);
  for (Eigen::Index k = 0; k < D; ++k)
    for (Eigen::Index i = 0; i < D; ++i)
      p.z(i, k) = keep * x.z(i, k) + cfg.beta_z * cplx(rng.normal(), rng.normal());
  return p;
}

/// log A = min{0, l' - l + sum_k [alpha log y'_k - y'_k - alpha log y_k + y_k]}.
/// The alpha (not alpha-1) power folds the lognormal proposal Jacobian into
/// the prior ratio; z contributes nothing because the Crank-Nicolson kernel
/// is reversible with respect to its Gaussian prior.
inline double log_acceptance(const ParamVector& x_prop, const ParamVector& x_cur,
                             double loglik_prop, double loglik_cur, double alpha) {
  if (!std::isfinite(loglik_cur))
    throw std::runtime_error("log_acceptance: non-finite log-likelihood at current point");
  double s = loglik_prop - loglik_cur;
  for (Eigen::Index k = 0; k < x_cur.dim(); ++k)
    s += alpha * std::log(x_prop.y[k]) - x_prop.y[k] -
         alpha * std::log(x_cur.y[k]) + x_cur.y[k];
  return std::min(0.0, s);
}

inline double log_acceptance(const ParamVector& x_prop, const ParamVector& x_cur,
                             const std::function<double(const ParamVector&)>& loglik,
                             double alpha) {
  return log_acceptance(x_prop, x_cur, loglik(x_prop), loglik(x_cur), alpha);
}

/// Retained posterior samples with chain diagnostics.
struct PosteriorChain {
  std::vector<ParamVector> samples;
  std::vector<double> log_posterior_trace;
  double acceptance_rate = 0.0;  // post burn-in
  long density_eval_count = 0;
  double final_beta_y = 0.0;
  double final_beta_z = 0.0;
  std::uint64_t seed = 0;
  SamplerConfig config;
};

/// Optional per-retained-sample wall timing of the propose/accept loop.
struct ChainTiming {
  std::vector<double> per_sample_seconds;
  double sampling_seconds = 0.0;  // post burn-in total
};

namespace detail {

inline ParamVector init_from_prior(const PriorConfig& prior,
                                   const LikelihoodSpec& lik, Rng& rng,
                                   double& loglik_out, long& evals) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    ParamVector x = sample_prior(prior, rng);
    const double ll = log_likelihood(x, lik);
    ++evals;
    if (std::isfinite(ll)) {
      loglik_out = ll;
      return x;
    }
  }
  throw std::runtime_error("chain init: no finite posterior point in 100 prior draws");
}

}  // namespace detail

/// Preconditioned Crank-Nicolson Metropolis-Hastings chain. Step sizes adapt
/// in tandem every adapt_window proposals during burn-in (multiplied by
/// adapt_factor above the acceptance band, divided below it) and stay fixed
/// afterwards, so the adaptation is diminishing and ergodicity is untouched.
inline PosteriorChain pcn_chain(const PriorConfig& prior, const LikelihoodSpec& lik,
                                const SamplerConfig& cfg,
                                ChainTiming* timing = nullptr) {
  validate_prior(prior);
  validate_sampler(cfg);
  Rng rng(cfg.seed);

  PosteriorChain out;
  out.seed = cfg.seed;
  out.config = cfg;
  out.samples.reserve(cfg.R);
  out.log_posterior_trace.reserve(cfg.R);
  if (timing) {
    timing->per_sample_seconds.assign(cfg.R, 0.0);
    timing->sampling_seconds = 0.0;
  }

  long evals = 0;
  double loglik = 0.0;
  ParamVector x = detail::init_from_prior(prior, lik, rng, loglik, evals);

  SamplerConfig live = cfg;  // betas evolve during burn-in
  constexpr double kBetaMin = 1e-4;
  constexpr double kBetaMax = 0.999;

  long window_proposals = 0, window_accepts = 0;
  long post_accepts = 0;
  // Adjustments trigger on an interior corridor so frozen step sizes keep
  // their long-run acceptance inside the band under window noise.
  const double inset = 0.25 * (cfg.accept_high - cfg.accept_low);
  const double trigger_lo = cfg.accept_low + inset;
  const double trigger_hi = cfg.accept_high - inset;
  double log_beta_sum_y = 0.0, log_beta_sum_z = 0.0;
  long fine_windows = 0;
  const long total = cfg.burn_in + cfg.R * cfg.T;
  using clock = std::chrono::steady_clock;

  for (long iter = 0; iter < total; ++iter) {
    const bool in_burn = iter < cfg.burn_in;
    const auto t0 = (timing && !in_burn) ? clock::now() : clock::time_point{};

    ParamVector prop = pcn_propose(x, live, rng);
    const double ll_prop = log_likelihood(prop, lik);
    ++evals;
    const double la = log_acceptance(prop, x, ll_prop, loglik, prior.alpha);
    const bool accept = std::log(rng.uniform_pos()) < la;
    if (accept) {
      x = std::move(prop);
      loglik = ll_prop;
    }

    if (timing && !in_burn) {
      const double dt = std::chrono::duration<double>(clock::now() - t0).count();
      timing->per_sample_seconds[(iter - cfg.burn_in) / cfg.T] += dt;
      timing->sampling_seconds += dt;
    }

    if (in_burn) {
      ++window_proposals;
      window_accepts += accept ? 1 : 0;
      if (window_proposals == live.adapt_window) {
        const double rate = static_cast<double>(window_accepts) / window_proposals;
        // full factor while finding the band, sqrt-factor refinement after:
        // the adaptation diminishes as the chain settles
        const double factor = (iter < cfg.burn_in / 2)
                                  ? live.adapt_factor
                                  : std::sqrt(live.adapt_factor);
        if (rate > trigger_hi) {
          live.beta_y *= factor;
          live.beta_z *= factor;
        } else if (rate < trigger_lo) {
          live.beta_y /= factor;
          live.beta_z /= factor;
        }
        live.beta_y = std::clamp(live.beta_y, kBetaMin, kBetaMax);
        live.beta_z = std::clamp(live.beta_z, kBetaMin, kBetaMax);
        if (iter >= cfg.burn_in / 2) {
          log_beta_sum_y += std::log(live.beta_y);
          log_beta_sum_z += std::log(live.beta_z);
          ++fine_windows;
        }
        window_proposals = window_accepts = 0;
      }
      // Freeze at the average of the refinement-phase walk rather than its
      // endpoint; the walk oscillates around the band, its mean sits in it.
      if (iter + 1 == cfg.burn_in && fine_windows > 0) {
        live.beta_y = std::clamp(
            std::exp(log_beta_sum_y / static_cast<double>(fine_windows)),
            kBetaMin, kBetaMax);
        live.beta_z = std::clamp(
            std::exp(log_beta_sum_z / static_cast<double>(fine_windows)),
            kBetaMin, kBetaMax);
      }
    } else {
      post_accepts += accept ? 1 : 0;
      if ((iter - cfg.burn_in + 1) % cfg.T == 0) {
        out.samples.push_back(x);
        out.log_posterior_trace.push_back(loglik + log_prior_density(x, prior.alpha));
      }
    }
  }

  out.acceptance_rate = static_cast<double>(post_accepts) /
                        static_cast<double>(cfg.R * cfg.T);
  out.density_eval_count = evals;
  out.final_beta_y = live.beta_y;
  out.final_beta_z = live.beta_z;
  return out;
}

namespace detail {

/// One univariate slice-sampling update (Neal 2003): stepping out with at
/// most `max_step` width expansions per side, then shrinkage. `logf` must
/// evaluate the full conditional at a candidate for the coordinate.
template <typename LogF>
inline double slice_update(double x0, double lf0, double& lf_out, LogF&& logf,
                           Rng& rng, double width, long max_step) {
  const double level = lf0 + std::log(rng.uniform_pos());
  const double u = rng.uniform();
  double lo = x0 - width * u;
  double hi = lo + width;
  for (long i = 0; i < max_step && logf(lo) > level; ++i) lo -= width;
  for (long i = 0; i < max_step && logf(hi) > level; ++i) hi += width;
  for (int guard = 0; guard < 10000; ++guard) {
    const double x1 = lo + rng.uniform() * (hi - lo);
    const double lf1 = logf(x1);
    if (lf1 > level) {
      lf_out = lf1;
      return x1;
    }
    if (x1 < x0)
      lo = x1;
    else
      hi = x1;
  }
  lf_out = lf0;
  return x0;  // degenerate slice; keep the current point
}

}  // namespace detail

/// Coordinate-wise slice-sampling baseline over the transformed coordinates
/// (log y_k, Re z_ki, Im z_ki), targeting the same posterior as pcn_chain.
/// Every posterior evaluation is counted; slice spends many per retained
/// sample, which is exactly the cost gap the benchmarks measure.
inline PosteriorChain slice_chain(const PriorConfig& prior, const LikelihoodSpec& lik,
                                  const SamplerConfig& cfg,
                                  ChainTiming* timing = nullptr) {
  validate_prior(prior);
  validate_sampler(cfg);
  Rng rng(cfg.seed);
  const Eigen::Index D = prior.D;

  PosteriorChain out;
  out.seed = cfg.seed;
  out.config = cfg;
  out.samples.reserve(cfg.R);
  if (timing) {
    timing->per_sample_seconds.assign(cfg.R, 0.0);
    timing->sampling_seconds = 0.0;
  }

  long evals = 0;
  double ll0 = 0.0;
  ParamVector x = detail::init_from_prior(prior, lik, rng, ll0, evals);

  // state in transformed coordinates
  RVec t(D);
  for (Eigen::Index k = 0; k < D; ++k) t[k] = std::log(x.y[k]);

  // log target including the log-transform Jacobian for y = e^t
  const auto log_target = [&](const RVec& tv, const CMat& zv) {
    ParamVector p;
    p.y = tv.array().exp().matrix();
    p.z = zv;
    double lp = log_likelihood(p, lik);
    ++evals;
    for (Eigen::Index k = 0; k < D; ++k)
      lp += prior.alpha * tv[k] - std::exp(tv[k]);
    lp -= 0.5 * zv.squaredNorm();
    return lp;
  };

  double lp_cur = log_target(t, x.z);
  using clock = std::chrono::steady_clock;

  const long total_sweeps = cfg.burn_in + cfg.R * cfg.T;
  for (long sweep = 0; sweep < total_sweeps; ++sweep) {
    const bool in_burn = sweep < cfg.burn_in;
    const auto t0 = (timing && !in_burn) ? clock::now() : clock::time_point{};

    for (Eigen::Index k = 0; k < D; ++k) {
      const auto logf = [&](double v) {
        RVec tt = t;
        tt[k] = v;
        return log_target(tt, x.z);
      };
      t[k] = detail::slice_update(t[k], lp_cur, lp_cur, logf, rng,
                                  cfg.slice_width, cfg.slice_max_stepout);
    }
    for (Eigen::Index k = 0; k < D; ++k)
      for (Eigen::Index i = 0; i < D; ++i) {
        const auto logf_re = [&](double v) {
          CMat zz = x.z;
          zz(i, k) = cplx(v, zz(i, k).imag());
          return log_target(t, zz);
        };
        x.z(i, k).real(detail::slice_update(x.z(i, k).real(), lp_cur, lp_cur,
                                            logf_re, rng, cfg.slice_width,
                                            cfg.slice_max_stepout));
        const auto logf_im = [&](double v) {
          CMat zz = x.z;
          zz(i, k) = cplx(zz(i, k).real(), v);
          return log_target(t, zz);
        };
        x.z(i, k).imag(detail::slice_update(x.z(i, k).imag(), lp_cur, lp_cur,
                                            logf_im, rng, cfg.slice_width,
                                            cfg.slice_max_stepout));
      }

    if (timing && !in_burn) {
      const double dt = std::chrono::duration<double>(clock::now() - t0).count();
      timing->per_sample_seconds[(sweep - cfg.burn_in) / cfg.T] += dt;
      timing->sampling_seconds += dt;
    }

    if (!in_burn && (sweep - cfg.burn_in + 1) % cfg.T == 0) {
      x.y = t.array().exp().matrix();
      out.samples.push_back(x);
      out.log_posterior_trace.push_back(lp_cur);
    }
  }

  out.acceptance_rate = 1.0;  // slice moves unconditionally
  out.density_eval_count = evals;
  out.final_beta_y = cfg.beta_y;
  out.final_beta_z = cfg.beta_z;
  return out;
}

/// Monte Carlo mean and population standard deviation of a state functional
/// over the retained samples.
inline std::pair<double, double> posterior_expectation(
    const PosteriorChain& chain, const std::function<double(const CMat&)>& functional) {
  if (chain.samples.empty())
    throw std::invalid_argument("posterior_expectation: empty chain");
  const auto R = static_cast<double>(chain.samples.size());
  double mean = 0.0;
  std::vector<double> vals;
  vals.reserve(chain.samples.size());
  for (const auto& x : chain.samples) {
    vals.push_back(functional(rho_from_params(x)));
    mean += vals.back();
  }
  mean /= R;
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= R;
  return {mean, std::sqrt(var)};
}

inline std::function<double(const CMat&)> fidelity_functional(CVec psi) {
  return [psi = std::move(psi)](const CMat& rho) { return fidelity(rho, psi); };
}

inline std::function<double(const CMat&)> purity_functional() {
  return [](const CMat& rho) { return purity(rho); };
}

}  // namespace bayestomo

#endif  // BAYESTOMO_INFERENCE_HPP
