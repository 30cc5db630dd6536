// Deterministic random number generation for samplers and simulation.
//
// All variate transforms are implemented here rather than through
// std::*_distribution so that a fixed seed produces the same stream on
// every standard library. The engine itself (mt19937_64) is fully
// specified by the C++ standard.

#ifndef BAYESTOMO_RNG_HPP
#define BAYESTOMO_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace bayestomo {

/// SplitMix64 mixing step (Steele, Lea, Flood 2014). Used to derive
/// well-separated seeds for independent streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for the i-th independent stream of a study keyed by `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return master ^ splitmix64(index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t raw() { return eng_(); }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; safe as a logarithm argument.
  double uniform_pos() {
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // rejection to avoid modulo bias
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v = eng_();
    while (v >= limit) v = eng_();
    return v % n;
  }

  /// Standard normal via the Marsaglia polar method; the second variate of
  /// each accepted pair is cached. Proposals draw normals in bulk, so this
  /// sits on the sampler's hot path.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    for (;;) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double s = u * u + v * v;
      if (s >= 1.0 || s == 0.0) continue;
      const double f = std::sqrt(-2.0 * std::log(s) / s);
      cached_ = v * f;
      has_cached_ = true;
      return u * f;
    }
  }

  /// Gamma(alpha, 1) via Marsaglia-Tsang squeeze; alpha < 1 handled with
  /// the usual power-of-uniform boost.
  double gamma(double alpha) {
    if (!(alpha > 0.0)) throw std::domain_error("gamma: alpha must be > 0");
    if (alpha < 1.0) {
      const double u = uniform_pos();
      return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Binomial(n, p) by mode-centered two-sided CDF inversion. Exact in
  /// distribution (up to floating point) for any n representable in long,
  /// with expected O(sqrt(n p (1-p))) work.
  long binomial(long n, double p) {
    if (n < 0) throw std::domain_error("binomial: n must be >= 0");
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;

    const double q = 1.0 - p;
    const long mode = static_cast<long>(std::floor((n + 1) * p));
    const long m = std::min(mode, n);
    // log pmf at the mode; always representable since pmf(mode) >= ~1/n
    const double lpm = std::lgamma(n + 1.0) - std::lgamma(m + 1.0) -
                       std::lgamma(n - m + 1.0) + m * std::log(p) +
                       n * std::log(q) - m * std::log(q);
    const double pm = std::exp(lpm);

    double u = uniform();
    if (u <= pm) return m;
    u -= pm;

    // expand outward, alternating sides while both remain in range
    double f_up = pm, f_dn = pm;
    long k_up = m, k_dn = m;
    for (;;) {
      bool moved = false;
      if (k_up < n) {
        f_up *= (static_cast<double>(n - k_up) / (k_up + 1)) * (p / q);
        ++k_up;
        if (u <= f_up) return k_up;
        u -= f_up;
        moved = true;
      }
      if (k_dn > 0) {
        f_dn *= (static_cast<double>(k_dn) / (n - k_dn + 1)) * (q / p);
        --k_dn;
        if (u <= f_dn) return k_dn;
        u -= f_dn;
        moved = true;
      }
      if (!moved) return m;  // accumulated rounding; fall back to the mode
    }
  }

 private:
  std::mt19937_64 eng_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace bayestomo

#endif  // BAYESTOMO_RNG_HPP
