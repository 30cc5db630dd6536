// Measurement construction and simulation: Weyl shift/clock operators,
// mutually unbiased bases for prime qudit dimension, two-qudit product
// measurement sets with precomputed probability maps, ground-truth states,
// multinomial count simulation, and least-squares inversion with
// observed-subspace detection.

#ifndef BAYESTOMO_MEASUREMENTS_HPP
#define BAYESTOMO_MEASUREMENTS_HPP

#include <cstdint>
#include <iostream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "bayestomo/rng.hpp"
#include "bayestomo/states.hpp"

namespace bayestomo {

inline bool is_prime(long n) {
  if (n < 2) return false;
  for (long k = 2; k * k <= n; ++k)
    if (n % k == 0) return false;
  return true;
}

/// Weyl shift X|m> = |m+1 mod d> and clock Z|m> = w^m |m>, w = exp(2 pi i/d).
inline std::pair<CMat, CMat> weyl_operators(long d) {
  if (!is_prime(d))
    throw std::domain_error("weyl_operators: dimension must be prime");
  CMat X = CMat::Zero(d, d);
  CMat Z = CMat::Zero(d, d);
  for (long m = 0; m < d; ++m) {
    X((m + 1) % d, m) = 1.0;
    const double t = 2.0 * M_PI * static_cast<double>(m) / static_cast<double>(d);
    Z(m, m) = cplx(std::cos(t), std::sin(t));
  }
  return {X, Z};
}

namespace detail {

/// Eigenbasis of a unitary U with U^d proportional to the identity, via the
/// power-sum eigenprojectors P_m = (1/d) sum_t (U/mu_m)^t. Fully
/// deterministic: eigenvalues are ordered by m and each vector's first
/// non-negligible component is made real positive.
inline CMat unitary_eigenbasis(const CMat& U) {
  const Eigen::Index d = U.rows();
  std::vector<CMat> pow(d);
  pow[0] = CMat::Identity(d, d);
  for (Eigen::Index t = 1; t < d; ++t) pow[t] = pow[t - 1] * U;
  const CMat Ud = pow[d - 1] * U;
  const cplx c = Ud(0, 0);
  if ((Ud - c * CMat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
    throw std::runtime_error("unitary_eigenbasis: U^d is not scalar");

  const double base_arg = std::arg(c) / static_cast<double>(d);
  CMat basis(d, d);
  for (Eigen::Index m = 0; m < d; ++m) {
    const double th = base_arg + 2.0 * M_PI * static_cast<double>(m) / static_cast<double>(d);
    const cplx mu(std::cos(th), std::sin(th));
    CMat proj = CMat::Zero(d, d);
    cplx mu_inv_t = 1.0;
    for (Eigen::Index t = 0; t < d; ++t) {
      proj += mu_inv_t * pow[t];
      mu_inv_t /= mu;
    }
    proj /= static_cast<double>(d);
    Eigen::Index best = 0;
    proj.colwise().norm().maxCoeff(&best);
    CVec v = proj.col(best);
    v.normalize();
    for (Eigen::Index i = 0; i < d; ++i) {
      if (std::abs(v[i]) > 1e-8) {
        v *= std::conj(v[i]) / std::abs(v[i]);
        break;
      }
    }
    basis.col(m) = v;
  }
  return basis;
}

inline CVec kron_vec(const CVec& u, const CVec& v) {
  CVec w(u.size() * v.size());
  for (Eigen::Index a = 0; a < u.size(); ++a)
    w.segment(a * v.size(), v.size()) = u[a] * v;
  return w;
}

}  // namespace detail

/// The d+1 mutually unbiased bases for prime d: the computational (Z)
/// eigenbasis followed by the eigenbases of X Z^j for j = 0..d-1.
/// Each basis is returned as a matrix whose columns are the basis vectors.
inline std::vector<CMat> mub_bases(long d) {
  if (!is_prime(d))
    throw std::domain_error("mub_bases: dimension must be prime");
  auto [X, Z] = weyl_operators(d);
  std::vector<CMat> bases;
  bases.reserve(d + 1);
  bases.push_back(CMat::Identity(d, d));
  CMat Zj = CMat::Identity(d, d);
  for (long j = 0; j < d; ++j) {
    bases.push_back(detail::unitary_eigenbasis(X * Zj));
    Zj = Zj * Z;
  }
  return bases;
}

/// One measurement setting: a POVM given by its outcome operators.
struct Povm {
  std::vector<CMat> operators;

  Eigen::Index size() const { return static_cast<Eigen::Index>(operators.size()); }
};

/// A full measurement configuration with the vectorized probability map W
/// (row per outcome, W vec(rho) = outcome probabilities) and the observed
/// generator subspace implied by the set.
struct MeasurementSet {
  Eigen::Index D = 0;
  long qudit_dim = 0;          // d, when the set is a two-qudit construction
  std::string type = "custom"; // "mub2", "xz2qubit" or "custom"
  std::vector<Povm> povms;
  std::vector<std::string> setting_ids;
  CMat W;                              // total_outcomes x D^2
  std::vector<CVec> outcome_vectors;   // per row, when every operator is rank one
  GeneratorBasis basis;
  ObservedSubspace subspace;
  bool complete_product_mub = false;

  Eigen::Index settings() const { return static_cast<Eigen::Index>(povms.size()); }

  Eigen::Index outcomes(Eigen::Index q) const { return povms[q].size(); }

  Eigen::Index total_outcomes() const { return W.rows(); }

  Eigen::Index row_offset(Eigen::Index q) const {
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < q; ++i) r += povms[i].size();
    return r;
  }
};

/// Stacked affine probability model p = a0 + A c over generator coefficients:
/// a0_r = Tr(L_r)/D and A_{r,k} = Tr(L_r l_k)/2, rows in W order.
/// Rank-one outcomes with a Gell-Mann basis use an O(D^2)-per-row closed form;
/// anything else falls back to explicit traces.
inline RMat design_matrix(const MeasurementSet& m) {
  const Eigen::Index D = m.D;
  const Eigen::Index rows = m.total_outcomes();
  const Eigen::Index cols = D * D - 1;
  RMat A(rows, cols);

  const bool fast = m.basis.kind == GeneratorBasis::Kind::gellmann &&
                    static_cast<Eigen::Index>(m.outcome_vectors.size()) == rows;
  if (fast) {
    const Eigen::Index npairs = D * (D - 1) / 2;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const CVec& w = m.outcome_vectors[r];
      Eigen::Index pos = 0;
      for (Eigen::Index j = 0; j < D; ++j)
        for (Eigen::Index k = j + 1; k < D; ++k, ++pos) {
          const cplx t = std::conj(w[j]) * w[k];
          A(r, pos) = t.real();
          A(r, npairs + pos) = t.imag();
        }
      double cum = std::norm(w[0]);
      for (Eigen::Index l = 1; l < D; ++l) {
        const double s = std::sqrt(2.0 / (static_cast<double>(l) * (l + 1)));
        A(r, 2 * npairs + l - 1) = 0.5 * s * (cum - static_cast<double>(l) * std::norm(w[l]));
        cum += std::norm(w[l]);
      }
    }
    return A;
  }

  Eigen::Index r = 0;
  for (const auto& povm : m.povms)
    for (const auto& op : povm.operators) {
      for (Eigen::Index k = 0; k < cols; ++k)
        A(r, k) = 0.5 * (op * m.basis.lambdas[k]).trace().real();
      ++r;
    }
  return A;
}

namespace detail {

/// Observed generator directions = design-matrix columns that actually move
/// some outcome probability.
inline std::vector<Eigen::Index> detect_observed_indices(const RMat& A,
                                                         double tol = 1e-10) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index k = 0; k < A.cols(); ++k)
    if (A.col(k).norm() > tol) idx.push_back(k);
  return idx;
}

inline MeasurementSet assemble_set(std::vector<Povm> povms,
                                   std::vector<std::string> ids,
                                   GeneratorBasis basis, long qudit_dim,
                                   std::string type,
                                   std::vector<CVec> outcome_vectors,
                                   bool complete_product_mub) {
  MeasurementSet m;
  m.D = basis.D;
  m.qudit_dim = qudit_dim;
  m.type = std::move(type);
  m.povms = std::move(povms);
  m.setting_ids = std::move(ids);
  m.basis = std::move(basis);
  m.outcome_vectors = std::move(outcome_vectors);
  m.complete_product_mub = complete_product_mub;

  Eigen::Index rows = 0;
  for (const auto& p : m.povms) rows += p.size();
  m.W.resize(rows, m.D * m.D);
  Eigen::Index r = 0;
  for (const auto& p : m.povms)
    for (const auto& op : p.operators) m.W.row(r++) = vec(op).adjoint();

  if (complete_product_mub) {
    std::vector<Eigen::Index> all(m.basis.size());
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    m.subspace = observed_subspace(all, m.basis);
  } else {
    m.subspace = observed_subspace(detect_observed_indices(design_matrix(m)),
                                   m.basis);
  }
  return m;
}

}  // namespace detail

/// All (d+1)^2 pairwise MUB combinations on two qudits of prime dimension d:
/// Q = (d+1)^2 settings with D = d^2 rank-one product projectors each.
/// Tomographically complete, so the observed subspace is everything.
inline MeasurementSet two_qudit_mub_measurements(long d) {
  const auto bases = mub_bases(d);  // validates primality
  const Eigen::Index D = static_cast<Eigen::Index>(d) * d;
  GeneratorBasis basis =
      (D == 4) ? pauli_product_basis() : generator_basis(D);

  std::vector<Povm> povms;
  std::vector<std::string> ids;
  std::vector<CVec> vectors;
  povms.reserve((d + 1) * (d + 1));
  for (long q1 = 0; q1 <= d; ++q1)
    for (long q2 = 0; q2 <= d; ++q2) {
      Povm p;
      p.operators.reserve(D);
      for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) {
          CVec w = detail::kron_vec(bases[q1].col(i), bases[q2].col(j));
          p.operators.push_back(w * w.adjoint());
          vectors.push_back(std::move(w));
        }
      povms.push_back(std::move(p));
      ids.push_back(std::to_string(q1) + "-" + std::to_string(q2));
    }
  return detail::assemble_set(std::move(povms), std::move(ids), std::move(basis),
                              d, "mub2", std::move(vectors), true);
}

/// The four two-qubit settings {X,Z} x {X,Z}. Pauli-Y is never measured, so
/// only 8 of the 15 Pauli-product directions are observed.
inline MeasurementSet two_qubit_xz_measurements() {
  const auto bases = mub_bases(2);
  const CMat& zb = bases[0];
  const CMat& xb = bases[1];  // eigenbasis of X Z^0
  const std::vector<std::pair<std::string, const CMat*>> axes = {{"x", &xb},
                                                                 {"z", &zb}};
  std::vector<Povm> povms;
  std::vector<std::string> ids;
  std::vector<CVec> vectors;
  for (const auto& [n1, b1] : axes)
    for (const auto& [n2, b2] : axes) {
      Povm p;
      for (long i = 0; i < 2; ++i)
        for (long j = 0; j < 2; ++j) {
          CVec w = detail::kron_vec(b1->col(i), b2->col(j));
          p.operators.push_back(w * w.adjoint());
          vectors.push_back(std::move(w));
        }
      povms.push_back(std::move(p));
      ids.push_back(n1 + "-" + n2);
    }
  return detail::assemble_set(std::move(povms), std::move(ids),
                              pauli_product_basis(), 2, "xz2qubit",
                              std::move(vectors), false);
}

/// Assemble a set from explicit POVMs; the observed subspace is detected
/// from the design matrix.
inline MeasurementSet make_measurement_set(std::vector<Povm> povms,
                                           GeneratorBasis basis,
                                           std::vector<std::string> ids = {}) {
  if (ids.empty())
    for (std::size_t q = 0; q < povms.size(); ++q)
      ids.push_back("q" + std::to_string(q));
  return detail::assemble_set(std::move(povms), std::move(ids), std::move(basis),
                              0, "custom", {}, false);
}

inline MeasurementSet measurement_set_from(long d, const std::string& type) {
  if (type == "mub2") return two_qudit_mub_measurements(d);
  if (type == "xz2qubit") {
    if (d != 2)
      throw std::invalid_argument("measurement_set_from: xz2qubit requires d = 2");
    return two_qubit_xz_measurements();
  }
  throw std::invalid_argument("measurement_set_from: unknown type \"" + type + "\"");
}

/// Maximally entangled two-qudit target |Psi> = (1/sqrt d) sum_k |k>|k>.
inline CVec ideal_bell_state(long d) {
  CVec psi = CVec::Zero(static_cast<Eigen::Index>(d) * d);
  const double a = 1.0 / std::sqrt(static_cast<double>(d));
  for (long k = 0; k < d; ++k) psi[k * d + k] = a;
  return psi;
}

/// rho = lambda |Psi><Psi| + (1-lambda) I/D on D = d^2.
inline CMat ground_truth_state(long d, double lambda) {
  if (lambda < 0.0 || lambda > 1.0)
    throw std::domain_error("ground_truth_state: lambda must lie in [0,1]");
  if (lambda == 0.0 || lambda == 1.0)
    std::cerr << "ground_truth_state: lambda at interval endpoint "
              << lambda << "\n";
  const Eigen::Index D = static_cast<Eigen::Index>(d) * d;
  const CVec psi = ideal_bell_state(d);
  return lambda * (psi * psi.adjoint()) +
         ((1.0 - lambda) / static_cast<double>(D)) * CMat::Identity(D, D);
}

/// Outcome probabilities of setting q via the W map; tiny negative values
/// from rounding are clipped to zero.
inline RVec outcome_probabilities(const CMat& rho, const MeasurementSet& m,
                                  Eigen::Index q) {
  if (q < 0 || q >= m.settings())
    throw std::out_of_range("outcome_probabilities: setting index out of range");
  const Eigen::Index S = m.outcomes(q);
  const CVec pr = m.W.middleRows(m.row_offset(q), S) * vec(rho);
  RVec p(S);
  for (Eigen::Index s = 0; s < S; ++s) {
    const double v = pr[s].real();
    if (v < -1e-12)
      throw std::runtime_error("outcome_probabilities: negative probability");
    p[s] = std::max(v, 0.0);
  }
  return p;
}

/// Per-setting outcome counts N_s^(q) with their totals.
struct CountData {
  std::vector<std::vector<long>> counts;
  std::vector<long> per_setting_totals;
  long grand_total = 0;

  Eigen::Index settings() const { return static_cast<Eigen::Index>(counts.size()); }

  void recompute_totals() {
    per_setting_totals.clear();
    grand_total = 0;
    for (const auto& row : counts) {
      const long t = std::accumulate(row.begin(), row.end(), 0L);
      per_setting_totals.push_back(t);
      grand_total += t;
    }
  }
};

/// Draw exact multinomial counts for every setting: sequential binomial
/// conditioning on an independent, deterministically derived stream per
/// setting, so results do not depend on evaluation order.
inline CountData simulate_counts(const CMat& rho, const MeasurementSet& m,
                                 long shots_per_setting, std::uint64_t seed) {
  if (shots_per_setting < 1)
    throw std::domain_error("simulate_counts: shots_per_setting must be >= 1");
  CountData data;
  data.counts.resize(m.settings());
  for (Eigen::Index q = 0; q < m.settings(); ++q) {
    const RVec p = outcome_probabilities(rho, m, q);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(q)));
    std::vector<long>& row = data.counts[q];
    row.assign(p.size(), 0);
    long remaining = shots_per_setting;
    double mass = 1.0;
    for (Eigen::Index s = 0; s + 1 < p.size() && remaining > 0; ++s) {
      const double cond = mass > 0.0 ? std::clamp(p[s] / mass, 0.0, 1.0) : 0.0;
      const long k = rng.binomial(remaining, cond);
      row[s] = k;
      remaining -= k;
      mass -= p[s];
    }
    row[p.size() - 1] += remaining;
  }
  data.recompute_totals();
  return data;
}

/// Least-squares inversion result: the (possibly non-PSD) estimate together
/// with the observed subspace it lives in.
struct LeastSquaresEstimate {
  CMat rho_ls;
  ObservedSubspace subspace;
  RVec coeffs;  // generator coefficients, zero outside the subspace
};

namespace detail {

inline CMat partial_trace_a(const CMat& M, long d) {
  CMat out = CMat::Zero(d, d);
  for (long b = 0; b < d; ++b)
    for (long bp = 0; bp < d; ++bp)
      for (long a = 0; a < d; ++a) out(b, bp) += M(a * d + b, a * d + bp);
  return out;
}

inline CMat partial_trace_b(const CMat& M, long d) {
  CMat out = CMat::Zero(d, d);
  for (long a = 0; a < d; ++a)
    for (long ap = 0; ap < d; ++ap)
      for (long b = 0; b < d; ++b) out(a, ap) += M(a * d + b, ap * d + b);
  return out;
}

/// Exact ordinary-least-squares solution for complete two-qudit product-MUB
/// sets, avoiding a dense decomposition whose cost is prohibitive at large D.
/// The normal operator of the stacked design is the product frame map
/// F(C) = C + Tr_B(C) x I + I x Tr_A(C) + Tr(C) I, which on traceless C is
/// invertible sector-wise: eigenvalue 1 on the doubly-traceless sector and
/// d+1 on the one-sided identity sectors.
inline CMat product_mub_least_squares(const RVec& stacked_freq,
                                      const MeasurementSet& m) {
  const long d = m.qudit_dim;
  const Eigen::Index D = m.D;
  CMat R = CMat::Zero(D, D);
  Eigen::Index r = 0;
  for (Eigen::Index q = 0; q < m.settings(); ++q)
    for (Eigen::Index s = 0; s < m.outcomes(q); ++s, ++r) {
      const double b = stacked_freq[r] - 1.0 / static_cast<double>(D);
      const CVec& w = m.outcome_vectors[r];
      R.noalias() += b * (w * w.adjoint());
    }
  CMat G = R - (R.trace() / static_cast<double>(D)) * CMat::Identity(D, D);
  G *= 2.0;

  const CMat ga = partial_trace_b(G, d);  // traceless d x d on party A
  const CMat gb = partial_trace_a(G, d);
  CMat ga_term = CMat::Zero(D, D);
  CMat gb_term = CMat::Zero(D, D);
  for (long a = 0; a < d; ++a)
    for (long ap = 0; ap < d; ++ap)
      for (long b = 0; b < d; ++b) {
        ga_term(a * d + b, ap * d + b) = ga(a, ap) / static_cast<double>(d);
        gb_term(b * d + a, b * d + ap) = gb(a, ap) / static_cast<double>(d);
      }
  const CMat g0 = G - ga_term - gb_term;
  const CMat C = g0 + (ga_term + gb_term) / static_cast<double>(d + 1);
  return CMat::Identity(D, D) / static_cast<double>(D) + 0.5 * C;
}

}  // namespace detail

/// Ordinary least squares for the generator coefficients from per-setting
/// outcome frequencies (stacked in W row order). Unobserved directions are
/// detected by vanishing design columns and pinned to zero.
inline LeastSquaresEstimate least_squares_estimate(const RVec& stacked_freq,
                                                   const MeasurementSet& m) {
  if (stacked_freq.size() != m.total_outcomes())
    throw std::invalid_argument("least_squares_estimate: frequency length mismatch");

  // Large complete product-MUB systems get the closed-form OLS solution;
  // the generic path is a rank-revealing orthogonal decomposition.
  if (m.complete_product_mub && m.D > 9) {
    LeastSquaresEstimate out;
    out.rho_ls = detail::product_mub_least_squares(stacked_freq, m);
    out.subspace = m.subspace;
    out.coeffs = RVec();  // not materialized at large D
    return out;
  }

  const RMat A = design_matrix(m);
  const auto k_m = detail::detect_observed_indices(A);
  RMat Ak(A.rows(), static_cast<Eigen::Index>(k_m.size()));
  for (Eigen::Index i = 0; i < Ak.cols(); ++i) Ak.col(i) = A.col(k_m[i]);

  RVec b = stacked_freq;
  Eigen::Index r = 0;
  for (const auto& povm : m.povms)
    for (const auto& op : povm.operators)
      b[r++] -= op.trace().real() / static_cast<double>(m.D);

  Eigen::CompleteOrthogonalDecomposition<RMat> cod(Ak);
  if (cod.rank() < Ak.cols())
    std::cerr << "least_squares_estimate: design rank " << cod.rank() << " < "
              << Ak.cols() << " observed directions; using minimum-norm solution\n";
  const RVec ck = cod.solve(b);

  LeastSquaresEstimate out;
  out.coeffs = RVec::Zero(m.basis.size());
  for (std::size_t i = 0; i < k_m.size(); ++i) out.coeffs[k_m[i]] = ck[i];
  out.rho_ls = rho_from_bloch(out.coeffs, m.basis);
  out.subspace = observed_subspace(k_m, m.basis);
  return out;
}

inline LeastSquaresEstimate least_squares_estimate(const CountData& counts,
                                                   const MeasurementSet& m) {
  if (counts.settings() != m.settings())
    throw std::invalid_argument("least_squares_estimate: setting count mismatch");
  if (counts.settings() == 0)
    throw std::invalid_argument("least_squares_estimate: empty counts");
  RVec f(m.total_outcomes());
  Eigen::Index r = 0;
  for (Eigen::Index q = 0; q < counts.settings(); ++q) {
    const auto& row = counts.counts[q];
    if (static_cast<Eigen::Index>(row.size()) != m.outcomes(q))
      throw std::invalid_argument("least_squares_estimate: outcome count mismatch");
    const long total = counts.per_setting_totals[q];
    if (total < 1)
      throw std::invalid_argument("least_squares_estimate: setting with zero shots");
    for (long c : row) f[r++] = static_cast<double>(c) / static_cast<double>(total);
  }
  return least_squares_estimate(f, m);
}

}  // namespace bayestomo

#endif  // BAYESTOMO_MEASUREMENTS_HPP
