// Density-matrix construction and the SU(D) generator (Bloch) machinery:
// the overparameterized state map, generalized Gell-Mann bases, observed
// subspace projectors, and the state functionals used in reporting.

#ifndef BAYESTOMO_STATES_HPP
#define BAYESTOMO_STATES_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace bayestomo {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

/// Overparameterization of a D x D density matrix: D positive weights y_k
/// and D complex direction vectors z_k (stored as columns of z). The map to
/// states normalizes both, so y is scale-free and each z_k is ray-like.
struct ParamVector {
  RVec y;   // D positive weights
  CMat z;   // D x D, column k is z_k

  Eigen::Index dim() const { return y.size(); }

  /// 2 D^2 + D real degrees of freedom.
  Eigen::Index real_dof() const { return 2 * dim() * dim() + dim(); }
};

inline void validate_params(const ParamVector& x) {
  const auto D = x.dim();
  if (D < 1 || x.z.rows() != D || x.z.cols() != D)
    throw std::invalid_argument("ParamVector: z must be D x D with D = y.size()");
  for (Eigen::Index k = 0; k < D; ++k) {
    if (!(x.y[k] > 0.0))
      throw std::domain_error("ParamVector: y must be strictly positive");
    if (!(x.z.col(k).squaredNorm() >= 1e-300))
      throw std::domain_error("ParamVector: z column is numerically zero");
  }
}

/// rho(x) = sum_k (y_k / sum_l y_l) z_k z_k^dag / |z_k|^2.
/// Hermitian, unit-trace and PSD by construction; O(D^3) via rank-1
/// Hermitian updates on the lower triangle.
inline CMat rho_from_params(const ParamVector& x) {
  validate_params(x);
  const auto D = x.dim();
  const double ysum = x.y.sum();
  CMat rho = CMat::Zero(D, D);
  auto lower = rho.selfadjointView<Eigen::Lower>();
  for (Eigen::Index k = 0; k < D; ++k) {
    const double w = x.y[k] / ysum;
    const double zn = x.z.col(k).squaredNorm();
    lower.rankUpdate(x.z.col(k), w / zn);
  }
  rho.triangularView<Eigen::StrictlyUpper>() =
      rho.triangularView<Eigen::StrictlyLower>().adjoint();
  return rho;
}

/// Residuals of the three physicality conditions for a density matrix.
struct DensityCheck {
  double hermiticity_residual = 0.0;  // max |rho - rho^dag| entrywise
  double trace_residual = 0.0;        // |Tr rho - 1|
  double min_eigenvalue = 0.0;

  bool ok(double herm_tol = 1e-12, double trace_tol = 1e-12,
          double psd_tol = -1e-10) const {
    return hermiticity_residual <= herm_tol && trace_residual <= trace_tol &&
           min_eigenvalue >= psd_tol;
  }
};

inline DensityCheck check_density_matrix(const CMat& rho) {
  DensityCheck c;
  c.hermiticity_residual = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  c.trace_residual = std::abs(rho.trace() - cplx(1.0, 0.0));
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (rho + rho.adjoint()),
                                         Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  return c;
}

/// D^2 - 1 traceless Hermitian generators normalized to Tr(l_k l_l) = 2 d_kl.
struct GeneratorBasis {
  enum class Kind { gellmann, pauli_product, custom };

  Eigen::Index D = 0;
  Kind kind = Kind::custom;
  std::vector<CMat> lambdas;

  Eigen::Index size() const { return static_cast<Eigen::Index>(lambdas.size()); }
};

/// Generalized Gell-Mann basis. Ordering (documented, stable):
///   1. symmetric  E_jk + E_kj            for 0 <= j < k < D, (j,k) lexicographic
///   2. antisymm.  -i (E_jk - E_kj)       same pair order
///   3. diagonal   sqrt(2/(l(l+1))) (sum_{m<l} E_mm - l E_ll)   for l = 1..D-1
/// For D = 2 this is exactly (sigma_x, sigma_y, sigma_z).
inline GeneratorBasis generator_basis(Eigen::Index D) {
  if (D < 2) throw std::domain_error("generator_basis: D must be >= 2");
  GeneratorBasis b;
  b.D = D;
  b.kind = GeneratorBasis::Kind::gellmann;
  b.lambdas.reserve(D * D - 1);
  const cplx I(0.0, 1.0);
  for (Eigen::Index j = 0; j < D; ++j)
    for (Eigen::Index k = j + 1; k < D; ++k) {
      CMat m = CMat::Zero(D, D);
      m(j, k) = 1.0;
      m(k, j) = 1.0;
      b.lambdas.push_back(m);
    }
  for (Eigen::Index j = 0; j < D; ++j)
    for (Eigen::Index k = j + 1; k < D; ++k) {
      CMat m = CMat::Zero(D, D);
      m(j, k) = -I;
      m(k, j) = I;
      b.lambdas.push_back(m);
    }
  for (Eigen::Index l = 1; l < D; ++l) {
    CMat m = CMat::Zero(D, D);
    const double s = std::sqrt(2.0 / (static_cast<double>(l) * (l + 1)));
    for (Eigen::Index j = 0; j < l; ++j) m(j, j) = s;
    m(l, l) = -s * static_cast<double>(l);
    b.lambdas.push_back(m);
  }
  return b;
}

/// Two-qubit Pauli-product basis: (P_i x P_j)/sqrt(2) for i,j in {I,X,Y,Z},
/// (i,j) != (I,I), ordered lexicographically. Index i*4+j-1 then aligns the
/// X/Z-only measurement directions with a plain index subset.
inline GeneratorBasis pauli_product_basis() {
  const cplx I(0.0, 1.0);
  std::vector<CMat> p(4, CMat::Zero(2, 2));
  p[0] << 1, 0, 0, 1;
  p[1] << 0, 1, 1, 0;
  p[2] << 0, -I, I, 0;
  p[3] << 1, 0, 0, -1;
  GeneratorBasis b;
  b.D = 4;
  b.kind = GeneratorBasis::Kind::pauli_product;
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (i == 0 && j == 0) continue;
      CMat m(4, 4);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
          m.block(2 * r, 2 * c, 2, 2) = p[i](r, c) * p[j];
      b.lambdas.push_back(s * m);
    }
  return b;
}

/// c_k = Tr(rho l_k); real for Hermitian input.
inline RVec bloch_coeffs(const CMat& rho, const GeneratorBasis& basis) {
  if (rho.rows() != basis.D || rho.cols() != basis.D)
    throw std::invalid_argument("bloch_coeffs: dimension mismatch");
  RVec c(basis.size());
  for (Eigen::Index k = 0; k < basis.size(); ++k) {
    const cplx t = (rho * basis.lambdas[k]).trace();
    if (std::abs(t.imag()) > 1e-12)
      throw std::runtime_error("bloch_coeffs: non-real coefficient (input not Hermitian?)");
    c[k] = t.real();
  }
  return c;
}

/// rho = I/D + (1/2) sum_k c_k l_k. Hermitian and unit trace, but PSD only
/// when c lies inside the state body: least-squares estimates may not be.
inline CMat rho_from_bloch(const RVec& c, const GeneratorBasis& basis) {
  if (c.size() != basis.size())
    throw std::invalid_argument("rho_from_bloch: coefficient length mismatch");
  CMat rho = CMat::Identity(basis.D, basis.D) / static_cast<double>(basis.D);
  for (Eigen::Index k = 0; k < basis.size(); ++k)
    rho.noalias() += (0.5 * c[k]) * basis.lambdas[k];
  return rho;
}

inline CVec vec(const CMat& m) {
  return Eigen::Map<const CVec>(m.data(), m.size());
}

inline CMat unvec(const CVec& v, Eigen::Index D) {
  return Eigen::Map<const CMat>(v.data(), D, D);
}

/// The subspace of generator directions constrained by a measurement set,
/// together with the precomputed linear map V with vec(P(rho)) = V vec(rho).
///
/// For the complete case (all indices observed) P is the identity; V is then
/// not materialized, since it would cost O(D^4) memory for nothing.
struct ObservedSubspace {
  Eigen::Index D = 0;
  std::vector<Eigen::Index> indices;  // sorted subset of {0 .. D^2-2}
  bool complete = false;
  CMat V;  // D^2 x D^2; empty when complete

  bool has_projector_matrix() const { return V.size() > 0; }

  /// P(rho): I/D plus the observed generator components of rho.
  CMat project(const CMat& rho) const {
    if (rho.rows() != D || rho.cols() != D)
      throw std::invalid_argument("ObservedSubspace: dimension mismatch");
    if (complete) return rho;
    return unvec(V * vec(rho), D);
  }
};

/// Build the observed-subspace projector for an index set (0-based indices
/// into `basis.lambdas`). V = vec(I)vec(I)^dag / D + (1/2) sum vec(l)vec(l)^dag
/// is the orthogonal projector, in the Hilbert-Schmidt sense, onto
/// span{I, l_k : k observed}.
inline ObservedSubspace observed_subspace(std::vector<Eigen::Index> indices,
                                          const GeneratorBasis& basis) {
  std::sort(indices.begin(), indices.end());
  for (auto k : indices)
    if (k < 0 || k >= basis.size())
      throw std::out_of_range("observed_subspace: generator index out of range");
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end())
    throw std::invalid_argument("observed_subspace: duplicate index");

  ObservedSubspace s;
  s.D = basis.D;
  s.indices = std::move(indices);
  if (static_cast<Eigen::Index>(s.indices.size()) == basis.size()) {
    s.complete = true;
    return s;
  }
  const CVec vi = vec(CMat::Identity(basis.D, basis.D));
  s.V = (vi * vi.adjoint()) / static_cast<double>(basis.D);
  for (auto k : s.indices) {
    const CVec vl = vec(basis.lambdas[k]);
    s.V.noalias() += 0.5 * (vl * vl.adjoint());
  }
  return s;
}

inline CMat project_observed(const CMat& rho, const ObservedSubspace& s) {
  return s.project(rho);
}

/// <psi|rho|psi> for a unit vector psi; the imaginary residual must be noise.
inline double fidelity(const CMat& rho, const CVec& psi) {
  if (psi.size() != rho.rows())
    throw std::invalid_argument("fidelity: dimension mismatch");
  if (std::abs(psi.norm() - 1.0) > 1e-12)
    throw std::invalid_argument("fidelity: psi is not normalized");
  const cplx f = psi.dot(rho * psi);  // dot conjugates the left argument
  if (std::abs(f.imag()) > 1e-12)
    throw std::runtime_error("fidelity: non-negligible imaginary part");
  return std::clamp(f.real(), 0.0, 1.0);
}

/// Tr(rho^2); equals the squared Frobenius norm for Hermitian rho.
inline double purity(const CMat& rho) { return rho.squaredNorm(); }

}  // namespace bayestomo

#endif  // BAYESTOMO_STATES_HPP
