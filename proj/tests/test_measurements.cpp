#include <catch2/catch.hpp>

#include "bayestomo/inference.hpp"
#include "bayestomo/measurements.hpp"

using namespace bayestomo;

namespace {

CMat random_state(Eigen::Index D, Rng& rng) {
  return rho_from_params(sample_prior(PriorConfig{1.0, D}, rng));
}

}  // namespace

TEST_CASE("weyl_operators shift and clock structure", "[measurements]") {
  SECTION("d = 2 reduces to Pauli X and Z") {
    const auto [X, Z] = weyl_operators(2);
    CMat sx(2, 2), sz(2, 2);
    sx << 0, 1, 1, 0;
    sz << 1, 0, 0, -1;
    CHECK((X - sx).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((Z - sz).cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("order d: X^d = Z^d = I") {
    const auto [X, Z] = weyl_operators(3);
    CHECK(((X * X * X) - CMat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(((Z * Z * Z) - CMat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("commutation ZX = w XZ") {
    for (long d : {2L, 3L, 5L, 7L}) {
      const auto [X, Z] = weyl_operators(d);
      const cplx w = std::exp(cplx(0.0, 2.0 * M_PI / static_cast<double>(d)));
      CHECK(((Z * X) - w * (X * Z)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SECTION("unitarity") {
    for (long d : {2L, 5L}) {
      const auto [X, Z] = weyl_operators(d);
      CHECK((X.adjoint() * X - CMat::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((Z.adjoint() * Z - CMat::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SECTION("non-prime dimensions are rejected") {
    CHECK_THROWS_AS(weyl_operators(4), std::domain_error);
    CHECK_THROWS_AS(weyl_operators(1), std::domain_error);
    CHECK_THROWS_AS(weyl_operators(6), std::domain_error);
  }
}

TEST_CASE("mub_bases are orthonormal and mutually unbiased", "[measurements]") {
  for (long d : {2L, 3L, 5L, 7L}) {
    const auto bases = mub_bases(d);
    REQUIRE(bases.size() == static_cast<std::size_t>(d + 1));
    const double target = 1.0 / static_cast<double>(d);
    for (std::size_t q = 0; q < bases.size(); ++q) {
      CHECK((bases[q].adjoint() * bases[q] - CMat::Identity(d, d))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
      for (std::size_t p = q + 1; p < bases.size(); ++p)
        for (long i = 0; i < d; ++i)
          for (long j = 0; j < d; ++j) {
            const double overlap2 = std::norm(bases[q].col(i).dot(bases[p].col(j)));
            CHECK(std::abs(overlap2 - target) < 1e-10);
          }
    }
  }
  SECTION("non-prime d is rejected") { CHECK_THROWS_AS(mub_bases(4), std::domain_error); }
  SECTION("construction is deterministic with a fixed phase convention") {
    const auto a = mub_bases(3);
    const auto b = mub_bases(3);
    for (std::size_t q = 0; q < a.size(); ++q) {
      CHECK((a[q] - b[q]).cwiseAbs().maxCoeff() == 0.0);
      for (long i = 0; i < 3; ++i) {
        // first non-negligible component is real positive
        long lead = 0;
        while (std::abs(a[q](lead, i)) <= 1e-8) ++lead;
        CHECK(a[q](lead, i).imag() == Approx(0.0).margin(1e-14));
        CHECK(a[q](lead, i).real() > 0.0);
      }
    }
  }
}

TEST_CASE("two_qudit_mub_measurements layout and completeness", "[measurements]") {
  SECTION("setting and outcome counts") {
    const MeasurementSet m2 = two_qudit_mub_measurements(2);
    CHECK(m2.settings() == 9);
    for (Eigen::Index q = 0; q < m2.settings(); ++q) CHECK(m2.outcomes(q) == 4);

    const MeasurementSet m3 = two_qudit_mub_measurements(3);
    CHECK(m3.settings() == 16);
    for (Eigen::Index q = 0; q < m3.settings(); ++q) CHECK(m3.outcomes(q) == 9);
  }
  SECTION("POVM elements are PSD and complete per setting") {
    const MeasurementSet m = two_qudit_mub_measurements(2);
    for (const auto& povm : m.povms) {
      CMat sum = CMat::Zero(m.D, m.D);
      for (const auto& op : povm.operators) {
        CHECK((op - op.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::SelfAdjointEigenSolver<CMat> es(op, Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() > -1e-10);
        sum += op;
      }
      CHECK((sum - CMat::Identity(m.D, m.D)).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
  SECTION("stacked probability rows have full rank over unit-trace states") {
    for (long d : {2L, 3L}) {
      const MeasurementSet m = two_qudit_mub_measurements(d);
      const RMat A = design_matrix(m);
      RMat full(A.rows(), A.cols() + 1);
      full.col(0).setOnes();  // identity-direction column, Tr(L)/D = 1/D
      full.rightCols(A.cols()) = A;
      Eigen::ColPivHouseholderQR<RMat> qr(full);
      qr.setThreshold(1e-10);
      CHECK(qr.rank() == m.D * m.D);
      CHECK(m.subspace.complete);
    }
  }
}

TEST_CASE("two_qubit_xz_measurements observes 8 of 15 directions", "[measurements]") {
  const MeasurementSet m = two_qubit_xz_measurements();
  REQUIRE(m.settings() == 4);

  SECTION("detected index set") {
    CHECK(m.subspace.indices.size() == 8);
    CHECK(m.subspace.indices ==
          std::vector<Eigen::Index>{0, 2, 3, 4, 6, 11, 12, 14});
  }
  SECTION("design rank on the traceless subspace is 8") {
    const RMat A = design_matrix(m);
    Eigen::ColPivHouseholderQR<RMat> qr(A);
    qr.setThreshold(1e-10);
    CHECK(qr.rank() == 8);
  }
  SECTION("vanishing design columns are exactly the unobserved directions") {
    const RMat A = design_matrix(m);
    std::vector<Eigen::Index> observed;
    for (Eigen::Index k = 0; k < A.cols(); ++k)
      if (A.col(k).norm() > 1e-10) observed.push_back(k);
    CHECK(observed == m.subspace.indices);
  }
  SECTION("Y-type coefficients are annihilated") {
    Rng rng(11);
    const CMat rho = random_state(4, rng);
    const RVec c = bloch_coeffs(project_observed(rho, m.subspace), m.basis);
    // indices carrying a Pauli Y on either qubit
    for (Eigen::Index k : {1, 5, 7, 8, 9, 10, 13}) CHECK(std::abs(c[k]) < 1e-12);
    CHECK((project_observed(rho, m.subspace) - rho).cwiseAbs().maxCoeff() > 1e-3);
  }
}

TEST_CASE("ground_truth_state endpoints and spectrum", "[measurements]") {
  SECTION("lambda = 1 is the pure Bell state") {
    const CMat rho = ground_truth_state(2, 1.0);
    CHECK(purity(rho) == Approx(1.0).margin(1e-12));
    CHECK(fidelity(rho, ideal_bell_state(2)) == Approx(1.0).margin(1e-12));
  }
  SECTION("lambda = 0 is maximally mixed") {
    const CMat rho = ground_truth_state(3, 0.0);
    CHECK((rho - CMat::Identity(9, 9) / 9.0).cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("lambda = 0.95 has the analytic fidelity") {
    CHECK(fidelity(ground_truth_state(2, 0.95), ideal_bell_state(2)) ==
          Approx(0.9625).margin(1e-12));
  }
  SECTION("lambda outside [0,1] is rejected") {
    CHECK_THROWS_AS(ground_truth_state(2, -0.1), std::domain_error);
    CHECK_THROWS_AS(ground_truth_state(2, 1.1), std::domain_error);
  }
}

TEST_CASE("outcome_probabilities behavior", "[measurements]") {
  const MeasurementSet m = two_qudit_mub_measurements(2);

  SECTION("maximally mixed state is uniform on projective settings") {
    const CMat rho = CMat::Identity(4, 4) / 4.0;
    for (Eigen::Index q = 0; q < m.settings(); ++q) {
      const RVec p = outcome_probabilities(rho, m, q);
      for (Eigen::Index s = 0; s < p.size(); ++s)
        CHECK(p[s] == Approx(0.25).margin(1e-12));
    }
  }
  SECTION("pure Bell state in the doubled computational basis") {
    // setting (0,0) measures computational x computational
    const RVec p = outcome_probabilities(ground_truth_state(2, 1.0), m, 0);
    CHECK(p[0] == Approx(0.5).margin(1e-12));  // outcome (0,0)
    CHECK(p[3] == Approx(0.5).margin(1e-12));  // outcome (1,1)
    CHECK(p[1] == Approx(0.0).margin(1e-12));
    CHECK(p[2] == Approx(0.0).margin(1e-12));
  }
  SECTION("W path agrees with direct traces and rows sum to unit trace") {
    Rng rng(2024);
    const MeasurementSet m3 = two_qudit_mub_measurements(3);
    for (int rep = 0; rep < 100; ++rep) {
      const CMat rho = random_state(m3.D, rng);
      const auto q = static_cast<Eigen::Index>(rng.below(m3.settings()));
      const RVec p = outcome_probabilities(rho, m3, q);
      double sum = 0.0;
      for (Eigen::Index s = 0; s < p.size(); ++s) {
        const double direct =
            (rho * m3.povms[q].operators[s]).trace().real();  // oracle
        CHECK(std::abs(p[s] - direct) < 1e-12);
        sum += p[s];
      }
      CHECK(std::abs(sum - 1.0) < 1e-10);
    }
  }
  SECTION("setting index out of range throws") {
    CHECK_THROWS_AS(outcome_probabilities(CMat::Identity(4, 4) / 4.0, m, 9),
                    std::out_of_range);
  }
}

TEST_CASE("simulate_counts totals, determinism, convergence", "[measurements]") {
  const MeasurementSet m = two_qudit_mub_measurements(2);
  const CMat rho = ground_truth_state(2, 0.95);

  SECTION("per-setting sums equal the requested shots; grand total 3600") {
    const CountData c = simulate_counts(rho, m, 400, 42);
    for (Eigen::Index q = 0; q < c.settings(); ++q) {
      long sum = 0;
      for (long v : c.counts[q]) {
        CHECK(v >= 0);
        sum += v;
      }
      CHECK(sum == 400);
      CHECK(c.per_setting_totals[q] == 400);
    }
    CHECK(c.grand_total == 3600);
  }
  SECTION("identical seeds give identical counts, different seeds differ") {
    const CountData a = simulate_counts(rho, m, 400, 7);
    const CountData b = simulate_counts(rho, m, 400, 7);
    const CountData c = simulate_counts(rho, m, 400, 8);
    CHECK(a.counts == b.counts);
    CHECK(a.counts != c.counts);
  }
  SECTION("frequencies approach probabilities at a million shots") {
    const CountData c = simulate_counts(rho, m, 1000000, 13);
    for (Eigen::Index q = 0; q < m.settings(); ++q) {
      const RVec p = outcome_probabilities(rho, m, q);
      for (Eigen::Index s = 0; s < p.size(); ++s) {
        const double f = static_cast<double>(c.counts[q][s]) / 1e6;
        CHECK(std::abs(f - p[s]) < 5e-3);
      }
    }
  }
  SECTION("invalid shot count throws") {
    CHECK_THROWS_AS(simulate_counts(rho, m, 0, 1), std::domain_error);
  }
}

TEST_CASE("least squares recovers states from exact frequencies", "[measurements]") {
  Rng rng(314);

  SECTION("complete MUB set reproduces the state") {
    for (long d : {2L, 3L}) {
      const MeasurementSet m = two_qudit_mub_measurements(d);
      const CMat rho = random_state(m.D, rng);
      RVec f(m.total_outcomes());
      Eigen::Index r = 0;
      for (Eigen::Index q = 0; q < m.settings(); ++q) {
        const RVec p = outcome_probabilities(rho, m, q);
        for (Eigen::Index s = 0; s < p.size(); ++s) f[r++] = p[s];
      }
      const LeastSquaresEstimate ls = least_squares_estimate(f, m);
      CHECK((ls.rho_ls - rho).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(ls.subspace.complete);
    }
  }
  SECTION("incomplete X/Z set reproduces the projected state") {
    const MeasurementSet m = two_qubit_xz_measurements();
    const CMat rho = random_state(4, rng);
    RVec f(m.total_outcomes());
    Eigen::Index r = 0;
    for (Eigen::Index q = 0; q < m.settings(); ++q) {
      const RVec p = outcome_probabilities(rho, m, q);
      for (Eigen::Index s = 0; s < p.size(); ++s) f[r++] = p[s];
    }
    const LeastSquaresEstimate ls = least_squares_estimate(f, m);
    CHECK(ls.subspace.indices.size() == 8);
    CHECK((ls.rho_ls - project_observed(rho, m.subspace)).cwiseAbs().maxCoeff() <
          1e-10);
  }
}

TEST_CASE("closed-form product-MUB least squares matches the generic solver",
          "[measurements]") {
  for (long d : {2L, 3L}) {
    const MeasurementSet m = two_qudit_mub_measurements(d);
    const CMat rho = ground_truth_state(d, 0.9);
    const CountData counts = simulate_counts(rho, m, 100 * m.D, 5);
    RVec f(m.total_outcomes());
    Eigen::Index r = 0;
    for (Eigen::Index q = 0; q < counts.settings(); ++q)
      for (long c : counts.counts[q])
        f[r++] = static_cast<double>(c) /
                 static_cast<double>(counts.per_setting_totals[q]);

    const LeastSquaresEstimate generic = least_squares_estimate(f, m);  // COD path
    const CMat fast = detail::product_mub_least_squares(f, m);
    CHECK((generic.rho_ls - fast).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("least squares from counts and its error paths", "[measurements]") {
  const MeasurementSet m = two_qudit_mub_measurements(2);
  const CMat rho = ground_truth_state(2, 0.95);

  SECTION("estimate error contracts with 10x the shots") {
    double err_small = 0.0, err_large = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      const auto ls_small =
          least_squares_estimate(simulate_counts(rho, m, 400, 100 + rep), m);
      const auto ls_large =
          least_squares_estimate(simulate_counts(rho, m, 4000, 500 + rep), m);
      err_small += (ls_small.rho_ls - rho).norm();
      err_large += (ls_large.rho_ls - rho).norm();
    }
    CHECK(err_large < err_small);
  }
  SECTION("empty and zero-shot inputs are rejected") {
    CHECK_THROWS_AS(least_squares_estimate(CountData{}, m), std::invalid_argument);
    CountData zero;
    zero.counts.assign(9, std::vector<long>(4, 0));
    zero.recompute_totals();
    CHECK_THROWS_AS(least_squares_estimate(zero, m), std::invalid_argument);
  }
}
