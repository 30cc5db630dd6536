#include <catch2/catch.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "bayestomo/bench.hpp"

using namespace bayestomo;

TEST_CASE("convergence study record layout and reproducibility", "[bench]") {
  ConvergenceConfig cfg;
  cfg.d = 2;
  cfg.shots_per_setting = 400;
  cfg.R = 128;
  cfg.burn_in = 128;
  cfg.thinning_grid = {1, 2};
  cfg.chains = 4;
  cfg.seed = 404;
  const ConvergenceReport report = run_convergence_study(cfg);

  REQUIRE(report.records.size() == 8);
  REQUIRE(report.stats.size() == 2);
  CHECK(report.stats[0].post_burn_in_evals == 128);
  CHECK(report.stats[1].post_burn_in_evals == 256);

  SECTION("records at T = 1 equal standalone inference runs with derived seeds") {
    const auto m = std::make_shared<const MeasurementSet>(two_qudit_mub_measurements(2));
    const CMat rho = ground_truth_state(2, cfg.lambda);
    const CountData counts =
        simulate_counts(rho, *m, cfg.shots_per_setting, derive_seed(cfg.seed, 0));
    const auto lik = make_full_likelihood(m, counts);
    const auto fid = fidelity_functional(ideal_bell_state(2));
    for (long i = 0; i < cfg.chains; ++i) {
      SamplerConfig sc;
      sc.R = cfg.R;
      sc.T = 1;
      sc.burn_in = cfg.burn_in;
      sc.seed = derive_seed(cfg.seed, 1 + i);
      const auto [fm, fs] =
          posterior_expectation(pcn_chain(PriorConfig{1.0, 4}, lik, sc), fid);
      CHECK(report.records[i].f_mean == fm);
      CHECK(report.records[i].f_std == fs);
    }
  }
  SECTION("box statistics are invariant under chain permutation") {
    std::vector<double> means;
    for (long i = 0; i < cfg.chains; ++i) means.push_back(report.records[i].f_mean);
    const BoxStats direct = detail::box_stats(means);
    std::mt19937 shuffler(1);
    std::shuffle(means.begin(), means.end(), shuffler);
    const BoxStats shuffled = detail::box_stats(means);
    CHECK(direct.median == shuffled.median);
    CHECK(direct.q25 == shuffled.q25);
    CHECK(direct.q75 == shuffled.q75);
    CHECK(direct.whisker_lo == shuffled.whisker_lo);
    CHECK(direct.whisker_hi == shuffled.whisker_hi);
    CHECK(direct.spread == shuffled.spread);
  }
  SECTION("identical configs reproduce estimates exactly") {
    const ConvergenceReport again = run_convergence_study(cfg);
    for (std::size_t i = 0; i < report.records.size(); ++i) {
      CHECK(report.records[i].f_mean == again.records[i].f_mean);
      CHECK(report.records[i].f_std == again.records[i].f_std);
    }
  }
}

TEST_CASE("loglog slope fit recovers an exact power law", "[bench]") {
  ConvergenceReport r;
  for (long t : {1, 2, 4, 8, 16}) {
    ConvergenceStats st;
    st.T = t;
    st.post_burn_in_evals = 1024 * t;
    st.f_std.spread = 0.5 / std::sqrt(static_cast<double>(1024 * t));
    st.f_mean.spread = st.f_std.spread;
    r.stats.push_back(st);
  }
  CHECK(fit_loglog_slope(r, 5) == Approx(-0.5).margin(1e-12));
  CHECK(fit_loglog_slope(r, 5, false) == Approx(-0.5).margin(1e-12));
  CHECK_THROWS_AS(fit_loglog_slope(r, 1), std::invalid_argument);
}

TEST_CASE("box stats quartiles and whiskers", "[bench]") {
  const std::vector<double> v = {1.0, 2.0, 3.0, 4.0, 100.0};
  const BoxStats b = detail::box_stats(v);
  CHECK(b.median == 3.0);
  CHECK(b.q25 == 2.0);
  CHECK(b.q75 == 4.0);
  CHECK(b.whisker_lo == 1.0);
  CHECK(b.whisker_hi == 4.0);  // 100 lies beyond 1.5 IQR
}

TEST_CASE("timing study shape and bookkeeping", "[bench]") {
  TimingConfig cfg;
  cfg.d_values = {2};
  cfg.points = 256;
  cfg.burn_in = 64;
  cfg.seed = 12;
  const TimingReport report = run_timing_study(cfg);

  REQUIRE(report.records.size() == 2);
  CHECK(report.records[0].likelihood == "full");
  CHECK(report.records[1].likelihood == "pseudo");
  for (const auto& rec : report.records) {
    CHECK(rec.points == 256);
    CHECK(rec.mean_seconds_per_sample > 0.0);
    // single-evaluation Metropolis-Hastings for both likelihood kinds
    CHECK(rec.density_evals == 1 + cfg.burn_in + cfg.points);
  }
  REQUIRE(report.ratios.size() == 1);
  CHECK(report.ratios[0].first == 2);
  CHECK(report.ratios[0].second > 0.0);
}

TEST_CASE("report emission is deterministic and well shaped", "[bench]") {
  ConvergenceConfig cfg;
  cfg.d = 2;
  cfg.R = 32;
  cfg.burn_in = 32;
  cfg.thinning_grid = {1};
  cfg.chains = 2;
  cfg.seed = 9;
  const ConvergenceReport report = run_convergence_study(cfg);

  SECTION("csv layout: header + records + two stat rows per T") {
    const std::string csv = convergence_report_to_csv(report);
    const long rows = std::count(csv.begin(), csv.end(), '\n');
    CHECK(rows == 1 + 2 + 2);
    CHECK(csv.rfind("row_kind,T,chain,", 0) == 0);
    CHECK(convergence_report_to_csv(report) == csv);
  }
  SECTION("json round trip preserves structure") {
    const json j = convergence_report_to_json(report);
    CHECK(j.at("records").size() == 2);
    CHECK(j.at("stats").size() == 1);
    const json reparsed = json::parse(j.dump());
    CHECK(reparsed == j);
    CHECK(j.dump() == convergence_report_to_json(report).dump());
  }
  SECTION("timing csv carries ratio rows") {
    TimingConfig tc;
    tc.d_values = {2};
    tc.points = 32;
    tc.burn_in = 16;
    const TimingReport tr = run_timing_study(tc);
    const std::string csv = timing_report_to_csv(tr);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 + 1);
    CHECK(csv.find("ratio,2") != std::string::npos);
  }
}

TEST_CASE("emit_report writes identical bytes for identical reports", "[bench]") {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / ("bayestomo_bench_" + std::to_string(::getpid()));
  fs::create_directories(dir);

  ConvergenceConfig cfg;
  cfg.d = 2;
  cfg.R = 16;
  cfg.burn_in = 16;
  cfg.thinning_grid = {1};
  cfg.chains = 2;
  const ConvergenceReport report = run_convergence_study(cfg);

  for (const std::string format : {"csv", "json"}) {
    const auto a = dir / ("a." + format);
    const auto b = dir / ("b." + format);
    emit_report(report, a, format);
    emit_report(report, b, format);
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK(!sa.str().empty());
  }
  CHECK_THROWS_AS(emit_report(report, dir / "x.xml", "xml"), std::invalid_argument);
  fs::remove_all(dir);
}

TEST_CASE("derived seeds separate streams", "[bench]") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  // splitmix64 output differs from its input stream index
  CHECK(splitmix64(0) != 0);
  CHECK(splitmix64(1) != 1);
}
