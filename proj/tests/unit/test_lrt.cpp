#include <doctest.h>

#include <cmath>

#include "ctmix/io.hpp"
#include "ctmix/lrt.hpp"
#include "oracles.hpp"

using namespace ctmix;
using namespace ctmix::testing;

TEST_CASE("chi_square_sf basics") {
  CHECK(chi_square_sf(0.0, 1) == 1.0);
  CHECK(chi_square_sf(0.0, 9) == 1.0);

  // dof = 2 has the closed-form tail e^{-x/2}
  for (double x : {0.1, 1.0, 3.5, 9.0, 25.0})
    CHECK(std::fabs(chi_square_sf(x, 2) - std::exp(-0.5 * x)) < 1e-12);

  // the classic 5% critical value of chi^2_9
  CHECK(chi_square_sf(16.919, 9) == doctest::Approx(0.050).epsilon(2e-3));

  CHECK_THROWS_AS(chi_square_sf(-1.0, 3), Error);
  CHECK_THROWS_AS(chi_square_sf(1.0, 0), Error);
}

TEST_CASE("chi_square_sf agrees with the quadrature oracle") {
  for (int dof : {2, 3, 5, 9, 12, 20}) {
    for (double scale : {0.3, 1.0, 1.8, 3.0}) {
      const double x = scale * dof;
      const double want = chi2_sf_quadrature(x, dof);
      CHECK(std::fabs(chi_square_sf(x, dof) - want) < 1e-8);
    }
  }
}

TEST_CASE("chi_square_sf is monotone in x and dof") {
  double prev = 1.0;
  for (double x : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
    const double v = chi_square_sf(x, 6);
    CHECK(v < prev);
    prev = v;
  }
  for (double x : {2.0, 10.0, 30.0}) {
    double lower = 0.0;
    for (int dof : {1, 2, 4, 8, 16}) {
      const double v = chi_square_sf(x, dof);
      CHECK(v > lower);
      lower = v;
    }
  }
}

TEST_CASE("fit_markov on the single one-jump path") {
  SamplePath path;
  path.initial_state = 0;
  path.events = {JumpEvent{0, 2.0}};
  path.censored = JumpEvent{1, 3.0};
  path.horizon = 5.0;
  FitResult fit = fit_markov(make_dataset_stats({path}, 2));
  CHECK(fit.model.intensities[0].rate(0, 1) == 0.5);
  CHECK(fit.model.regime_count == 1);
}

TEST_CASE("fit_markov is consistent on Markov data") {
  MixtureModel base = table1_model();
  std::vector<Matrix> qs{base.intensities[1].matrix()};
  MixtureModel truth =
      validate_model(3, 1, base.initial_law, std::move(qs), Matrix(3, 1, 1.0));
  auto paths = simulate_dataset(truth, 3000, 60.0, 67, {});
  FitResult fit = fit_markov(make_dataset_stats(paths, 3, 0));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j)
        CHECK(std::fabs(fit.model.intensities[0].rate(i, j) -
                        truth.intensities[0].rate(i, j)) < 0.03);
}

TEST_CASE("misspecified Markov fit lands on the occupancy-weighted blend") {
  MixtureModel truth = table1_model();
  auto paths = simulate_dataset(truth, 5000, 100.0, 71,
                                {.keep_label = true, .workers = 0});
  DatasetStats data = make_dataset_stats(paths, 3, 0);
  FitResult fit = fit_markov(data);

  // expected pooled rate: occupation-weighted blend of the true exit rates
  WeightedStats ws = aggregate_hard(data, 2);
  for (int i = 0; i < 3; ++i) {
    double blend = 0.0, weight = 0.0;
    for (int m = 0; m < 2; ++m) {
      blend += table1_exit_rates(m)[i] * ws.occupation_w(m, i);
      weight += ws.occupation_w(m, i);
    }
    blend /= weight;
    CHECK(std::fabs(fit.model.intensities[0].exit_rate(i) - blend) < 0.05);
  }
}

TEST_CASE("likelihood-ratio degrees of freedom for p = 3, M = 2") {
  MixtureModel truth = table1_model();
  auto paths = simulate_dataset(truth, 400, 30.0, 73, {.workers = 0});
  DatasetStats data = make_dataset_stats(paths, 3, 0);

  EmOptions opts;
  opts.init_seed = 2;
  opts.workers = 0;
  FitResult em = fit_em(data, opts);
  TestReport r1 = lrt_markov_vs_mixture(data, em);
  CHECK(r1.dof == 9);

  EmOptions ropts = opts;
  ropts.restricted = true;
  FitResult emr = fit_em(data, ropts);
  TestReport r2 = lrt_restricted_vs_unrestricted(data, emr, em);
  CHECK(r2.dof == 6);

  // statistic is exactly twice the loglik difference when positive
  if (em.loglik >= emr.loglik)
    CHECK(r2.statistic == 2.0 * (em.loglik - emr.loglik));

  // nesting: unrestricted >= restricted >= markov (up to clamp tolerance)
  FitResult markov = fit_markov(data);
  CHECK(em.loglik >= emr.loglik - 1e-6);
  CHECK(emr.loglik >= markov.loglik - 1e-6);
}

TEST_CASE("a fit tested against itself gives statistic 0 and p = 1") {
  MixtureModel truth = table1_model();
  auto paths = simulate_dataset(truth, 200, 20.0, 79, {});
  DatasetStats data = make_dataset_stats(paths, 3);
  EmOptions opts;
  opts.init_seed = 4;
  opts.max_iterations = 50;
  FitResult em = fit_em(data, opts);
  TestReport r = lrt_restricted_vs_unrestricted(data, em, em);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);
  CHECK_FALSE(r.underfit_warning);
}

TEST_CASE("MismatchedDataset is detected through fingerprints") {
  MixtureModel truth = table1_model();
  auto a = simulate_dataset(truth, 50, 10.0, 83, {});
  auto b = simulate_dataset(truth, 50, 10.0, 89, {});
  DatasetStats da = make_dataset_stats(a, 3);
  DatasetStats db = make_dataset_stats(b, 3);

  EmOptions opts;
  opts.max_iterations = 30;
  opts.init_seed = 1;
  FitResult fit_a = fit_em(da, opts);
  CHECK_THROWS_WITH_AS(lrt_markov_vs_mixture(db, fit_a),
                       doctest::Contains("MismatchedDataset"), Error);
}

TEST_CASE("rendered report carries the decision") {
  MixtureModel truth = table1_model();
  auto paths = simulate_dataset(truth, 300, 25.0, 97, {.workers = 0});
  DatasetStats data = make_dataset_stats(paths, 3, 0);
  EmOptions opts;
  opts.init_seed = 6;
  opts.workers = 0;
  FitResult em = fit_em(data, opts);
  TestReport r = lrt_markov_vs_mixture(data, em);
  const std::string text = r.render(0.05);
  CHECK(text.find("markov") != std::string::npos);
  CHECK(text.find("dof") != std::string::npos);
  CHECK(text.find(r.reject(0.05) ? "reject null" : "fail to reject") !=
        std::string::npos);
}

TEST_CASE("null calibration: Markov data rarely rejects the Markov null") {
  MixtureModel base = table1_model();
  std::vector<Matrix> qs{base.intensities[0].matrix()};
  MixtureModel truth =
      validate_model(3, 1, base.initial_law, std::move(qs), Matrix(3, 1, 1.0));

  int rejections = 0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    auto paths = simulate_dataset(truth, 400, 25.0, 1000 + rep, {.workers = 0});
    DatasetStats data = make_dataset_stats(paths, 3, 0);
    EmOptions opts;
    opts.regimes = 2;
    opts.init_seed = rep;
    opts.tolerance = 1e-5;
    opts.max_iterations = 300;
    opts.workers = 0;
    FitResult em = fit_em(data, opts);
    TestReport r = lrt_markov_vs_mixture(data, em);
    if (r.reject(0.05)) ++rejections;
  }
  CHECK(rejections <= reps / 5);
}

TEST_CASE("chi-square mean calibration under a restricted truth") {
  // truth: shared chain, regime speeds split by psi = (0.7, 1.3, 1.0)
  MixtureModel base = table1_model();
  RestrictedSpec spec(base.intensities[1], Matrix{{0.7, 1.3, 1.0}});
  auto qs_expanded = spec.expand();
  std::vector<Matrix> qs{qs_expanded[0].matrix(), qs_expanded[1].matrix()};
  Matrix s{{0.5, 0.5}, {0.3, 0.7}, {0.7, 0.3}};
  MixtureModel truth =
      validate_model(3, 2, base.initial_law, std::move(qs), std::move(s));

  double stat_sum = 0.0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep) {
    auto paths = simulate_dataset(truth, 400, 40.0, 5000 + rep, {.workers = 0});
    DatasetStats data = make_dataset_stats(paths, 3, 0);
    EmOptions opts;
    opts.init_seed = rep;
    opts.tolerance = 1e-5;
    opts.max_iterations = 300;
    opts.workers = 0;
    FitResult em = fit_em(data, opts);
    EmOptions ropts = opts;
    ropts.restricted = true;
    FitResult emr = fit_em(data, ropts);
    stat_sum += lrt_restricted_vs_unrestricted(data, emr, em).statistic;
  }
  const double mean_stat = stat_sum / reps;
  // under the null the statistic is asymptotically chi^2_6: mean ~ 6
  CHECK(mean_stat > 3.0);
  CHECK(mean_stat < 9.0);
}
