#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ctmix/io.hpp"
#include "ctmix/simulate.hpp"
#include "oracles.hpp"

using namespace ctmix;
using namespace ctmix::testing;

TEST_CASE("sample_initial_state walks the cumulative intervals") {
  std::vector<double> uniform{1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(sample_initial_state(uniform, 0.10) == 0);
  CHECK(sample_initial_state(uniform, 0.50) == 1);
  CHECK(sample_initial_state(uniform, 0.99) == 2);

  std::vector<double> point{0.0, 1.0, 0.0};
  for (double u : {0.0, 0.3, 0.999999})
    CHECK(sample_initial_state(point, u) == 1);
}

TEST_CASE("sample_regime uses the switching row of the initial state") {
  MixtureModel model = table1_model();
  CHECK(sample_regime(model, 1, 0.10) == 0); // s_2 = (0.25, 0.75)
  CHECK(sample_regime(model, 1, 0.30) == 1);

  std::vector<Matrix> qs{model.intensities[0].matrix()};
  MixtureModel single = validate_model(3, 1, model.initial_law, std::move(qs),
                                       Matrix(3, 1, 1.0));
  CHECK(sample_regime(single, 2, 0.77) == 0);
}

TEST_CASE("step_chain follows the row intervals") {
  StochasticMatrix chain(table1_chain(0));
  CHECK(step_chain(chain, 0, 0.30) == 1); // V <= pi_12 = 0.6 -> state 2
  CHECK(step_chain(chain, 0, 0.75) == 2);

  StochasticMatrix flip(Matrix{{0.0, 1.0}, {1.0, 0.0}});
  for (double v : {0.0, 0.5, 0.999})
    CHECK(step_chain(flip, 1, v) == 0);
}

TEST_CASE("sample_sojourn is the inverse-CDF exponential") {
  CHECK(sample_sojourn(1.0, std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sample_sojourn(0.5, std::exp(-1.0)) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(std::isinf(sample_sojourn(0.0, 0.5)));
}

TEST_CASE("two-state single-regime path alternates and accounts for time") {
  std::vector<Matrix> qs{Matrix{{-1.0, 1.0}, {1.0, -1.0}}};
  MixtureModel model =
      validate_model(2, 1, {0.5, 0.5}, std::move(qs), Matrix(2, 1, 1.0));
  RngStream stream(5, 0);
  SamplePath path = simulate_path(model, 5.0, stream, true);

  CHECK(path.horizon == 5.0);
  CHECK(path.regime == 0);
  double total = path.censored.duration;
  int prev = -1;
  for (std::size_t n = 0; n < path.events.size(); ++n) {
    const auto& ev = path.events[n];
    CHECK(ev.duration > 0.0);
    if (n == 0) CHECK(ev.state == path.initial_state);
    if (prev >= 0) CHECK(ev.state != prev);
    prev = ev.state;
    total += ev.duration;
  }
  if (prev >= 0) CHECK(path.censored.state != prev);
  CHECK(total == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("duration accounting holds across a mixed dataset") {
  MixtureModel model = table1_model();
  auto paths = simulate_dataset(model, 1000, 30.0, 11, {.keep_label = true});
  for (const auto& path : paths) {
    double total = path.censored.duration;
    for (const auto& ev : path.events) total += ev.duration;
    CHECK(std::fabs(total - 30.0) < 1e-9);
  }
}

TEST_CASE("stayer regime censors the whole horizon") {
  // regime 2 never moves: the two-speed mover-stayer special case
  std::vector<Matrix> qs{Matrix{{-1.0, 1.0}, {1.0, -1.0}}, Matrix(2, 2, 0.0)};
  Matrix s{{0.0, 1.0}, {0.0, 1.0}}; // everyone is a stayer
  MixtureModel model = validate_model(2, 2, {0.5, 0.5}, std::move(qs), std::move(s));
  RngStream stream(3, 0);
  SamplePath path = simulate_path(model, 7.0, stream, true);
  CHECK(path.events.empty());
  CHECK(path.censored.state == path.initial_state);
  CHECK(path.censored.duration == 7.0);
}

TEST_CASE("initial-state and regime frequencies match the model") {
  MixtureModel model = table1_model();
  const std::size_t n = 20000;
  auto paths = simulate_dataset(model, n, 2.0, 17, {.keep_label = true});

  std::vector<int> start_counts(3, 0);
  int start2 = 0, start2_regime1 = 0;
  for (const auto& path : paths) {
    start_counts[path.initial_state]++;
    if (path.initial_state == 1) {
      ++start2;
      if (*path.regime == 0) ++start2_regime1;
    }
  }
  for (int i = 0; i < 3; ++i) {
    const double phat = static_cast<double>(start_counts[i]) / n;
    const double sigma = std::sqrt((1.0 / 3) * (2.0 / 3) / n);
    CHECK(std::fabs(phat - 1.0 / 3) < 3.0 * sigma);
  }
  const double share = static_cast<double>(start2_regime1) / start2;
  const double sigma = std::sqrt(0.25 * 0.75 / start2);
  CHECK(std::fabs(share - 0.25) < 3.0 * sigma);
}

TEST_CASE("conditional jump targets follow the labeled regime's chain") {
  MixtureModel model = table1_model();
  auto paths = simulate_dataset(model, 8000, 10.0, 23, {.keep_label = true});

  // first jump out of the initial state, split by label
  std::vector<std::vector<long>> counts(2, std::vector<long>(9, 0));
  for (const auto& path : paths) {
    if (path.events.empty()) continue;
    const int to = path.events.size() > 1 ? path.events[1].state : path.censored.state;
    counts[*path.regime][path.initial_state * 3 + to]++;
  }
  for (int m = 0; m < 2; ++m) {
    const Matrix chain = table1_chain(m);
    for (int i = 0; i < 3; ++i) {
      long total = 0;
      for (int j = 0; j < 3; ++j) total += counts[m][i * 3 + j];
      REQUIRE(total > 200);
      for (int j = 0; j < 3; ++j) {
        if (i == j) {
          CHECK(counts[m][i * 3 + j] == 0);
          continue;
        }
        const double phat = static_cast<double>(counts[m][i * 3 + j]) / total;
        const double pij = chain(i, j);
        const double sigma = std::sqrt(pij * (1.0 - pij) / total);
        CHECK(std::fabs(phat - pij) < 3.5 * sigma);
      }
    }
  }
}

TEST_CASE("labeled sojourn means match the regime exit rates") {
  // completed sojourns inside a fixed window are length-biased, so the clean
  // exponential check uses the first sojourn of each path (the horizon makes
  // censoring of a first sojourn a ~e^{-17} event)
  MixtureModel model = table1_model();
  auto paths = simulate_dataset(model, 12000, 50.0, 29, {.keep_label = true});

  std::vector<std::vector<double>> sums(2, std::vector<double>(3, 0.0));
  std::vector<std::vector<long>> ns(2, std::vector<long>(3, 0));
  for (const auto& path : paths) {
    REQUIRE(!path.events.empty());
    const auto& first = path.events.front();
    sums[*path.regime][first.state] += first.duration;
    ns[*path.regime][first.state]++;
  }
  for (int m = 0; m < 2; ++m) {
    const auto rates = table1_exit_rates(m);
    for (int i = 0; i < 3; ++i) {
      const double mean = 1.0 / rates[i];
      const double got = sums[m][i] / ns[m][i];
      const double sigma = mean / std::sqrt(static_cast<double>(ns[m][i]));
      CHECK(std::fabs(got - mean) < 3.5 * sigma);
    }
  }
}

TEST_CASE("occupancy at fixed times matches the analytic transition law") {
  MixtureModel model = table1_model();
  const std::size_t n = 30000;
  auto paths = simulate_dataset(model, n, 2.0, 31, {});

  for (double t : {0.5, 1.0, 2.0}) {
    StochasticMatrix want = mixture_transition(model, t);
    std::vector<long> counts(9, 0);
    std::vector<long> starts(3, 0);
    for (const auto& path : paths) {
      double elapsed = 0.0;
      int state = path.censored.state;
      for (const auto& ev : path.events) {
        elapsed += ev.duration;
        if (elapsed > t) {
          state = ev.state;
          break;
        }
      }
      starts[path.initial_state]++;
      counts[path.initial_state * 3 + state]++;
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double phat = static_cast<double>(counts[i * 3 + j]) / starts[i];
        const double pij = want(i, j);
        const double sigma = std::sqrt(pij * (1.0 - pij) / starts[i]);
        CHECK(std::fabs(phat - pij) < 3.5 * sigma);
      }
  }
}

TEST_CASE("two-jump frequencies match the n-step mixture law") {
  MixtureModel model = table1_model();
  StochasticMatrix want = n_step_matrix(model, 2);

  RngStream stream(41, 0);
  const int n = 60000;
  std::vector<long> counts(9, 0);
  std::vector<long> starts(3, 0);
  for (int k = 0; k < n; ++k) {
    const int i0 = sample_initial_state(model.initial_law, stream.next_uniform());
    const int m = sample_regime(model, i0, stream.next_uniform());
    StochasticMatrix chain = embedded_chain(model.intensities[m]);
    const int z1 = step_chain(chain, i0, stream.next_uniform());
    const int z2 = step_chain(chain, z1, stream.next_uniform());
    starts[i0]++;
    counts[i0 * 3 + z2]++;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double phat = static_cast<double>(counts[i * 3 + j]) / starts[i];
      const double pij = want(i, j);
      const double sigma = std::sqrt(pij * (1.0 - pij) / starts[i]);
      CHECK(std::fabs(phat - pij) < 3.5 * sigma);
    }
}

TEST_CASE("simulate_dataset is deterministic and worker-independent") {
  MixtureModel model = table1_model();
  auto one = simulate_dataset(model, 64, 10.0, 99, {.keep_label = true, .workers = 1});
  auto four = simulate_dataset(model, 64, 10.0, 99, {.keep_label = true, .workers = 4});
  CHECK(one == four);
  CHECK(fingerprint_dataset(one).to_string() == fingerprint_dataset(four).to_string());

  RngStream stream(99, 0);
  SamplePath first = simulate_path(model, 10.0, stream, true);
  CHECK(first == one[0]);
}

TEST_CASE("PathOverflow carries the offending path id") {
  MixtureModel model = table1_model();
  try {
    simulate_dataset(model, 4, 1000.0, 1, {.jump_cap = 10});
    FAIL("expected PathOverflow");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PathOverflow);
    CHECK(e.index() >= 0);
    CHECK(e.index() < 4);
  }
}

TEST_CASE("simulate_path rejects a nonpositive horizon") {
  MixtureModel model = table1_model();
  RngStream stream(1, 0);
  CHECK_THROWS_AS(simulate_path(model, 0.0, stream, false), Error);
}
