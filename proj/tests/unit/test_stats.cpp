#include <doctest.h>

#include <cmath>

#include "ctmix/io.hpp"
#include "ctmix/stats.hpp"
#include "oracles.hpp"

using namespace ctmix;
using namespace ctmix::testing;

namespace {

SamplePath one_jump_path() {
  // start in state 1, sit 2.0, jump to state 2, censored there after 3.0
  SamplePath path;
  path.id = 0;
  path.initial_state = 0;
  path.regime = 0;
  path.events = {JumpEvent{0, 2.0}};
  path.censored = JumpEvent{1, 3.0};
  path.horizon = 5.0;
  return path;
}

} // namespace

TEST_CASE("sufficient_stats counts the one-jump path") {
  PathStats st = sufficient_stats(one_jump_path(), 2);
  CHECK(st.initial_indicator(0) == 1);
  CHECK(st.initial_indicator(1) == 0);
  CHECK(st.jumps(0, 1) == 1);
  CHECK(st.jumps(1, 0) == 0);
  CHECK(st.exit_counts[0] == 1);
  CHECK(st.exit_counts[1] == 0);
  CHECK(st.occupation[0] == 2.0);
  CHECK(st.occupation[1] == 3.0);
}

TEST_CASE("sufficient_stats on a path with no jumps") {
  SamplePath path;
  path.initial_state = 0;
  path.censored = JumpEvent{0, 5.0};
  path.horizon = 5.0;
  PathStats st = sufficient_stats(path, 2);
  CHECK(st.initial_indicator(0) == 1);
  CHECK(st.exit_counts[0] == 0);
  CHECK(st.exit_counts[1] == 0);
  CHECK(st.occupation[0] == 5.0);
  CHECK(st.occupation[1] == 0.0);
}

TEST_CASE("sufficient_stats rejects malformed paths") {
  SamplePath repeat = one_jump_path();
  repeat.events = {JumpEvent{0, 1.0}, JumpEvent{0, 1.0}};
  CHECK_THROWS_WITH_AS(sufficient_stats(repeat, 2),
                       doctest::Contains("InconsistentPath"), Error);

  SamplePath negative = one_jump_path();
  negative.events[0].duration = -2.0;
  CHECK_THROWS_AS(sufficient_stats(negative, 2), Error);

  SamplePath wrong_first = one_jump_path();
  wrong_first.initial_state = 1;
  CHECK_THROWS_AS(sufficient_stats(wrong_first, 2), Error);
}

TEST_CASE("occupation time is conserved across a simulated dataset") {
  MixtureModel model = table1_model();
  const std::size_t n = 4000;
  const double horizon = 50.0;
  auto paths = simulate_dataset(model, n, horizon, 7, {.keep_label = true});
  DatasetStats data = make_dataset_stats(paths, 3);

  KahanSum total;
  for (const auto& st : data.paths)
    for (double z : st.occupation) total.add(z);
  CHECK(std::fabs(total.value() - n * horizon) / (n * horizon) < 1e-12);

  // exit counts are exactly the jump-count row sums
  for (const auto& st : data.paths)
    for (int i = 0; i < 3; ++i) {
      std::int64_t row = 0;
      for (int j = 0; j < 3; ++j) row += st.jumps(i, j);
      CHECK(row == st.exit_counts[i]);
    }
}

TEST_CASE("hard-label aggregation splits paths exactly") {
  SamplePath a = one_jump_path(); // label regime 0
  SamplePath b = one_jump_path();
  b.id = 1;
  b.regime = 1;
  b.events = {JumpEvent{0, 1.0}, JumpEvent{1, 1.5}};
  b.censored = JumpEvent{0, 2.5};

  DatasetStats data = make_dataset_stats({a, b}, 2);
  WeightedStats ws = aggregate_hard(data);
  CHECK(ws.M == 2);
  CHECK(ws.source == WeightSource::HardLabels);

  // regime-0 aggregates equal path a's stats exactly
  PathStats sa = sufficient_stats(a, 2);
  CHECK(ws.jumps_w(0, 0, 1) == static_cast<double>(sa.jumps(0, 1)));
  CHECK(ws.occupation_w(0, 0) == sa.occupation[0]);
  CHECK(ws.occupation_w(0, 1) == sa.occupation[1]);
  CHECK(ws.initials_w(0, 0) == 1.0);
  CHECK(ws.initials_w(1, 0) == 1.0);

  // per-regime sums reproduce the unweighted totals exactly
  for (int i = 0; i < 2; ++i) {
    CHECK(ws.exits_w(0, i) + ws.exits_w(1, i) ==
          static_cast<double>(ws.exit_tot[i]));
    for (int j = 0; j < 2; ++j)
      CHECK(ws.jumps_w(0, i, j) + ws.jumps_w(1, i, j) ==
            static_cast<double>(ws.jump_tot[i * 2 + j]));
  }
}

TEST_CASE("uniform weights scale the totals by 1/M") {
  MixtureModel model = table1_model();
  auto paths = simulate_dataset(model, 50, 20.0, 3, {});
  DatasetStats data = make_dataset_stats(paths, 3);

  std::vector<double> w(data.size() * 2, 0.5);
  WeightedStats ws = aggregate(data, w);
  for (int m = 0; m < 2; ++m)
    for (int i = 0; i < 3; ++i) {
      CHECK(ws.occupation_w(m, i) ==
            doctest::Approx(0.5 * ws.occ_tot[i]).epsilon(1e-12));
      CHECK(ws.exits_w(m, i) ==
            doctest::Approx(0.5 * ws.exit_tot[i]).epsilon(1e-12));
    }
}

TEST_CASE("aggregation is additive over dataset splits") {
  MixtureModel model = table1_model();
  auto paths = simulate_dataset(model, 120, 15.0, 13, {.keep_label = true});
  std::vector<SamplePath> first(paths.begin(), paths.begin() + 60);
  std::vector<SamplePath> second(paths.begin() + 60, paths.end());

  WeightedStats whole = aggregate_hard(make_dataset_stats(paths, 3), 2);
  WeightedStats wa = aggregate_hard(make_dataset_stats(first, 3), 2);
  WeightedStats wb = aggregate_hard(make_dataset_stats(second, 3), 2);

  for (int m = 0; m < 2; ++m)
    for (int i = 0; i < 3; ++i) {
      const double joined = wa.occupation_w(m, i) + wb.occupation_w(m, i);
      if (whole.occupation_w(m, i) > 0.0)
        CHECK(std::fabs(joined - whole.occupation_w(m, i)) /
                  whole.occupation_w(m, i) < 1e-9);
      CHECK(wa.exits_w(m, i) + wb.exits_w(m, i) == whole.exits_w(m, i));
    }
  for (int i = 0; i < 3; ++i)
    CHECK(wa.initial_tot[i] + wb.initial_tot[i] == whole.initial_tot[i]);
}

TEST_CASE("weight rows must sum to one") {
  auto paths = std::vector<SamplePath>{one_jump_path()};
  DatasetStats data = make_dataset_stats(paths, 2);
  std::vector<double> bad{0.6, 0.6};
  CHECK_THROWS_WITH_AS(aggregate(data, bad), doctest::Contains("WeightRowSum"),
                       Error);
}

TEST_CASE("labeled switching shares match the model") {
  MixtureModel model = table1_model();
  const std::size_t n = 20000;
  auto paths = simulate_dataset(model, n, 1.0, 37, {.keep_label = true});
  WeightedStats ws = aggregate_hard(make_dataset_stats(paths, 3), 2);

  // share of regime-1 labels among paths starting in state 3 ~ s_3^(1) = 0.75
  const double share = ws.initials_w(0, 2) / static_cast<double>(ws.initial_tot[2]);
  const double sigma = std::sqrt(0.75 * 0.25 / ws.initial_tot[2]);
  CHECK(std::fabs(share - 0.75) < 3.0 * sigma);
}
