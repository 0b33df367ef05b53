#ifndef CTMIX_SIMULATE_HPP
#define CTMIX_SIMULATE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ctmix/model.hpp"
#include "ctmix/rng.hpp"

namespace ctmix {

struct JumpEvent {
  int state;       // 0-based
  double duration; // sojourn length in that state

  bool operator==(const JumpEvent&) const = default;
};

// One realization on [0, horizon]: completed sojourns in order, then the
// sojourn in progress at the horizon, truncated ("censored"). Durations sum
// to the horizon; consecutive states always differ.
struct SamplePath {
  std::int64_t id = 0;
  int initial_state = 0;
  std::optional<int> regime; // 0-based; present iff labels were kept
  std::vector<JumpEvent> events;
  JumpEvent censored{0, 0.0};
  double horizon = 0.0;

  bool operator==(const SamplePath&) const = default;
};

struct SimulateOptions {
  bool keep_label = false;
  std::uint64_t jump_cap = 10'000'000; // guards runaway rate configurations
  int workers = 1;                     // 0 = hardware concurrency
};

/// Inverse-CDF draw from a discrete law: smallest k with u < cumsum(pi)_k.
int sample_initial_state(std::span<const double> pi, double u);

/// Regime index for a path starting in `initial`, from switching row.
int sample_regime(const MixtureModel& model, int initial, double u);

/// Next state of a jump chain from the cumulative row of `current`.
int step_chain(const StochasticMatrix& chain, int current, double v);

/// Exponential(exit_rate) variate -log(w)/q; +infinity when the rate is 0.
double sample_sojourn(double exit_rate, double w);

SamplePath simulate_path(const MixtureModel& model, double horizon,
                         RngStream& stream, bool keep_label,
                         std::uint64_t jump_cap = 10'000'000);

/// N independent paths; path k draws from substream (seed, k), so results
/// do not depend on the worker count.
std::vector<SamplePath> simulate_dataset(const MixtureModel& model,
                                         std::size_t n_paths, double horizon,
                                         std::uint64_t seed,
                                         const SimulateOptions& options = {});

} // namespace ctmix

#endif
