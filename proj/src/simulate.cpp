#include "ctmix/simulate.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <mutex>

#include "ctmix/parallel.hpp"

namespace ctmix {

namespace {

// Shared inverse-CDF walk. Falls through to the last positive-probability
// cell when u lands on accumulated rounding at the top.
int pick_from_row(std::span<const double> probs, double u) {
  double cum = 0.0;
  int last_positive = -1;
  for (int k = 0; k < static_cast<int>(probs.size()); ++k) {
    if (probs[k] <= 0.0) continue;
    cum += probs[k];
    last_positive = k;
    if (u < cum) return k;
  }
  return last_positive;
}

} // namespace

int sample_initial_state(std::span<const double> pi, double u) {
  return pick_from_row(pi, u);
}

int sample_regime(const MixtureModel& model, int initial, double u) {
  const int M = model.regime_count;
  std::vector<double> row(M);
  for (int m = 0; m < M; ++m) row[m] = model.s(initial, m);
  return pick_from_row(row, u);
}

int step_chain(const StochasticMatrix& chain, int current, double v) {
  const int p = chain.size();
  std::vector<double> row(p);
  for (int j = 0; j < p; ++j) row[j] = chain(current, j);
  return pick_from_row(row, v);
}

double sample_sojourn(double exit_rate, double w) {
  if (exit_rate == 0.0) return std::numeric_limits<double>::infinity();
  return -std::log(w) / exit_rate;
}

SamplePath simulate_path(const MixtureModel& model, double horizon,
                         RngStream& stream, bool keep_label,
                         std::uint64_t jump_cap) {
  if (!(horizon > 0.0))
    throw Error(Errc::InvariantViolation, "horizon must be positive");

  SamplePath path;
  path.horizon = horizon;
  path.id = static_cast<std::int64_t>(stream.path_index());

  const int initial = sample_initial_state(model.initial_law, stream.next_uniform());
  const int regime = sample_regime(model, initial, stream.next_uniform());
  path.initial_state = initial;
  if (keep_label) path.regime = regime;

  const IntensityMatrix& q = model.intensities[regime];
  const StochasticMatrix chain = [&] {
    // Absorbing states are legal in the generator; build the jump chain with
    // a placeholder row for them (never consulted: the sojourn is infinite).
    const int p = q.size();
    Matrix pi(p, p);
    for (int i = 0; i < p; ++i) {
      const double qi = q.exit_rate(i);
      if (qi == 0.0) {
        pi(i, (i + 1) % p) = 1.0;
        continue;
      }
      for (int j = 0; j < p; ++j)
        if (j != i) pi(i, j) = q.rate(i, j) / qi;
    }
    return StochasticMatrix(std::move(pi));
  }();

  int state = initial;
  double elapsed = 0.0;
  std::uint64_t jumps = 0;
  while (true) {
    // an infinite sojourn (stayer state) lands here as well
    const double sojourn = sample_sojourn(q.exit_rate(state), stream.next_uniform_open());
    if (elapsed + sojourn >= horizon) {
      path.censored = JumpEvent{state, horizon - elapsed};
      break;
    }
    path.events.push_back(JumpEvent{state, sojourn});
    elapsed += sojourn;
    state = step_chain(chain, state, stream.next_uniform());
    if (++jumps > jump_cap)
      throw Error(Errc::PathOverflow, "jump count exceeded cap",
                  static_cast<long>(path.id));
  }
  return path;
}

std::vector<SamplePath> simulate_dataset(const MixtureModel& model,
                                         std::size_t n_paths, double horizon,
                                         std::uint64_t seed,
                                         const SimulateOptions& options) {
  if (n_paths < 1)
    throw Error(Errc::InvariantViolation, "need at least one path");

  std::vector<SamplePath> out(n_paths);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  parallel_for(n_paths, options.workers, [&](std::size_t lo, std::size_t hi) {
    try {
      for (std::size_t k = lo; k < hi; ++k) {
        RngStream stream(seed, k);
        out[k] = simulate_path(model, horizon, stream, options.keep_label,
                               options.jump_cap);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);
  return out;
}

} // namespace ctmix
