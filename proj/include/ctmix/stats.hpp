#ifndef CTMIX_STATS_HPP
#define CTMIX_STATS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ctmix/simulate.hpp"

namespace ctmix {

// Everything the likelihood needs from one path: initial-state indicator,
// jump counts, exit counts, and per-state occupation time. The censored
// sojourn contributes occupation time but no jump.
struct PathStats {
  int p = 0;
  int initial_state = 0;
  std::vector<std::int64_t> jump_counts; // p*p row-major, zero diagonal
  std::vector<std::int64_t> exit_counts; // row sums of jump_counts
  std::vector<double> occupation;        // sums to the horizon
  double horizon = 0.0;

  std::int64_t jumps(int i, int j) const { return jump_counts[i * p + j]; }
  int initial_indicator(int i) const { return i == initial_state ? 1 : 0; }
};

PathStats sufficient_stats(const SamplePath& path, int p);

// Per-path stats for a whole dataset plus the labels when the simulation
// kept them. `fingerprint` binds fits and tests to the dataset they came
// from (empty when stats were built in memory without serialization).
struct DatasetStats {
  int p = 0;
  double horizon = 0.0;
  std::vector<PathStats> paths;
  std::vector<int> labels; // 0-based regimes; empty when unlabeled
  std::string fingerprint;

  std::size_t size() const { return paths.size(); }
  bool labeled() const { return !labels.empty(); }
};

DatasetStats dataset_stats(const std::vector<SamplePath>& paths, int p,
                           int workers = 1);

enum class WeightSource { HardLabels, Posteriors };

// Dataset-level sums with one weight per (path, regime): the numerators and
// denominators of every closed-form estimator, plus the unweighted totals.
struct WeightedStats {
  int p = 0;
  int M = 0;
  std::size_t n_paths = 0;
  WeightSource source = WeightSource::HardLabels;
  std::string fingerprint;

  std::vector<double> jump_w;    // M*p*p
  std::vector<double> exit_w;    // M*p
  std::vector<double> occ_w;     // M*p
  std::vector<double> initial_w; // M*p

  std::vector<std::int64_t> initial_tot; // p
  std::vector<std::int64_t> jump_tot;    // p*p
  std::vector<std::int64_t> exit_tot;    // p
  std::vector<double> occ_tot;           // p

  double jumps_w(int m, int i, int j) const { return jump_w[(m * p + i) * p + j]; }
  double exits_w(int m, int i) const { return exit_w[m * p + i]; }
  double occupation_w(int m, int i) const { return occ_w[m * p + i]; }
  double initials_w(int m, int i) const { return initial_w[m * p + i]; }
};

/// weights is n_paths x M row-major; every row must sum to 1 within 1e-8.
WeightedStats aggregate(const DatasetStats& data,
                        const std::vector<double>& weights,
                        WeightSource source = WeightSource::Posteriors);

/// Unit-weight rows from the stored hard labels. regime_count = 0 infers M
/// as the largest label + 1.
WeightedStats aggregate_hard(const DatasetStats& data, int regime_count = 0);

/// All paths in one regime (M = 1); used by the plain-Markov fit.
WeightedStats aggregate_pooled(const DatasetStats& data);

// Compensated accumulator; keeps dataset-level occupation sums honest at
// the 1e-9 tolerances the invariants ask for.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

} // namespace ctmix

#endif
