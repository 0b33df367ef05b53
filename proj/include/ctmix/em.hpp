#ifndef CTMIX_EM_HPP
#define CTMIX_EM_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "ctmix/mle.hpp"

namespace ctmix {

struct EmOptions {
  double tolerance = 1e-6; // sup-norm on parameter change
  int max_iterations = 1000;
  bool restricted = false;
  int regimes = 2;                  // M, when no init model is given
  std::optional<MixtureModel> init; // user init wins over the heuristic
  std::uint64_t init_seed = 0;      // perturbation seed for the heuristic
  int workers = 1;
};

/// log f(regime = m, path) per regime, evaluated in the log domain.
/// Entries may be -infinity; all -infinity is an InfeasiblePath error.
std::vector<double> path_log_joint(const MixtureModel& model,
                                   const PathStats& stats);

/// Posterior regime probabilities per path (n_paths x M, row-major),
/// log-sum-exp normalized.
std::vector<double> e_step(const MixtureModel& model, const DatasetStats& data,
                           int workers = 1);

// M-step: the closed-form estimators with posterior weights. The previous
// model supplies carry-forward values for zero-occupation cells and the
// (fixed) initial law.
struct MStepResult {
  MixtureModel model;
  std::optional<Matrix> psi;
  std::optional<StochasticMatrix> pooled_chain;
  std::vector<std::string> warnings;
};
MStepResult m_step(const std::vector<double>& posteriors,
                   const DatasetStats& data, bool restricted,
                   const MixtureModel& previous);

/// Mixture (incomplete-data) log-likelihood: sum_k logsumexp_m log joint.
LoglikValue observed_loglik(const MixtureModel& model, const DatasetStats& data,
                            int workers = 1);

/// Default init: single-Markov fit, each regime a +-10% perturbed copy,
/// uniform switching rows.
MixtureModel default_em_init(const DatasetStats& data, int regimes,
                             std::uint64_t seed);

FitResult fit_em(const DatasetStats& data, const EmOptions& options = {});

} // namespace ctmix

#endif
