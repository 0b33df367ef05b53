#ifndef CTMIX_MLE_HPP
#define CTMIX_MLE_HPP

#include <optional>
#include <string>
#include <vector>

#include "ctmix/model.hpp"
#include "ctmix/stats.hpp"

namespace ctmix {

enum class FitMethod { MleComplete, MleRestricted, Em, EmRestricted, Markov };

const char* fit_method_name(FitMethod m);
FitMethod fit_method_from_name(const std::string& name);

struct FitResult {
  MixtureModel model;
  double loglik = 0.0;
  bool loglik_minus_infinity = false;
  FitMethod method = FitMethod::MleComplete;
  int iterations = 0;  // 0 for closed-form fits
  bool converged = true;

  // Fitted jump chains, one per regime. Restricted fits store the pooled
  // chain in every slot, so equality across regimes is exact.
  std::vector<StochasticMatrix> embedded;
  // Scale factors for restricted fits, (M-1) x p.
  std::optional<Matrix> psi;

  // EM iteration trace (empty for closed-form fits).
  std::vector<double> trace_loglik;
  std::vector<double> trace_delta;
  std::vector<double> trace_seconds;

  std::string dataset_fingerprint;
  std::vector<std::string> warnings;
};

struct LoglikValue {
  double value = 0.0;
  bool minus_infinity = false;
};

/// Closed-form MLE from hard-label aggregates (one estimator per regime).
FitResult mle_unrestricted(const WeightedStats& stats);

/// Closed-form MLE under the shared-embedded-chain restriction; the last
/// regime is the psi = 1 reference.
FitResult mle_restricted(const WeightedStats& stats);

/// Complete-data log-likelihood of a model given hard-label aggregates.
/// A positive count against a zero rate flags minus infinity, not a throw.
LoglikValue complete_loglik(const MixtureModel& model, const WeightedStats& stats);

// Shared estimation core: identical formulas whether the weights are hard
// labels or posteriors. When `fallback` is non-null, a regime/state cell
// with zero weighted occupation keeps the fallback's rates (flagged in
// `warnings`) instead of erroring.
MixtureModel estimate_unrestricted(const WeightedStats& stats,
                                   const MixtureModel* fallback,
                                   std::vector<std::string>* warnings);
struct RestrictedEstimate {
  MixtureModel model;
  Matrix psi;              // (M-1) x p
  StochasticMatrix pooled; // shared embedded chain
};
RestrictedEstimate estimate_restricted(const WeightedStats& stats,
                                       const MixtureModel* fallback,
                                       std::vector<std::string>* warnings);

/// pi-hat: initial-state frequencies.
std::vector<double> estimate_initial_law(const WeightedStats& stats);

} // namespace ctmix

#endif
