#ifndef CTMIX_LRT_HPP
#define CTMIX_LRT_HPP

#include <string>

#include "ctmix/em.hpp"

namespace ctmix {

struct TestReport {
  double statistic = 0.0; // -2 ln Lambda, clamped to 0 within -1e-6
  int dof = 0;
  double p_value = 1.0;
  std::string null_id;
  std::string alt_id;
  double loglik_null = 0.0;
  double loglik_alt = 0.0;
  // set when the alternative fit scored below the null by more than the
  // clamping tolerance (an under-fit alternative, reported, not hidden)
  bool underfit_warning = false;

  bool reject(double alpha) const { return p_value < alpha; }
  std::string render(double alpha) const;
};

/// Single-regime MLE over the pooled dataset (no labels needed).
FitResult fit_markov(const DatasetStats& data);

/// Upper tail of the chi-square distribution, absolute error <= 1e-10.
double chi_square_sf(double x, int dof);

/// Markov null against a mixture alternative; dof = p^2 (M - 1).
TestReport lrt_markov_vs_mixture(const DatasetStats& data,
                                 const FitResult& mixture_fit);

/// Restricted null against the unrestricted mixture; dof = p (p-1) (M-1).
TestReport lrt_restricted_vs_unrestricted(const DatasetStats& data,
                                          const FitResult& restricted_fit,
                                          const FitResult& unrestricted_fit);

} // namespace ctmix

#endif
