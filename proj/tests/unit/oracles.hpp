#ifndef CTMIX_TEST_ORACLES_HPP
#define CTMIX_TEST_ORACLES_HPP

// Test-only reference implementations, kept independent of the library code
// paths they check: a truncated-Taylor matrix exponential (vs uniformization),
// adaptive-Simpson chi-square tails (vs the incomplete-gamma route), and the
// simulation study's ground-truth model.

#include "ctmix/model.hpp"

namespace ctmix::testing {

/// e^{Qt} by scaled-and-squared truncated Taylor series, terms to machine eps.
Matrix expm_taylor(const Matrix& q, double t);

/// Upper tail of chi-square by adaptive Simpson quadrature of the density.
double chi2_sf_quadrature(double x, int dof, double tol = 1e-11);

/// The simulation study's true mixture: p = 3, M = 2.
MixtureModel table1_model();

/// Exit rates (q1, q2) and jump chains of the two regimes, for direct access.
Matrix table1_chain(int regime);
std::vector<double> table1_exit_rates(int regime);

// Smallest max-abs parameter error between a fitted model and a reference,
// over all regime permutations (EM only identifies regimes up to relabeling).
struct ModelError {
  double rates = 0.0;      // off-diagonal intensity entries
  double switching = 0.0;  // s entries
  double initial = 0.0;    // pi entries
  double max() const;
};
ModelError best_permutation_error(const MixtureModel& fitted,
                                  const MixtureModel& truth);

} // namespace ctmix::testing

#endif
