#ifndef CTMIX_MODEL_HPP
#define CTMIX_MODEL_HPP

#include <optional>
#include <span>
#include <vector>

#include "ctmix/matrix.hpp"

namespace ctmix {

/// Finite state space {0,..,p-1}. Serialized files use 1-based labels.
struct StateSpace {
  int p;
  explicit StateSpace(int p_);
};

// Generator of a Markov jump process: off-diagonals are nonnegative rates,
// the diagonal is rederived as minus the off-diagonal row sum so that rows
// sum to zero exactly. exit_rate(i) == 0 marks an absorbing (stayer) state.
class IntensityMatrix {
public:
  explicit IntensityMatrix(Matrix rates);

  int size() const { return p_; }
  double rate(int i, int j) const { return q_(i, j); }
  double exit_rate(int i) const { return -q_(i, i); }
  const Matrix& matrix() const { return q_; }
  double max_exit_rate() const;

private:
  Matrix q_;
  int p_;
};

// Row-stochastic matrix: entries in [0,1], rows sum to 1 within 1e-10.
// Entries in [-1e-12, 0) are clamped to 0 and the row renormalized.
class StochasticMatrix {
public:
  explicit StochasticMatrix(Matrix entries);

  int size() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Matrix& matrix() const { return m_; }

private:
  Matrix m_;
};

// Full parameter set of the mixture: initial law, one intensity matrix per
// regime, and the p x M switching probabilities (row i = regime law given
// the process starts in state i).
struct MixtureModel {
  StateSpace statespace;
  int regime_count;
  std::vector<double> initial_law;          // length p, sums to 1
  std::vector<IntensityMatrix> intensities; // M matrices
  Matrix switching;                         // p x M, rows sum to 1

  int p() const { return statespace.p; }
  double s(int state, int regime) const { return switching(state, regime); }
};

// Scale-factor parameterization: regime M-1 is the base generator and every
// other regime m has rates psi(m,i) * base_rate(i,j). All regimes then share
// one embedded chain.
struct RestrictedSpec {
  IntensityMatrix base_intensity;
  Matrix psi; // (M-1) x p, nonnegative

  RestrictedSpec(IntensityMatrix base, Matrix psi_factors);
  int regime_count() const { return static_cast<int>(psi.rows()) + 1; }
  std::vector<IntensityMatrix> expand() const;
};

MixtureModel validate_model(int p, int M, std::vector<double> pi,
                            std::vector<Matrix> intensities, Matrix switching);

/// Q = diag(exit_rates) * (chain - I); chain must have a zero diagonal.
IntensityMatrix build_intensity(std::span<const double> exit_rates,
                                const StochasticMatrix& chain);

/// Jump chain of Q: off-diagonals q_ij / q_i, zero diagonal. Errors with
/// AbsorbingState(i) when q_i == 0.
StochasticMatrix embedded_chain(const IntensityMatrix& q);

/// e^{Qt} by uniformization; preserves nonnegativity and row sums.
StochasticMatrix matrix_exponential(const IntensityMatrix& q, double t);

/// P(t) = sum_m S^(m) e^{Q^(m) t}.
StochasticMatrix mixture_transition(const MixtureModel& model, double t);

/// n-step law of the discrete-time mixture: sum_m S^(m) Pi_m^n.
StochasticMatrix n_step_matrix(const MixtureModel& model, unsigned n);

} // namespace ctmix

#endif
