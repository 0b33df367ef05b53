#include "ctmix/model.hpp"

#include <algorithm>
#include <cmath>

namespace ctmix {

namespace {

constexpr double kRowSumTol = 1e-10;
constexpr double kNegClampTol = 1e-12;
// Truncate the uniformized Poisson series once the accumulated mass leaves
// less than this in the tail.
constexpr double kPoissonTailTol = 1e-13;

} // namespace

StateSpace::StateSpace(int p_) : p(p_) {
  if (p < 2) throw Error(Errc::DimensionMismatch, "state space needs p >= 2", p);
}

IntensityMatrix::IntensityMatrix(Matrix rates) : q_(std::move(rates)) {
  if (q_.rows() != q_.cols() || q_.rows() < 2)
    throw Error(Errc::DimensionMismatch, "intensity matrix must be square, p >= 2");
  p_ = static_cast<int>(q_.rows());
  for (int i = 0; i < p_; ++i) {
    double offsum = 0.0;
    for (int j = 0; j < p_; ++j) {
      if (j == i) continue;
      if (q_(i, j) < 0.0)
        throw Error(Errc::NegativeOffDiagonal, "rate below zero", i, j);
      offsum += q_(i, j);
    }
    // rederive the diagonal so each row sums to zero exactly
    q_(i, i) = -offsum;
  }
}

double IntensityMatrix::max_exit_rate() const {
  double m = 0.0;
  for (int i = 0; i < p_; ++i) m = std::max(m, exit_rate(i));
  return m;
}

StochasticMatrix::StochasticMatrix(Matrix entries) : m_(std::move(entries)) {
  if (m_.rows() != m_.cols() || m_.rows() < 2)
    throw Error(Errc::DimensionMismatch, "stochastic matrix must be square, p >= 2");
  const int p = static_cast<int>(m_.rows());
  for (int i = 0; i < p; ++i) {
    double sum = 0.0;
    for (int j = 0; j < p; ++j) {
      double v = m_(i, j);
      if (v < 0.0) {
        if (v < -kNegClampTol)
          throw Error(Errc::ProbabilityRowSum, "negative probability", i, j);
        m_(i, j) = v = 0.0;
      }
      if (v > 1.0 + kRowSumTol)
        throw Error(Errc::ProbabilityRowSum, "probability above one", i, j);
      sum += v;
    }
    if (std::fabs(sum - 1.0) > kRowSumTol)
      throw Error(Errc::ProbabilityRowSum,
                  "row sums to " + std::to_string(sum), i);
    for (int j = 0; j < p; ++j) m_(i, j) /= sum;
  }
}

RestrictedSpec::RestrictedSpec(IntensityMatrix base, Matrix psi_factors)
    : base_intensity(std::move(base)), psi(std::move(psi_factors)) {
  if (psi.cols() != static_cast<std::size_t>(base_intensity.size()))
    throw Error(Errc::DimensionMismatch, "psi must have p columns");
  for (std::size_t m = 0; m < psi.rows(); ++m)
    for (std::size_t i = 0; i < psi.cols(); ++i)
      if (psi(m, i) < 0.0)
        throw Error(Errc::NegativeOffDiagonal, "negative psi factor",
                    static_cast<long>(m), static_cast<long>(i));
}

std::vector<IntensityMatrix> RestrictedSpec::expand() const {
  const int p = base_intensity.size();
  std::vector<IntensityMatrix> out;
  out.reserve(regime_count());
  for (std::size_t m = 0; m < psi.rows(); ++m) {
    Matrix q(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        if (j != i) q(i, j) = psi(m, i) * base_intensity.rate(i, j);
    out.emplace_back(std::move(q));
  }
  out.push_back(base_intensity);
  return out;
}

MixtureModel validate_model(int p, int M, std::vector<double> pi,
                            std::vector<Matrix> intensities, Matrix switching) {
  StateSpace ss(p);
  if (M < 1) throw Error(Errc::DimensionMismatch, "regime count must be >= 1", M);
  if (static_cast<int>(pi.size()) != p)
    throw Error(Errc::DimensionMismatch, "initial law has wrong length");
  if (static_cast<int>(intensities.size()) != M)
    throw Error(Errc::DimensionMismatch, "need one intensity matrix per regime");
  if (switching.rows() != static_cast<std::size_t>(p) ||
      switching.cols() != static_cast<std::size_t>(M))
    throw Error(Errc::DimensionMismatch, "switching matrix must be p x M");

  double pisum = 0.0;
  for (int i = 0; i < p; ++i) {
    if (pi[i] < 0.0 || pi[i] > 1.0 + kRowSumTol)
      throw Error(Errc::ProbabilityRowSum, "initial probability outside [0,1]", i);
    pisum += pi[i];
  }
  if (std::fabs(pisum - 1.0) > kRowSumTol)
    throw Error(Errc::ProbabilityRowSum,
                "initial law sums to " + std::to_string(pisum));

  for (int i = 0; i < p; ++i) {
    double rowsum = 0.0;
    for (int m = 0; m < M; ++m) {
      double v = switching(i, m);
      if (v < 0.0 || v > 1.0 + kRowSumTol)
        throw Error(Errc::ProbabilityRowSum, "switching probability outside [0,1]", i, m);
      rowsum += v;
    }
    if (std::fabs(rowsum - 1.0) > kRowSumTol)
      throw Error(Errc::ProbabilityRowSum,
                  "switching row " + std::to_string(i) + " sums to " +
                      std::to_string(rowsum), i);
  }

  std::vector<IntensityMatrix> qs;
  qs.reserve(M);
  for (auto& q : intensities) {
    if (q.rows() != static_cast<std::size_t>(p))
      throw Error(Errc::DimensionMismatch, "intensity matrix has wrong size");
    qs.emplace_back(std::move(q)); // validates and rederives diagonals
  }

  return MixtureModel{ss, M, std::move(pi), std::move(qs), std::move(switching)};
}

IntensityMatrix build_intensity(std::span<const double> exit_rates,
                                const StochasticMatrix& chain) {
  const int p = chain.size();
  if (static_cast<int>(exit_rates.size()) != p)
    throw Error(Errc::DimensionMismatch, "exit rate vector has wrong length");
  for (int i = 0; i < p; ++i) {
    if (chain(i, i) != 0.0)
      throw Error(Errc::NonZeroDiagonal, "jump chain has a self-loop", i);
    if (exit_rates[i] <= 0.0)
      throw Error(Errc::AbsorbingState, "exit rate must be positive", i);
  }
  Matrix q(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      if (j != i) q(i, j) = exit_rates[i] * chain(i, j);
  return IntensityMatrix(std::move(q));
}

StochasticMatrix embedded_chain(const IntensityMatrix& q) {
  const int p = q.size();
  Matrix pi(p, p);
  for (int i = 0; i < p; ++i) {
    const double qi = q.exit_rate(i);
    if (qi == 0.0)
      throw Error(Errc::AbsorbingState, "state has zero exit rate", i);
    for (int j = 0; j < p; ++j)
      if (j != i) pi(i, j) = q.rate(i, j) / qi;
  }
  return StochasticMatrix(std::move(pi));
}

// Uniformization: with L = max_i q_i, e^{Qt} = sum_k Pois(Lt; k) U^k where
// U = I + Q/L is stochastic, so every partial sum stays nonnegative. For
// large Lt the series is applied to t/2^s and squared back.
StochasticMatrix matrix_exponential(const IntensityMatrix& q, double t) {
  if (t < 0.0 || !std::isfinite(t))
    throw Error(Errc::InvariantViolation, "time must be nonnegative and finite");
  const int p = q.size();
  if (t == 0.0) return StochasticMatrix(Matrix::identity(p));

  const double lambda = q.max_exit_rate();
  if (lambda == 0.0) return StochasticMatrix(Matrix::identity(p));

  int squarings = 0;
  double tau = t;
  while (lambda * tau > 64.0) {
    tau *= 0.5;
    ++squarings;
  }

  // U = I + Q/L: off-diagonals q_ij/L, diagonal 1 - q_i/L
  Matrix unif = Matrix::identity(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j)
      unif(i, j) += q.rate(i, j) / lambda;

  const double rho = lambda * tau;
  double weight = std::exp(-rho); // Pois(rho; 0)
  double mass = weight;
  Matrix term = Matrix::identity(p);
  Matrix sum = Matrix::identity(p);
  sum.scale(weight);
  for (int k = 1; mass < 1.0 - kPoissonTailTol; ++k) {
    term = term * unif;
    weight *= rho / k;
    mass += weight;
    Matrix scaled = term;
    scaled.scale(weight);
    sum += scaled;
    if (k > 100000)
      throw Error(Errc::InvariantViolation, "uniformization series did not converge");
  }

  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return StochasticMatrix(std::move(sum));
}

StochasticMatrix mixture_transition(const MixtureModel& model, double t) {
  const int p = model.p();
  Matrix out(p, p);
  for (int m = 0; m < model.regime_count; ++m) {
    const StochasticMatrix pm = matrix_exponential(model.intensities[m], t);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        out(i, j) += model.s(i, m) * pm(i, j);
  }
  return StochasticMatrix(std::move(out));
}

StochasticMatrix n_step_matrix(const MixtureModel& model, unsigned n) {
  const int p = model.p();
  Matrix out(p, p);
  for (int m = 0; m < model.regime_count; ++m) {
    const Matrix chain_n =
        matrix_power(embedded_chain(model.intensities[m]).matrix(), n);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        out(i, j) += model.s(i, m) * chain_n(i, j);
  }
  return StochasticMatrix(std::move(out));
}

} // namespace ctmix
