#include "ctmix/em.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>

#include "ctmix/parallel.hpp"
#include "ctmix/rng.hpp"

namespace ctmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double sup_norm_change(const MixtureModel& a, const MixtureModel& b,
                       const std::optional<Matrix>& psi_a,
                       const std::optional<Matrix>& psi_b) {
  double d = 0.0;
  const int p = a.p();
  for (int m = 0; m < a.regime_count; ++m)
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        if (j != i)
          d = std::max(d, std::fabs(a.intensities[m].rate(i, j) -
                                    b.intensities[m].rate(i, j)));
  for (int i = 0; i < p; ++i)
    for (int m = 0; m < a.regime_count; ++m)
      d = std::max(d, std::fabs(a.s(i, m) - b.s(i, m)));
  if (psi_a && psi_b) d = std::max(d, max_abs_diff(*psi_a, *psi_b));
  return d;
}

} // namespace

std::vector<double> path_log_joint(const MixtureModel& model,
                                   const PathStats& stats) {
  const int p = model.p(), M = model.regime_count;
  std::vector<double> out(M);
  bool any_finite = false;
  for (int m = 0; m < M; ++m) {
    const IntensityMatrix& q = model.intensities[m];
    double ll = 0.0;
    const double init_prob =
        model.initial_law[stats.initial_state] * model.s(stats.initial_state, m);
    if (init_prob > 0.0)
      ll += std::log(init_prob);
    else
      ll = kNegInf;

    if (std::isfinite(ll)) {
      for (int i = 0; i < p; ++i) {
        if (stats.occupation[i] != 0.0) ll -= q.exit_rate(i) * stats.occupation[i];
        if (stats.exit_counts[i] == 0) continue;
        for (int j = 0; j < p; ++j) {
          if (j == i) continue;
          const std::int64_t n = stats.jumps(i, j);
          if (n == 0) continue;
          const double rate = q.rate(i, j);
          if (rate <= 0.0) {
            ll = kNegInf;
            break;
          }
          ll += static_cast<double>(n) * std::log(rate);
        }
        if (!std::isfinite(ll)) break;
      }
    }
    out[m] = ll;
    if (std::isfinite(ll)) any_finite = true;
  }
  if (!any_finite)
    throw Error(Errc::InfeasiblePath, "path impossible under every regime");
  return out;
}

namespace {

// log-sum-exp with max subtraction; writes normalized posteriors into row.
double normalize_posterior(std::vector<double>& joint, double* row) {
  const int M = static_cast<int>(joint.size());
  double mx = kNegInf;
  for (double v : joint) mx = std::max(mx, v);
  double denom = 0.0;
  for (int m = 0; m < M; ++m) {
    const double e = std::isfinite(joint[m]) ? std::exp(joint[m] - mx) : 0.0;
    row[m] = e;
    denom += e;
  }
  for (int m = 0; m < M; ++m) row[m] /= denom;
  return mx + std::log(denom);
}

} // namespace

std::vector<double> e_step(const MixtureModel& model, const DatasetStats& data,
                           int workers) {
  const int M = model.regime_count;
  std::vector<double> post(data.size() * M);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  parallel_for(data.size(), workers, [&](std::size_t lo, std::size_t hi) {
    try {
      for (std::size_t k = lo; k < hi; ++k) {
        std::vector<double> joint;
        try {
          joint = path_log_joint(model, data.paths[k]);
        } catch (const Error& e) {
          if (e.code() == Errc::InfeasiblePath)
            throw Error(Errc::InfeasiblePath,
                        "path impossible under every regime",
                        static_cast<long>(k));
          throw;
        }
        normalize_posterior(joint, &post[k * M]);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);
  return post;
}

LoglikValue observed_loglik(const MixtureModel& model, const DatasetStats& data,
                            int workers) {
  const int M = model.regime_count;
  std::vector<double> per_path(data.size());
  std::exception_ptr failure;
  std::mutex failure_mutex;
  parallel_for(data.size(), workers, [&](std::size_t lo, std::size_t hi) {
    try {
      std::vector<double> row(M);
      for (std::size_t k = lo; k < hi; ++k) {
        std::vector<double> joint;
        bool infeasible = false;
        try {
          joint = path_log_joint(model, data.paths[k]);
        } catch (const Error& e) {
          if (e.code() != Errc::InfeasiblePath) throw;
          infeasible = true;
        }
        per_path[k] = infeasible ? kNegInf : normalize_posterior(joint, row.data());
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);

  KahanSum acc;
  for (double v : per_path) {
    if (!std::isfinite(v)) return LoglikValue{kNegInf, true};
    acc.add(v);
  }
  return LoglikValue{acc.value(), false};
}

MStepResult m_step(const std::vector<double>& posteriors,
                   const DatasetStats& data, bool restricted,
                   const MixtureModel& previous) {
  WeightedStats ws = aggregate(data, posteriors, WeightSource::Posteriors);
  if (ws.M != previous.regime_count)
    throw Error(Errc::DimensionMismatch, "posterior width != regime count");
  std::vector<std::string> warnings;
  if (restricted) {
    RestrictedEstimate est = estimate_restricted(ws, &previous, &warnings);
    return MStepResult{std::move(est.model), std::move(est.psi),
                       std::move(est.pooled), std::move(warnings)};
  }
  MixtureModel model = estimate_unrestricted(ws, &previous, &warnings);
  return MStepResult{std::move(model), std::nullopt, std::nullopt,
                     std::move(warnings)};
}

MixtureModel default_em_init(const DatasetStats& data, int regimes,
                             std::uint64_t seed) {
  if (regimes < 1)
    throw Error(Errc::DimensionMismatch, "need at least one regime", regimes);
  const int p = data.p;
  WeightedStats pooled = aggregate_pooled(data);
  std::vector<std::string> warnings;
  MixtureModel markov = estimate_unrestricted(pooled, nullptr, &warnings);

  RngStream stream(seed, 0x1d17); // perturbation stream, separate from paths
  std::vector<Matrix> qs;
  qs.reserve(regimes);
  for (int m = 0; m < regimes; ++m) {
    Matrix q(p, p);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j)
        if (j != i) {
          const double jitter = 1.0 + 0.1 * (2.0 * stream.next_uniform() - 1.0);
          q(i, j) = markov.intensities[0].rate(i, j) * jitter;
        }
    qs.push_back(std::move(q));
  }
  Matrix s(p, regimes, 1.0 / regimes);
  return validate_model(p, regimes, markov.initial_law, std::move(qs),
                        std::move(s));
}

FitResult fit_em(const DatasetStats& data, const EmOptions& options) {
  if (data.size() < 1)
    throw Error(Errc::InvariantViolation, "empty dataset");
  if (!(options.tolerance > 0.0))
    throw Error(Errc::InvariantViolation, "tolerance must be positive");
  if (options.max_iterations < 1)
    throw Error(Errc::InvariantViolation, "max_iterations must be >= 1");

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  // pi is estimated once from the initial-state frequencies and never moves
  std::vector<double> pi_hat;
  {
    WeightedStats pooled = aggregate_pooled(data);
    pi_hat = estimate_initial_law(pooled);
  }

  MixtureModel model = options.init
                           ? *options.init
                           : default_em_init(data, options.regimes,
                                             options.init_seed);
  if (model.p() != data.p)
    throw Error(Errc::DimensionMismatch, "init model does not match dataset");
  model.initial_law = pi_hat;

  const int M = model.regime_count;
  std::optional<Matrix> psi_prev;
  std::vector<std::string> warnings;

  FitResult fit{model, 0.0, false,
                options.restricted ? FitMethod::EmRestricted : FitMethod::Em};
  fit.converged = false;
  fit.dataset_fingerprint = data.fingerprint;

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const std::vector<double> post = e_step(model, data, options.workers);
    MStepResult step = m_step(post, data, options.restricted, model);
    for (auto& w : step.warnings) warnings.push_back(std::move(w));

    const double delta =
        sup_norm_change(step.model, model, step.psi, psi_prev);
    model = std::move(step.model);
    psi_prev = std::move(step.psi);
    if (step.pooled_chain)
      fit.embedded.assign(M, *step.pooled_chain);

    const LoglikValue ll = observed_loglik(model, data, options.workers);
    fit.trace_loglik.push_back(ll.value);
    fit.trace_delta.push_back(delta);
    fit.trace_seconds.push_back(elapsed());
    fit.loglik = ll.value;
    fit.loglik_minus_infinity = ll.minus_infinity;

    if (delta <= options.tolerance) {
      fit.converged = true;
      ++iter;
      break;
    }
  }

  fit.iterations = iter;
  fit.model = std::move(model);
  if (options.restricted) {
    fit.psi = std::move(psi_prev);
  } else {
    fit.embedded.clear();
    try {
      for (int m = 0; m < M; ++m)
        fit.embedded.push_back(embedded_chain(fit.model.intensities[m]));
    } catch (const Error& e) {
      if (e.code() != Errc::AbsorbingState) throw;
      fit.embedded.clear();
      warnings.push_back("embedded chain undefined (fitted absorbing state " +
                         std::to_string(e.index()) + ")");
    }
  }
  if (!fit.converged)
    warnings.push_back("EM did not converge within " +
                       std::to_string(options.max_iterations) + " iterations");
  fit.warnings = std::move(warnings);
  return fit;
}

} // namespace ctmix
