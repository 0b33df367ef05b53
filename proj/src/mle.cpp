#include "ctmix/mle.hpp"

#include <cmath>
#include <limits>

namespace ctmix {

const char* fit_method_name(FitMethod m) {
  switch (m) {
    case FitMethod::MleComplete: return "mle";
    case FitMethod::MleRestricted: return "mle-restricted";
    case FitMethod::Em: return "em";
    case FitMethod::EmRestricted: return "em-restricted";
    case FitMethod::Markov: return "markov";
  }
  return "unknown";
}

FitMethod fit_method_from_name(const std::string& name) {
  if (name == "mle") return FitMethod::MleComplete;
  if (name == "mle-restricted") return FitMethod::MleRestricted;
  if (name == "em") return FitMethod::Em;
  if (name == "em-restricted") return FitMethod::EmRestricted;
  if (name == "markov") return FitMethod::Markov;
  throw Error(Errc::SchemaError, "unknown fit method '" + name + "'");
}

std::vector<double> estimate_initial_law(const WeightedStats& stats) {
  std::vector<double> pi(stats.p);
  for (int i = 0; i < stats.p; ++i)
    pi[i] = static_cast<double>(stats.initial_tot[i]) /
            static_cast<double>(stats.n_paths);
  return pi;
}

namespace {

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings) warnings->push_back(std::move(msg));
}

// Switching rows share the denominator sum(B_i); the last regime takes the
// complement so each row sums to one exactly.
Matrix estimate_switching(const WeightedStats& stats,
                          const MixtureModel* fallback,
                          std::vector<std::string>* warnings) {
  const int p = stats.p, M = stats.M;
  Matrix s(p, M);
  if (M == 1) {
    // no free switching parameter: the constraint forces s = 1
    for (int i = 0; i < p; ++i) s(i, 0) = 1.0;
    return s;
  }
  for (int i = 0; i < p; ++i) {
    const std::int64_t denom = stats.initial_tot[i];
    if (denom == 0) {
      if (!fallback)
        throw Error(Errc::NoInitial, "no path starts in state", i);
      warn(warnings, "no path starts in state " + std::to_string(i) +
                         "; switching row carried forward");
      for (int m = 0; m < M; ++m) s(i, m) = fallback->s(i, m);
      continue;
    }
    double partial = 0.0;
    for (int m = 0; m + 1 < M; ++m) {
      s(i, m) = stats.initials_w(m, i) / static_cast<double>(denom);
      partial += s(i, m);
    }
    double last = 1.0 - partial;
    if (last < 0.0 && last > -1e-12) last = 0.0;
    s(i, M - 1) = last;
  }
  return s;
}

} // namespace

MixtureModel estimate_unrestricted(const WeightedStats& stats,
                                   const MixtureModel* fallback,
                                   std::vector<std::string>* warnings) {
  const int p = stats.p, M = stats.M;
  std::vector<Matrix> qs;
  qs.reserve(M);
  for (int m = 0; m < M; ++m) {
    Matrix q(p, p);
    for (int i = 0; i < p; ++i) {
      const double denom = stats.occupation_w(m, i);
      if (denom == 0.0) {
        if (!fallback)
          throw Error(Errc::NoOccupation, "regime never occupies state", i, m);
        warn(warnings, "regime " + std::to_string(m) +
                           " never occupies state " + std::to_string(i) +
                           "; rates carried forward");
        for (int j = 0; j < p; ++j)
          if (j != i) q(i, j) = fallback->intensities[m].rate(i, j);
        continue;
      }
      for (int j = 0; j < p; ++j)
        if (j != i) q(i, j) = stats.jumps_w(m, i, j) / denom;
    }
    qs.push_back(std::move(q));
  }

  return validate_model(p, M, estimate_initial_law(stats), std::move(qs),
                        estimate_switching(stats, fallback, warnings));
}

RestrictedEstimate estimate_restricted(const WeightedStats& stats,
                                       const MixtureModel* fallback,
                                       std::vector<std::string>* warnings) {
  const int p = stats.p, M = stats.M;
  const int ref = M - 1; // psi = 1 reference regime

  // base exit rates from the reference regime only
  std::vector<double> q_base(p, 0.0);
  for (int i = 0; i < p; ++i) {
    const double denom = stats.occupation_w(ref, i);
    if (denom == 0.0) {
      if (!fallback)
        throw Error(Errc::NoOccupation, "reference regime never occupies state",
                    i, ref);
      warn(warnings, "reference regime never occupies state " +
                         std::to_string(i) + "; exit rate carried forward");
      q_base[i] = fallback->intensities[ref].exit_rate(i);
      continue;
    }
    q_base[i] = stats.exits_w(ref, i) / denom;
  }

  Matrix psi(M - 1, p);
  for (int m = 0; m + 1 < M; ++m) {
    for (int i = 0; i < p; ++i) {
      const double denom = stats.occupation_w(m, i);
      if (denom == 0.0 || q_base[i] == 0.0) {
        double carried = 1.0;
        if (fallback && q_base[i] > 0.0)
          carried = fallback->intensities[m].exit_rate(i) / q_base[i];
        if (!fallback && denom == 0.0)
          throw Error(Errc::NoOccupation, "regime never occupies state", i, m);
        warn(warnings, "psi undefined for regime " + std::to_string(m) +
                           ", state " + std::to_string(i) + "; carried forward");
        psi(m, i) = carried;
        continue;
      }
      psi(m, i) = stats.exits_w(m, i) / (q_base[i] * denom);
    }
  }

  // pooled embedded chain over all paths and regimes
  Matrix chain(p, p);
  for (int i = 0; i < p; ++i) {
    const std::int64_t exits = stats.exit_tot[i];
    if (exits == 0) {
      if (q_base[i] > 0.0)
        throw Error(Errc::NoExit, "no observed jump out of state", i);
      // rate row is zero in every regime; the chain row is unused filler
      for (int j = 0; j < p; ++j)
        if (j != i) chain(i, j) = 1.0 / static_cast<double>(p - 1);
      warn(warnings, "state " + std::to_string(i) +
                         " has no observed exits; chain row is a placeholder");
      continue;
    }
    for (int j = 0; j < p; ++j)
      if (j != i)
        chain(i, j) = static_cast<double>(stats.jump_tot[i * p + j]) /
                      static_cast<double>(exits);
  }
  StochasticMatrix pooled(std::move(chain));

  std::vector<Matrix> qs;
  qs.reserve(M);
  for (int m = 0; m < M; ++m) {
    Matrix q(p, p);
    for (int i = 0; i < p; ++i) {
      const double factor = (m == ref) ? 1.0 : psi(m, i);
      for (int j = 0; j < p; ++j)
        if (j != i) q(i, j) = factor * pooled(i, j) * q_base[i];
    }
    qs.push_back(std::move(q));
  }

  MixtureModel model =
      validate_model(p, M, estimate_initial_law(stats), std::move(qs),
                     estimate_switching(stats, fallback, warnings));
  return RestrictedEstimate{std::move(model), std::move(psi), std::move(pooled)};
}

LoglikValue complete_loglik(const MixtureModel& model, const WeightedStats& stats) {
  const int p = stats.p, M = stats.M;
  if (model.p() != p || model.regime_count != M)
    throw Error(Errc::DimensionMismatch, "model does not match aggregates");

  KahanSum acc;
  bool minus_inf = false;
  for (int m = 0; m < M; ++m) {
    for (int i = 0; i < p; ++i) {
      const double b = stats.initials_w(m, i);
      if (b != 0.0) {
        const double prob = model.s(i, m) * model.initial_law[i];
        if (prob <= 0.0)
          minus_inf = true;
        else
          acc.add(b * std::log(prob));
      }
      const double occ = stats.occupation_w(m, i);
      if (occ != 0.0) acc.add(-model.intensities[m].exit_rate(i) * occ);
      for (int j = 0; j < p; ++j) {
        if (j == i) continue;
        const double n = stats.jumps_w(m, i, j);
        if (n == 0.0) continue;
        const double rate = model.intensities[m].rate(i, j);
        if (rate <= 0.0)
          minus_inf = true;
        else
          acc.add(n * std::log(rate));
      }
    }
  }
  if (minus_inf)
    return LoglikValue{-std::numeric_limits<double>::infinity(), true};
  return LoglikValue{acc.value(), false};
}

namespace {

// Embedded chains are a reporting convenience; a fitted absorbing state
// leaves them undefined, which is recorded instead of thrown.
std::vector<StochasticMatrix> derive_embedded(const MixtureModel& model,
                                              std::vector<std::string>* warnings) {
  std::vector<StochasticMatrix> out;
  out.reserve(model.regime_count);
  for (int m = 0; m < model.regime_count; ++m) {
    try {
      out.push_back(embedded_chain(model.intensities[m]));
    } catch (const Error& e) {
      if (e.code() != Errc::AbsorbingState) throw;
      warn(warnings, "embedded chain undefined for regime " + std::to_string(m) +
                         " (fitted absorbing state " + std::to_string(e.index()) +
                         ")");
      return {};
    }
  }
  return out;
}

} // namespace

FitResult mle_unrestricted(const WeightedStats& stats) {
  if (stats.source != WeightSource::HardLabels)
    throw Error(Errc::LabelRequired, "complete-data MLE needs hard labels");
  std::vector<std::string> warnings;
  MixtureModel model = estimate_unrestricted(stats, nullptr, &warnings);
  const LoglikValue ll = complete_loglik(model, stats);
  FitResult fit{std::move(model), ll.value, ll.minus_infinity,
                FitMethod::MleComplete};
  fit.embedded = derive_embedded(fit.model, &warnings);
  fit.dataset_fingerprint = stats.fingerprint;
  fit.warnings = std::move(warnings);
  return fit;
}

FitResult mle_restricted(const WeightedStats& stats) {
  if (stats.source != WeightSource::HardLabels)
    throw Error(Errc::LabelRequired, "complete-data MLE needs hard labels");
  std::vector<std::string> warnings;
  RestrictedEstimate est = estimate_restricted(stats, nullptr, &warnings);
  const LoglikValue ll = complete_loglik(est.model, stats);
  FitResult fit{std::move(est.model), ll.value, ll.minus_infinity,
                FitMethod::MleRestricted};
  fit.embedded.assign(stats.M, est.pooled);
  fit.psi = std::move(est.psi);
  fit.dataset_fingerprint = stats.fingerprint;
  fit.warnings = std::move(warnings);
  return fit;
}

} // namespace ctmix
