#include "ctmix/lrt.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <iomanip>
#include <sstream>

namespace ctmix {

namespace {

constexpr double kClampTol = 1e-6;

void check_same_dataset(const std::string& a, const std::string& b,
                        const std::string& what) {
  if (!a.empty() && !b.empty() && a != b)
    throw Error(Errc::MismatchedDataset, what + " were computed on different datasets");
}

TestReport make_report(double loglik_null, double loglik_alt, int dof,
                       std::string null_id, std::string alt_id) {
  TestReport r;
  r.loglik_null = loglik_null;
  r.loglik_alt = loglik_alt;
  r.dof = dof;
  r.null_id = std::move(null_id);
  r.alt_id = std::move(alt_id);
  double stat = 2.0 * (loglik_alt - loglik_null);
  if (stat < 0.0) {
    r.underfit_warning = stat < -kClampTol;
    stat = 0.0;
  }
  r.statistic = stat;
  r.p_value = chi_square_sf(stat, dof);
  return r;
}

} // namespace

double chi_square_sf(double x, int dof) {
  if (x < 0.0 || !std::isfinite(x))
    throw Error(Errc::InvariantViolation, "chi-square statistic must be >= 0");
  if (dof < 1)
    throw Error(Errc::InvariantViolation, "degrees of freedom must be >= 1", dof);
  if (x == 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

FitResult fit_markov(const DatasetStats& data) {
  WeightedStats pooled = aggregate_pooled(data);
  std::vector<std::string> warnings;
  MixtureModel model = estimate_unrestricted(pooled, nullptr, &warnings);
  const LoglikValue ll = complete_loglik(model, pooled);
  FitResult fit{std::move(model), ll.value, ll.minus_infinity, FitMethod::Markov};
  fit.dataset_fingerprint = data.fingerprint;
  try {
    fit.embedded.push_back(embedded_chain(fit.model.intensities[0]));
  } catch (const Error& e) {
    if (e.code() != Errc::AbsorbingState) throw;
    warnings.push_back("embedded chain undefined (fitted absorbing state " +
                       std::to_string(e.index()) + ")");
  }
  fit.warnings = std::move(warnings);
  return fit;
}

TestReport lrt_markov_vs_mixture(const DatasetStats& data,
                                 const FitResult& mixture_fit) {
  check_same_dataset(data.fingerprint, mixture_fit.dataset_fingerprint,
                     "mixture fit and dataset");
  const FitResult markov = fit_markov(data);
  const int p = data.p;
  const int M = mixture_fit.model.regime_count;
  // the paper applies the same reference distribution to the restricted and
  // unrestricted alternatives
  const int dof = p * p * (M - 1);
  TestReport r = make_report(markov.loglik, mixture_fit.loglik, dof, "markov",
                             fit_method_name(mixture_fit.method));
  return r;
}

TestReport lrt_restricted_vs_unrestricted(const DatasetStats& data,
                                          const FitResult& restricted_fit,
                                          const FitResult& unrestricted_fit) {
  check_same_dataset(data.fingerprint, restricted_fit.dataset_fingerprint,
                     "restricted fit and dataset");
  check_same_dataset(data.fingerprint, unrestricted_fit.dataset_fingerprint,
                     "unrestricted fit and dataset");
  check_same_dataset(restricted_fit.dataset_fingerprint,
                     unrestricted_fit.dataset_fingerprint, "the two fits");
  const int p = data.p;
  const int M = unrestricted_fit.model.regime_count;
  const int dof = p * (p - 1) * (M - 1);
  return make_report(restricted_fit.loglik, unrestricted_fit.loglik, dof,
                     fit_method_name(restricted_fit.method),
                     fit_method_name(unrestricted_fit.method));
}

std::string TestReport::render(double alpha) const {
  std::ostringstream os;
  os << "Likelihood ratio test: " << null_id << " (null) vs " << alt_id
     << " (alternative)\n";
  os << std::setprecision(6);
  os << "  loglik null        " << loglik_null << "\n";
  os << "  loglik alternative " << loglik_alt << "\n";
  os << std::scientific << std::setprecision(4);
  os << "  -2 ln Lambda       " << statistic << "\n";
  os << std::defaultfloat;
  os << "  dof                " << dof << "\n";
  os << std::scientific << std::setprecision(4);
  os << "  p-value            " << p_value << "\n";
  os << std::defaultfloat;
  os << "  decision           "
     << (reject(alpha) ? "reject null" : "fail to reject") << " at alpha = "
     << alpha << "\n";
  if (underfit_warning)
    os << "  warning: alternative scored below the null; statistic clamped to 0\n";
  return os.str();
}

} // namespace ctmix
