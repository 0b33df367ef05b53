#include "commands.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ctmix/em.hpp"
#include "ctmix/io.hpp"
#include "ctmix/lrt.hpp"
#include "ctmix/rng.hpp"

namespace ctmix::cli {

namespace {

std::string format_fixed(double v, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

// parameter table in the layout of the paper-style summary: one row per
// state, exit rates and switching probabilities per regime
std::string render_parameter_table(const MixtureModel& model) {
  const int p = model.p(), M = model.regime_count;
  std::ostringstream os;
  os << std::left << std::setw(7) << "State" << std::setw(10) << "pi_hat";
  for (int m = 0; m < M; ++m)
    os << std::setw(10) << ("q_i(" + std::to_string(m + 1) + ")");
  for (int m = 0; m < M; ++m)
    os << std::setw(10) << ("s_i(" + std::to_string(m + 1) + ")");
  os << "\n";
  for (int i = 0; i < p; ++i) {
    os << std::left << std::setw(7) << (i + 1) << std::setw(10)
       << format_fixed(model.initial_law[i]);
    for (int m = 0; m < M; ++m)
      os << std::setw(10) << format_fixed(model.intensities[m].exit_rate(i));
    for (int m = 0; m < M; ++m)
      os << std::setw(10) << format_fixed(model.s(i, m));
    os << "\n";
  }
  return os.str();
}

std::string render_matrix(const Matrix& m) {
  std::ostringstream os;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << "  ";
    for (std::size_t j = 0; j < m.cols(); ++j)
      os << std::setw(9) << format_fixed(m(i, j));
    os << "\n";
  }
  return os.str();
}

std::string render_fit(const FitResult& fit) {
  std::ostringstream os;
  os << "method: " << fit_method_name(fit.method) << "\n";
  os << render_parameter_table(fit.model);
  for (std::size_t m = 0; m < fit.embedded.size(); ++m) {
    os << "Embedded chain, regime " << (m + 1) << ":\n"
       << render_matrix(fit.embedded[m].matrix());
  }
  if (fit.psi && fit.psi->rows() > 0) {
    for (std::size_t m = 0; m < fit.psi->rows(); ++m) {
      os << "psi(" << (m + 1) << ") = diag(";
      for (std::size_t i = 0; i < fit.psi->cols(); ++i)
        os << (i ? ", " : "") << format_fixed((*fit.psi)(m, i));
      os << ")\n";
    }
  }
  os << "loglik: " << std::setprecision(10) << fit.loglik << "\n";
  if (fit.iterations > 0)
    os << "iterations: " << fit.iterations
       << (fit.converged ? " (converged)" : " (NOT converged)") << "\n";
  for (const auto& w : fit.warnings) os << "warning: " << w << "\n";
  return os.str();
}

nlohmann::json report_to_json(const TestReport& r, double alpha) {
  return nlohmann::json{
      {"null", r.null_id},           {"alternative", r.alt_id},
      {"statistic", r.statistic},    {"dof", r.dof},
      {"p_value", r.p_value},        {"alpha", alpha},
      {"reject_null", r.reject(alpha)}, {"loglik_null", r.loglik_null},
      {"loglik_alt", r.loglik_alt},  {"underfit_warning", r.underfit_warning}};
}

MixtureModel table1_truth() {
  std::vector<double> pi{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  const std::vector<std::vector<double>> rates{{1.0 / 3.0, 2.0 / 5.0, 1.0 / 2.0},
                                               {1.0 / 2.0, 2.0 / 5.0, 1.0 / 3.0}};
  const std::vector<Matrix> chains{
      Matrix{{0.0, 0.6, 0.4}, {0.5, 0.0, 0.5}, {0.4, 0.6, 0.0}},
      Matrix{{0.0, 0.8, 0.2}, {0.5, 0.0, 0.5}, {0.2, 0.8, 0.0}}};
  std::vector<Matrix> qs;
  for (int m = 0; m < 2; ++m)
    qs.push_back(build_intensity(rates[m], StochasticMatrix(chains[m])).matrix());
  Matrix s{{0.5, 0.5}, {0.25, 0.75}, {0.75, 0.25}};
  return validate_model(3, 2, std::move(pi), std::move(qs), std::move(s));
}

FitResult run_fit(const DatasetStats& stats, const FitArgs& args) {
  const FitMethod method = fit_method_from_name(args.method);
  switch (method) {
    case FitMethod::Markov:
      return fit_markov(stats);
    case FitMethod::MleComplete:
      return mle_unrestricted(aggregate_hard(stats, args.regimes));
    case FitMethod::MleRestricted:
      return mle_restricted(aggregate_hard(stats, args.regimes));
    case FitMethod::Em:
    case FitMethod::EmRestricted: {
      EmOptions opts;
      opts.tolerance = args.tolerance;
      opts.max_iterations = args.max_iterations;
      opts.restricted = method == FitMethod::EmRestricted;
      opts.regimes = args.regimes;
      opts.init_seed = args.seed;
      opts.workers = args.workers;
      if (!args.init_file.empty()) opts.init = read_model(args.init_file);
      return fit_em(stats, opts);
    }
  }
  throw Error(Errc::SchemaError, "unknown fit method");
}

void write_step_coordinates(const std::string& file, const SamplePath& path) {
  std::ofstream out(file);
  out << "t\tstate\n";
  out << std::setprecision(17);
  double t = 0.0;
  for (const auto& ev : path.events) {
    out << t << '\t' << (ev.state + 1) << '\n';
    t += ev.duration;
  }
  out << t << '\t' << (path.censored.state + 1) << '\n';
  out << path.horizon << '\t' << (path.censored.state + 1) << '\n';
}

} // namespace

int cmd_simulate(const SimulateArgs& args) {
  MixtureModel model = read_model(args.model_file);
  SimulateOptions opts;
  opts.keep_label = args.labeled;
  opts.workers = args.workers;
  auto paths =
      simulate_dataset(model, args.n_paths, args.horizon, args.seed, opts);
  write_dataset(args.out_file, paths);

  DatasetFingerprint fp = fingerprint_dataset(paths);
  std::vector<std::size_t> initial_counts(model.p(), 0);
  std::vector<std::size_t> label_counts(model.regime_count, 0);
  for (const auto& path : paths) {
    initial_counts[path.initial_state]++;
    if (path.regime) label_counts[*path.regime]++;
  }

  std::cout << "wrote " << paths.size() << " paths, horizon " << args.horizon
            << ", to " << args.out_file << "\n";
  std::cout << "fingerprint: " << fp.to_string() << "\n";
  std::cout << "initial-state frequencies:";
  for (int i = 0; i < model.p(); ++i)
    std::cout << " " << (i + 1) << ":"
              << format_fixed(static_cast<double>(initial_counts[i]) / paths.size());
  std::cout << "\n";
  if (args.labeled) {
    std::cout << "regime labels:";
    for (int m = 0; m < model.regime_count; ++m)
      std::cout << " " << (m + 1) << ":" << label_counts[m];
    std::cout << "\n";
  }
  return kExitOk;
}

int cmd_fit(const FitArgs& args) {
  int p = 0;
  if (!args.init_file.empty()) p = read_model(args.init_file).p();
  DatasetStats stats = read_dataset_stats(args.dataset_file, p);

  FitResult fit = run_fit(stats, args);
  if (!args.out_file.empty())
    write_fit(args.out_file, fit, RunMeta{stats.size(), stats.horizon});
  if (!args.trace_file.empty()) write_trace(args.trace_file, fit);

  std::cout << render_fit(fit);
  if (!args.out_file.empty())
    std::cout << "wrote fit to " << args.out_file << "\n";
  return fit.converged ? kExitOk : kExitNotConverged;
}

int cmd_test(const TestArgs& args) {
  DatasetStats stats = read_dataset_stats(args.dataset_file);
  FitResult null_fit = read_fit(args.null_fit_file);
  FitResult alt_fit = read_fit(args.alt_fit_file);

  TestReport report;
  if (null_fit.method == FitMethod::Markov) {
    if (!stats.fingerprint.empty() && !null_fit.dataset_fingerprint.empty() &&
        stats.fingerprint != null_fit.dataset_fingerprint)
      throw Error(Errc::MismatchedDataset,
                  "null fit was computed on a different dataset");
    report = lrt_markov_vs_mixture(stats, alt_fit);
  } else {
    report = lrt_restricted_vs_unrestricted(stats, null_fit, alt_fit);
  }

  std::cout << report.render(args.alpha);
  if (!args.out_file.empty()) {
    std::ofstream out(args.out_file);
    out << report_to_json(report, args.alpha).dump(2) << "\n";
    std::cout << "wrote report to " << args.out_file << "\n";
  }
  return kExitOk;
}

int cmd_reproduce(const ReproduceArgs& args) {
  namespace fs = std::filesystem;
  fs::create_directories(args.out_dir);
  const auto in_dir = [&](const std::string& name) {
    return (fs::path(args.out_dir) / name).string();
  };

  std::ofstream summary(in_dir("summary.txt"));
  auto note = [&](const std::string& line) {
    std::cout << line << "\n";
    summary << line << "\n";
  };

  MixtureModel truth = table1_truth();
  write_model(in_dir("model_truth.json"), truth);
  note("true model written to model_truth.json");

  SimulateOptions sopts;
  sopts.keep_label = true;
  sopts.workers = args.workers;
  auto paths =
      simulate_dataset(truth, args.n_paths, args.horizon, args.seed, sopts);
  write_dataset(in_dir("dataset.jsonl"), paths);
  DatasetStats stats = make_dataset_stats(paths, truth.p(), args.workers);
  note("simulated " + std::to_string(args.n_paths) + " paths on [0, " +
       format_fixed(args.horizon, 1) + "], seed " + std::to_string(args.seed));
  note("dataset fingerprint: " + stats.fingerprint);

  // step-function coordinates for a handful of sample paths
  if (args.paths_figure > 0) {
    fs::create_directories(in_dir("paths_figure"));
    RngStream pick(args.seed, 0x9a7f);
    for (int k = 0; k < args.paths_figure; ++k) {
      const auto idx =
          static_cast<std::size_t>(pick.next_uniform() * paths.size());
      write_step_coordinates(
          in_dir("paths_figure/path_" + std::to_string(paths[idx].id) + ".tsv"),
          paths[idx]);
    }
    note(std::to_string(args.paths_figure) +
         " sample-path coordinate files under paths_figure/");
  }

  std::ofstream tables(in_dir("tables.txt"));

  FitResult markov = fit_markov(stats);
  write_fit(in_dir("fit_markov.json"), markov,
            RunMeta{args.n_paths, args.horizon, args.seed});
  tables << "== Markov fit ==\n" << render_fit(markov) << "\n";

  EmOptions eopts;
  eopts.tolerance = args.tolerance;
  eopts.max_iterations = args.max_iterations;
  eopts.init_seed = args.seed;
  eopts.workers = args.workers;

  FitResult em = fit_em(stats, eopts);
  write_fit(in_dir("fit_em.json"), em,
            RunMeta{args.n_paths, args.horizon, args.seed});
  write_trace(in_dir("trace_em.tsv"), em);
  tables << "== EM, unrestricted mixture ==\n" << render_fit(em) << "\n";
  note("EM unrestricted: " + std::to_string(em.iterations) + " iterations" +
       (em.converged ? "" : " (NOT converged)"));

  EmOptions ropts = eopts;
  ropts.restricted = true;
  FitResult emr = fit_em(stats, ropts);
  write_fit(in_dir("fit_em_restricted.json"), emr,
            RunMeta{args.n_paths, args.horizon, args.seed});
  write_trace(in_dir("trace_em_restricted.tsv"), emr);
  tables << "== EM, restricted mixture ==\n" << render_fit(emr) << "\n";
  note("EM restricted: " + std::to_string(emr.iterations) + " iterations" +
       (emr.converged ? "" : " (NOT converged)"));

  TestReport t1 = lrt_markov_vs_mixture(stats, em);
  TestReport t2 = lrt_restricted_vs_unrestricted(stats, emr, em);
  {
    std::ofstream out(in_dir("test_markov_vs_mixture.txt"));
    out << t1.render(0.05);
    std::ofstream outj(in_dir("test_markov_vs_mixture.json"));
    outj << report_to_json(t1, 0.05).dump(2) << "\n";
    std::ofstream out2(in_dir("test_restricted_vs_unrestricted.txt"));
    out2 << t2.render(0.05);
    std::ofstream out2j(in_dir("test_restricted_vs_unrestricted.json"));
    out2j << report_to_json(t2, 0.05).dump(2) << "\n";
  }
  note("LRT markov vs mixture: -2lnL = " + format_fixed(t1.statistic, 1) +
       ", dof " + std::to_string(t1.dof) +
       (t1.reject(0.05) ? " (reject at 0.05)" : " (no rejection at 0.05)"));
  note("LRT restricted vs unrestricted: -2lnL = " +
       format_fixed(t2.statistic, 1) + ", dof " + std::to_string(t2.dof) +
       (t2.reject(0.05) ? " (reject at 0.05)" : " (no rejection at 0.05)"));

  note("tables written to tables.txt");
  const bool ok = em.converged && emr.converged;
  if (!ok) note("warning: an EM run did not converge");
  return ok ? kExitOk : kExitNotConverged;
}

} // namespace ctmix::cli
