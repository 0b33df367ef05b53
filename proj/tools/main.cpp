#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "ctmix/errors.hpp"

using namespace ctmix;
using namespace ctmix::cli;

int main(int argc, char** argv) {
  CLI::App app{"ctmix: simulation and inference for finite mixtures of "
               "Markov jump processes"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate sample paths from a model config");
  simulate->add_option("--model", sim.model_file, "model config file")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--n-paths", sim.n_paths, "number of paths")
      ->required()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--horizon", sim.horizon, "observation horizon T")
      ->required()
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim.seed, "RNG seed")->default_val(1);
  simulate->add_flag("--labeled", sim.labeled, "store regime labels");
  simulate->add_option("--out", sim.out_file, "output dataset file")->required();
  simulate->add_option("--workers", sim.workers, "worker threads (0 = auto)")
      ->envname("CTMIX_WORKERS")
      ->default_val(0);

  FitArgs fitargs;
  CLI::App* fit = app.add_subcommand("fit", "Estimate model parameters");
  fit->add_option("--dataset", fitargs.dataset_file, "dataset file")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--method", fitargs.method,
                  "mle | mle-restricted | em | em-restricted | markov")
      ->required()
      ->check(CLI::IsMember(
          {"mle", "mle-restricted", "em", "em-restricted", "markov"}));
  fit->add_option("--init", fitargs.init_file, "init model config (em methods)")
      ->check(CLI::ExistingFile);
  fit->add_option("--regimes", fitargs.regimes, "regime count M")
      ->default_val(2)
      ->check(CLI::PositiveNumber);
  fit->add_option("--tol", fitargs.tolerance, "EM convergence tolerance")
      ->default_val(1e-6);
  fit->add_option("--max-iter", fitargs.max_iterations, "EM iteration cap")
      ->default_val(1000);
  fit->add_option("--seed", fitargs.seed, "EM init-perturbation seed")
      ->default_val(0);
  fit->add_option("--out", fitargs.out_file, "output fit file");
  fit->add_option("--trace", fitargs.trace_file, "EM iteration trace file");
  fit->add_option("--workers", fitargs.workers, "worker threads (0 = auto)")
      ->envname("CTMIX_WORKERS")
      ->default_val(0);

  TestArgs testargs;
  CLI::App* test = app.add_subcommand("test", "Likelihood-ratio test of two fits");
  test->add_option("--dataset", testargs.dataset_file, "dataset file")
      ->required()
      ->check(CLI::ExistingFile);
  test->add_option("--null", testargs.null_fit_file, "null-model fit file")
      ->required()
      ->check(CLI::ExistingFile);
  test->add_option("--alt", testargs.alt_fit_file, "alternative fit file")
      ->required()
      ->check(CLI::ExistingFile);
  test->add_option("--alpha", testargs.alpha, "significance level")
      ->default_val(0.05);
  test->add_option("--out", testargs.out_file, "structured report file");

  ReproduceArgs rep;
  CLI::App* reproduce = app.add_subcommand(
      "reproduce", "Full simulation-study workflow: simulate, fit, test");
  reproduce->add_option("--seed", rep.seed, "RNG seed")->default_val(1);
  reproduce->add_option("--out", rep.out_dir, "output directory")->required();
  reproduce->add_option("--n-paths", rep.n_paths, "number of paths")
      ->default_val(20000)
      ->check(CLI::PositiveNumber);
  reproduce->add_option("--horizon", rep.horizon, "observation horizon T")
      ->default_val(100.0)
      ->check(CLI::PositiveNumber);
  reproduce->add_option("--paths-figure", rep.paths_figure,
                        "number of sample-path coordinate files")
      ->default_val(5);
  reproduce->add_option("--tol", rep.tolerance, "EM convergence tolerance")
      ->default_val(1e-6);
  reproduce->add_option("--max-iter", rep.max_iterations, "EM iteration cap")
      ->default_val(1000);
  reproduce->add_option("--workers", rep.workers, "worker threads (0 = auto)")
      ->envname("CTMIX_WORKERS")
      ->default_val(0);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e); // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (fit->parsed()) return cmd_fit(fitargs);
    if (test->parsed()) return cmd_test(testargs);
    if (reproduce->parsed()) return cmd_reproduce(rep);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case Errc::MismatchedDataset:
        return kExitMismatched;
      case Errc::ParseError:
      case Errc::SchemaError:
      case Errc::InvariantViolation:
      case Errc::DimensionMismatch:
      case Errc::NegativeOffDiagonal:
      case Errc::ProbabilityRowSum:
      case Errc::NonZeroDiagonal:
      case Errc::AbsorbingState:
      case Errc::InconsistentPath:
      case Errc::WeightRowSum:
      case Errc::NoOccupation:
      case Errc::NoInitial:
      case Errc::NoExit:
      case Errc::InfeasiblePath:
      case Errc::LabelRequired:
      case Errc::PathOverflow:
        return kExitValidation;
      default:
        return kExitInternal;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
