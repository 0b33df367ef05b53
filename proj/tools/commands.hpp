#ifndef CTMIX_CLI_COMMANDS_HPP
#define CTMIX_CLI_COMMANDS_HPP

#include <cstdint>
#include <optional>
#include <string>

namespace ctmix::cli {

// distinct exit codes: 0 ok, 2 usage, 3 validation/parse, 4 not converged,
// 5 mismatched inputs, 1 internal
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitNotConverged = 4;
inline constexpr int kExitMismatched = 5;

struct SimulateArgs {
  std::string model_file;
  std::size_t n_paths = 0;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  bool labeled = false;
  std::string out_file;
  int workers = 0;
};

struct FitArgs {
  std::string dataset_file;
  std::string method; // mle | mle-restricted | em | em-restricted | markov
  std::string init_file;
  int regimes = 2;
  double tolerance = 1e-6;
  int max_iterations = 1000;
  std::uint64_t seed = 0; // init-perturbation seed for em methods
  std::string out_file;
  std::string trace_file;
  int workers = 0;
};

struct TestArgs {
  std::string dataset_file;
  std::string null_fit_file;
  std::string alt_fit_file;
  double alpha = 0.05;
  std::string out_file;
};

struct ReproduceArgs {
  std::uint64_t seed = 1;
  std::string out_dir;
  std::size_t n_paths = 20000;
  double horizon = 100.0;
  int paths_figure = 5;
  double tolerance = 1e-6;
  int max_iterations = 1000;
  int workers = 0;
};

int cmd_simulate(const SimulateArgs& args);
int cmd_fit(const FitArgs& args);
int cmd_test(const TestArgs& args);
int cmd_reproduce(const ReproduceArgs& args);

} // namespace ctmix::cli

#endif
