#ifndef CTMIX_IO_HPP
#define CTMIX_IO_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctmix/mle.hpp"
#include "ctmix/simulate.hpp"
#include "ctmix/stats.hpp"

namespace ctmix {

// Binds fits and tests to the dataset they were computed on. The hash runs
// over the canonical record serialization in file order.
struct DatasetFingerprint {
  std::string hash;
  std::size_t n_paths = 0;
  double horizon = 0.0;
  bool labeled = false;

  std::string to_string() const;
};

DatasetFingerprint fingerprint_dataset(const std::vector<SamplePath>& paths);

// Datasets are line-delimited: one JSON record per path, states and regimes
// 1-based in the file. Durations round-trip bit-exactly.
void write_dataset(const std::string& file, const std::vector<SamplePath>& paths);
std::vector<SamplePath> read_dataset(const std::string& file);

// Streaming writer: records go straight to disk, the fingerprint accumulates
// incrementally.
class DatasetWriter {
public:
  explicit DatasetWriter(const std::string& file);
  ~DatasetWriter();
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  void add(const SamplePath& path);
  /// flushes and returns the fingerprint of everything written
  DatasetFingerprint close();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Streaming reader; memory use is bounded by one record.
void for_each_path(const std::string& file,
                   const std::function<void(SamplePath&&)>& fn);

/// Per-path sufficient statistics straight from a file (two streaming
/// passes when p = 0 and must be inferred). Fills the fingerprint.
DatasetStats read_dataset_stats(const std::string& file, int p = 0);

/// Same reduction from in-memory paths.
DatasetStats make_dataset_stats(const std::vector<SamplePath>& paths, int p = 0,
                                int workers = 1);

// Model configs are a single JSON document; unknown fields are rejected.
MixtureModel read_model(const std::string& file);
void write_model(const std::string& file, const MixtureModel& model);

struct RunMeta {
  std::size_t n_paths = 0;
  double horizon = 0.0;
  std::optional<std::uint64_t> seed;
};

void write_fit(const std::string& file, const FitResult& fit,
               const RunMeta& meta = {});
FitResult read_fit(const std::string& file);

/// Tab-separated iteration trace: iteration, loglik, sup-norm delta, seconds.
void write_trace(const std::string& file, const FitResult& fit);

} // namespace ctmix

#endif
