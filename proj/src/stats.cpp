#include "ctmix/stats.hpp"

#include <cmath>
#include <exception>
#include <mutex>

#include "ctmix/parallel.hpp"

namespace ctmix {

PathStats sufficient_stats(const SamplePath& path, int p) {
  PathStats st;
  st.p = p;
  st.horizon = path.horizon;
  st.initial_state = path.initial_state;
  st.jump_counts.assign(static_cast<std::size_t>(p) * p, 0);
  st.exit_counts.assign(p, 0);
  st.occupation.assign(p, 0.0);

  auto check_state = [&](int s) {
    if (s < 0 || s >= p)
      throw Error(Errc::InconsistentPath, "state label out of range",
                  static_cast<long>(path.id), s);
  };
  check_state(path.initial_state);

  int prev = -1;
  for (std::size_t n = 0; n < path.events.size(); ++n) {
    const JumpEvent& ev = path.events[n];
    check_state(ev.state);
    if (!(ev.duration > 0.0))
      throw Error(Errc::InconsistentPath, "nonpositive sojourn duration",
                  static_cast<long>(path.id), static_cast<long>(n));
    if (n == 0 && ev.state != path.initial_state)
      throw Error(Errc::InconsistentPath, "first sojourn not in initial state",
                  static_cast<long>(path.id));
    if (prev >= 0) {
      if (ev.state == prev)
        throw Error(Errc::InconsistentPath, "consecutive states repeat",
                    static_cast<long>(path.id), static_cast<long>(n));
      st.jump_counts[prev * p + ev.state] += 1;
    }
    st.occupation[ev.state] += ev.duration;
    prev = ev.state;
  }

  check_state(path.censored.state);
  if (path.censored.duration < 0.0)
    throw Error(Errc::InconsistentPath, "negative censored duration",
                static_cast<long>(path.id));
  if (prev < 0) {
    if (path.censored.state != path.initial_state)
      throw Error(Errc::InconsistentPath, "censored sojourn not in initial state",
                  static_cast<long>(path.id));
  } else {
    if (path.censored.state == prev)
      throw Error(Errc::InconsistentPath, "consecutive states repeat at censoring",
                  static_cast<long>(path.id));
    st.jump_counts[prev * p + path.censored.state] += 1;
  }
  st.occupation[path.censored.state] += path.censored.duration;

  for (int i = 0; i < p; ++i) {
    std::int64_t row = 0;
    for (int j = 0; j < p; ++j) row += st.jump_counts[i * p + j];
    st.exit_counts[i] = row;
  }
  return st;
}

DatasetStats dataset_stats(const std::vector<SamplePath>& paths, int p,
                           int workers) {
  DatasetStats out;
  out.p = p;
  out.horizon = paths.empty() ? 0.0 : paths.front().horizon;
  out.paths.resize(paths.size());

  const bool labeled = !paths.empty() && paths.front().regime.has_value();
  if (labeled) out.labels.resize(paths.size());

  std::exception_ptr failure;
  std::mutex failure_mutex;
  parallel_for(paths.size(), workers, [&](std::size_t lo, std::size_t hi) {
    try {
      for (std::size_t k = lo; k < hi; ++k) {
        out.paths[k] = sufficient_stats(paths[k], p);
        if (labeled) {
          if (!paths[k].regime)
            throw Error(Errc::InconsistentPath, "mixed labeled/unlabeled records",
                        static_cast<long>(paths[k].id));
          out.labels[k] = *paths[k].regime;
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  });
  if (failure) std::rethrow_exception(failure);
  return out;
}

namespace {

WeightedStats aggregate_impl(const DatasetStats& data,
                             const std::vector<double>& weights, int M,
                             WeightSource source) {
  const int p = data.p;
  const std::size_t N = data.size();

  WeightedStats ws;
  ws.p = p;
  ws.M = M;
  ws.n_paths = N;
  ws.source = source;
  ws.fingerprint = data.fingerprint;
  ws.jump_w.assign(static_cast<std::size_t>(M) * p * p, 0.0);
  ws.exit_w.assign(static_cast<std::size_t>(M) * p, 0.0);
  ws.occ_w.assign(static_cast<std::size_t>(M) * p, 0.0);
  ws.initial_w.assign(static_cast<std::size_t>(M) * p, 0.0);
  ws.initial_tot.assign(p, 0);
  ws.jump_tot.assign(static_cast<std::size_t>(p) * p, 0);
  ws.exit_tot.assign(p, 0);
  ws.occ_tot.assign(p, 0.0);

  std::vector<KahanSum> jump_acc(ws.jump_w.size());
  std::vector<KahanSum> exit_acc(ws.exit_w.size());
  std::vector<KahanSum> occ_acc(ws.occ_w.size());
  std::vector<KahanSum> init_acc(ws.initial_w.size());
  std::vector<KahanSum> occ_tot_acc(p);

  for (std::size_t k = 0; k < N; ++k) {
    const PathStats& st = data.paths[k];
    if (st.p != p)
      throw Error(Errc::DimensionMismatch, "path stats with mismatched p",
                  static_cast<long>(k));
    double wsum = 0.0;
    for (int m = 0; m < M; ++m) wsum += weights[k * M + m];
    if (std::fabs(wsum - 1.0) > 1e-8)
      throw Error(Errc::WeightRowSum,
                  "weight row sums to " + std::to_string(wsum),
                  static_cast<long>(k));

    for (int m = 0; m < M; ++m) {
      const double w = weights[k * M + m];
      if (w == 0.0) continue;
      for (int i = 0; i < p; ++i) {
        if (st.exit_counts[i] != 0) {
          for (int j = 0; j < p; ++j) {
            const std::int64_t c = st.jump_counts[i * p + j];
            if (c != 0) jump_acc[(m * p + i) * p + j].add(w * static_cast<double>(c));
          }
          exit_acc[m * p + i].add(w * static_cast<double>(st.exit_counts[i]));
        }
        if (st.occupation[i] != 0.0) occ_acc[m * p + i].add(w * st.occupation[i]);
      }
      init_acc[m * p + st.initial_state].add(w);
    }

    ws.initial_tot[st.initial_state] += 1;
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) ws.jump_tot[i * p + j] += st.jump_counts[i * p + j];
      ws.exit_tot[i] += st.exit_counts[i];
      occ_tot_acc[i].add(st.occupation[i]);
    }
  }

  for (std::size_t i = 0; i < ws.jump_w.size(); ++i) ws.jump_w[i] = jump_acc[i].value();
  for (std::size_t i = 0; i < ws.exit_w.size(); ++i) ws.exit_w[i] = exit_acc[i].value();
  for (std::size_t i = 0; i < ws.occ_w.size(); ++i) ws.occ_w[i] = occ_acc[i].value();
  for (std::size_t i = 0; i < ws.initial_w.size(); ++i) ws.initial_w[i] = init_acc[i].value();
  for (int i = 0; i < p; ++i) ws.occ_tot[i] = occ_tot_acc[i].value();
  return ws;
}

} // namespace

WeightedStats aggregate(const DatasetStats& data,
                        const std::vector<double>& weights,
                        WeightSource source) {
  if (data.size() == 0)
    throw Error(Errc::InvariantViolation, "empty dataset");
  if (weights.size() % data.size() != 0)
    throw Error(Errc::DimensionMismatch, "weights are not n_paths x M");
  const int M = static_cast<int>(weights.size() / data.size());
  if (M < 1) throw Error(Errc::DimensionMismatch, "weights are not n_paths x M");
  return aggregate_impl(data, weights, M, source);
}

WeightedStats aggregate_hard(const DatasetStats& data, int regime_count) {
  if (!data.labeled())
    throw Error(Errc::LabelRequired, "dataset has no regime labels");
  int M = regime_count;
  for (int lab : data.labels) {
    if (lab < 0)
      throw Error(Errc::InconsistentPath, "negative regime label");
    M = std::max(M, lab + 1);
  }
  std::vector<double> weights(data.size() * M, 0.0);
  for (std::size_t k = 0; k < data.size(); ++k)
    weights[k * M + data.labels[k]] = 1.0;
  return aggregate_impl(data, weights, M, WeightSource::HardLabels);
}

WeightedStats aggregate_pooled(const DatasetStats& data) {
  if (data.size() == 0)
    throw Error(Errc::InvariantViolation, "empty dataset");
  std::vector<double> weights(data.size(), 1.0);
  return aggregate_impl(data, weights, 1, WeightSource::HardLabels);
}

} // namespace ctmix
