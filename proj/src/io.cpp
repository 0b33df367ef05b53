#include "ctmix/io.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace ctmix {

using nlohmann::json;

namespace {

// FNV-1a, 64-bit
struct Fnv1a {
  std::uint64_t state = 0xcbf29ce484222325ULL;
  void update(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state ^= c;
      state *= 0x100000001b3ULL;
    }
  }
  std::string hex() const {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << state;
    return os.str();
  }
};

json path_to_json(const SamplePath& path) {
  json events = json::array();
  for (const JumpEvent& ev : path.events)
    events.push_back({{"state", ev.state + 1}, {"dur", ev.duration}});
  json rec{
      {"id", path.id},
      {"initial", path.initial_state + 1},
      {"regime", path.regime ? json(*path.regime + 1) : json(nullptr)},
      {"events", std::move(events)},
      {"censored", {{"state", path.censored.state + 1}, {"dur", path.censored.duration}}},
      {"horizon", path.horizon},
  };
  return rec;
}

void require_fields(const json& obj, std::initializer_list<const char*> fields,
                    const std::string& where, long line) {
  for (const char* f : fields)
    if (!obj.contains(f))
      throw Error(Errc::ParseError, where + " is missing field '" + f + "'", line);
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* f : fields)
      if (key == f) known = true;
    if (!known)
      throw Error(Errc::ParseError, where + " has unknown field '" + key + "'", line);
  }
}

int state_from_file(const json& v, const std::string& where, long line) {
  if (!v.is_number_integer() || v.get<long>() < 1)
    throw Error(Errc::ParseError, where + " must be a 1-based state label", line);
  return v.get<int>() - 1;
}

SamplePath path_from_json(const json& rec, long line) {
  if (!rec.is_object())
    throw Error(Errc::ParseError, "record is not an object", line);
  require_fields(rec, {"id", "initial", "regime", "events", "censored", "horizon"},
                 "record", line);

  SamplePath path;
  if (!rec["id"].is_number_integer())
    throw Error(Errc::ParseError, "'id' must be an integer", line);
  path.id = rec["id"].get<std::int64_t>();
  path.initial_state = state_from_file(rec["initial"], "'initial'", line);

  const json& regime = rec["regime"];
  if (regime.is_null()) {
    path.regime.reset();
  } else if (regime.is_number_integer() && regime.get<long>() >= 1) {
    path.regime = regime.get<int>() - 1;
  } else {
    throw Error(Errc::ParseError, "'regime' must be null or a 1-based index", line);
  }

  if (!rec["events"].is_array())
    throw Error(Errc::ParseError, "'events' must be an array", line);
  for (const json& ev : rec["events"]) {
    if (!ev.is_object())
      throw Error(Errc::ParseError, "event is not an object", line);
    require_fields(ev, {"state", "dur"}, "event", line);
    if (!ev["dur"].is_number())
      throw Error(Errc::ParseError, "event 'dur' must be a number", line);
    path.events.push_back(JumpEvent{state_from_file(ev["state"], "event 'state'", line),
                                    ev["dur"].get<double>()});
  }

  const json& cz = rec["censored"];
  if (!cz.is_object())
    throw Error(Errc::ParseError, "'censored' must be an object", line);
  require_fields(cz, {"state", "dur"}, "censored", line);
  if (!cz["dur"].is_number())
    throw Error(Errc::ParseError, "censored 'dur' must be a number", line);
  path.censored = JumpEvent{state_from_file(cz["state"], "censored 'state'", line),
                            cz["dur"].get<double>()};

  if (!rec["horizon"].is_number())
    throw Error(Errc::ParseError, "'horizon' must be a number", line);
  path.horizon = rec["horizon"].get<double>();
  return path;
}

void validate_path_invariants(const SamplePath& path) {
  if (!(path.horizon > 0.0))
    throw Error(Errc::InvariantViolation, "horizon must be positive",
                static_cast<long>(path.id));
  double total = path.censored.duration;
  int prev = -1;
  for (std::size_t n = 0; n < path.events.size(); ++n) {
    const JumpEvent& ev = path.events[n];
    if (!(ev.duration > 0.0))
      throw Error(Errc::InvariantViolation, "sojourn duration must be positive",
                  static_cast<long>(path.id));
    if (n == 0 && ev.state != path.initial_state)
      throw Error(Errc::InvariantViolation, "first sojourn not in initial state",
                  static_cast<long>(path.id));
    if (prev >= 0 && ev.state == prev)
      throw Error(Errc::InvariantViolation, "consecutive states repeat",
                  static_cast<long>(path.id));
    total += ev.duration;
    prev = ev.state;
  }
  if (path.censored.duration < 0.0)
    throw Error(Errc::InvariantViolation, "censored duration must be >= 0",
                static_cast<long>(path.id));
  if (prev < 0) {
    if (path.censored.state != path.initial_state)
      throw Error(Errc::InvariantViolation, "censored sojourn not in initial state",
                  static_cast<long>(path.id));
  } else if (path.censored.state == prev) {
    throw Error(Errc::InvariantViolation, "consecutive states repeat at censoring",
                static_cast<long>(path.id));
  }
  if (std::fabs(total - path.horizon) > 1e-9)
    throw Error(Errc::InvariantViolation, "durations do not sum to the horizon",
                static_cast<long>(path.id));
}

std::ifstream open_for_read(const std::string& file) {
  std::ifstream in(file);
  if (!in)
    throw Error(Errc::ParseError, "cannot open '" + file + "' for reading");
  return in;
}

std::ofstream open_for_write(const std::string& file) {
  std::ofstream out(file);
  if (!out)
    throw Error(Errc::ParseError, "cannot open '" + file + "' for writing");
  return out;
}

} // namespace

std::string DatasetFingerprint::to_string() const {
  std::ostringstream os;
  os << "fnv1a64:" << hash << ":n=" << n_paths << ":T=" << json(horizon).dump()
     << ":labeled=" << (labeled ? 1 : 0);
  return os.str();
}

DatasetFingerprint fingerprint_dataset(const std::vector<SamplePath>& paths) {
  Fnv1a h;
  DatasetFingerprint fp;
  fp.n_paths = paths.size();
  fp.labeled = !paths.empty() && paths.front().regime.has_value();
  fp.horizon = paths.empty() ? 0.0 : paths.front().horizon;
  for (const SamplePath& p : paths) {
    h.update(path_to_json(p).dump());
    h.update("\n");
  }
  fp.hash = h.hex();
  return fp;
}

struct DatasetWriter::Impl {
  std::ofstream out;
  std::string file;
  Fnv1a hash;
  DatasetFingerprint fp;
  bool first = true;
  bool closed = false;
};

DatasetWriter::DatasetWriter(const std::string& file) : impl_(new Impl) {
  impl_->out = open_for_write(file);
  impl_->file = file;
}

DatasetWriter::~DatasetWriter() = default;

void DatasetWriter::add(const SamplePath& path) {
  if (impl_->closed)
    throw Error(Errc::InvariantViolation, "writer already closed");
  validate_path_invariants(path);
  if (impl_->first) {
    impl_->fp.horizon = path.horizon;
    impl_->fp.labeled = path.regime.has_value();
    impl_->first = false;
  }
  const std::string line = path_to_json(path).dump();
  impl_->hash.update(line);
  impl_->hash.update("\n");
  impl_->out << line << '\n';
  impl_->fp.n_paths++;
}

DatasetFingerprint DatasetWriter::close() {
  impl_->closed = true;
  impl_->out.flush();
  if (!impl_->out)
    throw Error(Errc::ParseError, "write to '" + impl_->file + "' failed");
  impl_->out.close();
  impl_->fp.hash = impl_->hash.hex();
  return impl_->fp;
}

void write_dataset(const std::string& file, const std::vector<SamplePath>& paths) {
  DatasetWriter writer(file);
  for (const SamplePath& p : paths) writer.add(p);
  writer.close();
}

void for_each_path(const std::string& file,
                   const std::function<void(SamplePath&&)>& fn) {
  std::ifstream in = open_for_read(file);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(Errc::ParseError, std::string("invalid JSON: ") + e.what(),
                  lineno);
    }
    SamplePath path = path_from_json(rec, lineno);
    validate_path_invariants(path);
    fn(std::move(path));
  }
}

std::vector<SamplePath> read_dataset(const std::string& file) {
  std::vector<SamplePath> out;
  for_each_path(file, [&](SamplePath&& p) { out.push_back(std::move(p)); });
  return out;
}

namespace {

// shared reduction used by both the streaming and in-memory builders
struct StatsBuilder {
  int p;
  DatasetStats data;
  Fnv1a hash;
  bool first = true;
  bool labeled = false;

  explicit StatsBuilder(int p_) : p(p_) {}

  void add(const SamplePath& path) {
    if (first) {
      labeled = path.regime.has_value();
      data.horizon = path.horizon;
      first = false;
    }
    if (path.regime.has_value() != labeled)
      throw Error(Errc::InvariantViolation, "mixed labeled/unlabeled records",
                  static_cast<long>(path.id));
    hash.update(path_to_json(path).dump());
    hash.update("\n");
    data.paths.push_back(sufficient_stats(path, p));
    if (labeled) data.labels.push_back(*path.regime);
  }

  DatasetStats finish() {
    data.p = p;
    DatasetFingerprint fp;
    fp.hash = hash.hex();
    fp.n_paths = data.paths.size();
    fp.horizon = data.horizon;
    fp.labeled = labeled;
    data.fingerprint = fp.to_string();
    return std::move(data);
  }
};

} // namespace

DatasetStats read_dataset_stats(const std::string& file, int p) {
  if (p == 0) {
    int max_state = -1;
    for_each_path(file, [&](SamplePath&& path) {
      max_state = std::max(max_state, path.initial_state);
      for (const JumpEvent& ev : path.events) max_state = std::max(max_state, ev.state);
      max_state = std::max(max_state, path.censored.state);
    });
    p = max_state + 1;
    if (p < 2)
      throw Error(Errc::InvariantViolation,
                  "dataset visits fewer than two states; pass p explicitly");
  }
  StatsBuilder builder(p);
  for_each_path(file, [&](SamplePath&& path) { builder.add(path); });
  if (builder.data.paths.empty())
    throw Error(Errc::ParseError, "dataset '" + file + "' is empty");
  return builder.finish();
}

DatasetStats make_dataset_stats(const std::vector<SamplePath>& paths, int p,
                                int workers) {
  if (paths.empty())
    throw Error(Errc::InvariantViolation, "empty dataset");
  if (p == 0) {
    int max_state = -1;
    for (const SamplePath& path : paths) {
      max_state = std::max(max_state, path.initial_state);
      for (const JumpEvent& ev : path.events) max_state = std::max(max_state, ev.state);
      max_state = std::max(max_state, path.censored.state);
    }
    p = max_state + 1;
  }
  DatasetStats data = dataset_stats(paths, p, workers);
  data.fingerprint = fingerprint_dataset(paths).to_string();
  return data;
}

namespace {

Matrix matrix_from_json(const json& rows, int nrows, int ncols,
                        const std::string& where) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != nrows)
    throw Error(Errc::SchemaError, where + " must be an array of " +
                                       std::to_string(nrows) + " rows");
  Matrix m(nrows, ncols);
  for (int i = 0; i < nrows; ++i) {
    const json& row = rows[i];
    if (!row.is_array() || static_cast<int>(row.size()) != ncols)
      throw Error(Errc::SchemaError, where + " row " + std::to_string(i) +
                                         " must have " + std::to_string(ncols) +
                                         " entries");
    for (int j = 0; j < ncols; ++j) {
      if (!row[j].is_number())
        throw Error(Errc::SchemaError, where + "[" + std::to_string(i) + "][" +
                                           std::to_string(j) + "] must be a number");
      m(i, j) = row[j].get<double>();
    }
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MixtureModel model_from_json(const json& doc) {
  if (!doc.is_object())
    throw Error(Errc::SchemaError, "model config must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "p" && key != "M" && key != "pi" && key != "regimes" &&
        key != "s" && key != "restricted")
      throw Error(Errc::SchemaError, "unknown field '" + key + "' in model config");
  }
  for (const char* f : {"p", "M", "pi", "s"})
    if (!doc.contains(f))
      throw Error(Errc::SchemaError, std::string("model config missing '") + f + "'");
  if (!doc["p"].is_number_integer() || !doc["M"].is_number_integer())
    throw Error(Errc::SchemaError, "'p' and 'M' must be integers");
  const int p = doc["p"].get<int>();
  const int M = doc["M"].get<int>();
  if (p < 2 || M < 1)
    throw Error(Errc::SchemaError, "need p >= 2 and M >= 1");

  if (!doc["pi"].is_array() || static_cast<int>(doc["pi"].size()) != p)
    throw Error(Errc::SchemaError, "'pi' must be an array of p numbers");
  std::vector<double> pi(p);
  for (int i = 0; i < p; ++i) {
    if (!doc["pi"][i].is_number())
      throw Error(Errc::SchemaError, "'pi' entries must be numbers");
    pi[i] = doc["pi"][i].get<double>();
  }

  Matrix s = matrix_from_json(doc["s"], p, M, "'s'");

  const bool has_regimes = doc.contains("regimes");
  const bool has_restricted = doc.contains("restricted");
  if (has_regimes == has_restricted)
    throw Error(Errc::SchemaError,
                "model config needs exactly one of 'regimes' or 'restricted'");

  std::vector<Matrix> qs;
  if (has_regimes) {
    const json& regimes = doc["regimes"];
    if (!regimes.is_array() || static_cast<int>(regimes.size()) != M)
      throw Error(Errc::SchemaError, "'regimes' must be an array of M objects");
    for (int m = 0; m < M; ++m) {
      const json& reg = regimes[m];
      if (!reg.is_object())
        throw Error(Errc::SchemaError, "regime " + std::to_string(m) +
                                           " must be an object");
      for (const auto& [key, _] : reg.items())
        if (key != "Q" && key != "exit_rates" && key != "chain")
          throw Error(Errc::SchemaError, "unknown field '" + key + "' in regime " +
                                             std::to_string(m));
      if (reg.contains("Q")) {
        if (reg.contains("exit_rates") || reg.contains("chain"))
          throw Error(Errc::SchemaError,
                      "regime " + std::to_string(m) +
                          ": give either 'Q' or 'exit_rates'+'chain', not both");
        qs.push_back(matrix_from_json(reg["Q"], p, p,
                                      "regime " + std::to_string(m) + " 'Q'"));
      } else {
        if (!reg.contains("exit_rates") || !reg.contains("chain"))
          throw Error(Errc::SchemaError,
                      "regime " + std::to_string(m) +
                          " needs 'Q' or 'exit_rates'+'chain'");
        const json& rates = reg["exit_rates"];
        if (!rates.is_array() || static_cast<int>(rates.size()) != p)
          throw Error(Errc::SchemaError, "'exit_rates' must be an array of p numbers");
        std::vector<double> q(p);
        for (int i = 0; i < p; ++i) {
          if (!rates[i].is_number())
            throw Error(Errc::SchemaError, "'exit_rates' entries must be numbers");
          q[i] = rates[i].get<double>();
        }
        StochasticMatrix chain(matrix_from_json(
            reg["chain"], p, p, "regime " + std::to_string(m) + " 'chain'"));
        qs.push_back(build_intensity(q, chain).matrix());
      }
    }
  } else {
    const json& restr = doc["restricted"];
    if (!restr.is_object())
      throw Error(Errc::SchemaError, "'restricted' must be an object");
    for (const auto& [key, _] : restr.items())
      if (key != "base_Q" && key != "psi")
        throw Error(Errc::SchemaError, "unknown field '" + key + "' in 'restricted'");
    if (!restr.contains("base_Q") || !restr.contains("psi"))
      throw Error(Errc::SchemaError, "'restricted' needs 'base_Q' and 'psi'");
    IntensityMatrix base(matrix_from_json(restr["base_Q"], p, p, "'base_Q'"));
    Matrix psi = matrix_from_json(restr["psi"], M - 1, p, "'psi'");
    RestrictedSpec spec(std::move(base), std::move(psi));
    for (const IntensityMatrix& q : spec.expand()) qs.push_back(q.matrix());
  }

  return validate_model(p, M, std::move(pi), std::move(qs), std::move(s));
}

json model_to_json(const MixtureModel& model) {
  json regimes = json::array();
  for (const IntensityMatrix& q : model.intensities)
    regimes.push_back(json{{"Q", matrix_to_json(q.matrix())}});
  return json{{"p", model.p()},
              {"M", model.regime_count},
              {"pi", model.initial_law},
              {"regimes", std::move(regimes)},
              {"s", matrix_to_json(model.switching)}};
}

} // namespace

MixtureModel read_model(const std::string& file) {
  std::ifstream in = open_for_read(file);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("invalid JSON in '") + file +
                                      "': " + e.what());
  }
  return model_from_json(doc);
}

void write_model(const std::string& file, const MixtureModel& model) {
  std::ofstream out = open_for_write(file);
  out << model_to_json(model).dump(2) << '\n';
}

void write_fit(const std::string& file, const FitResult& fit, const RunMeta& meta) {
  json doc{
      {"method", fit_method_name(fit.method)},
      {"loglik", fit.loglik_minus_infinity ? json(nullptr) : json(fit.loglik)},
      {"minus_infinity", fit.loglik_minus_infinity},
      {"iterations", fit.iterations},
      {"converged", fit.converged},
      {"dataset_fingerprint", fit.dataset_fingerprint},
      {"model", model_to_json(fit.model)},
      {"warnings", fit.warnings},
  };
  if (fit.psi) doc["psi"] = matrix_to_json(*fit.psi);
  if (!fit.embedded.empty()) {
    json chains = json::array();
    for (const StochasticMatrix& c : fit.embedded)
      chains.push_back(matrix_to_json(c.matrix()));
    doc["embedded"] = std::move(chains);
  }
  // wall time stays in the TSV trace only, so fit files are reproducible
  if (!fit.trace_loglik.empty())
    doc["trace"] = json{{"loglik", fit.trace_loglik},
                        {"delta", fit.trace_delta}};
  if (meta.n_paths > 0)
    doc["meta"] = [&] {
      json m{{"n_paths", meta.n_paths}, {"horizon", meta.horizon}};
      if (meta.seed) m["seed"] = *meta.seed;
      return m;
    }();
  std::ofstream out = open_for_write(file);
  out << doc.dump(2) << '\n';
}

FitResult read_fit(const std::string& file) {
  std::ifstream in = open_for_read(file);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("invalid JSON in '") + file +
                                      "': " + e.what());
  }
  if (!doc.is_object())
    throw Error(Errc::SchemaError, "fit file must be a JSON object");
  for (const char* f : {"method", "loglik", "model"})
    if (!doc.contains(f))
      throw Error(Errc::SchemaError, std::string("fit file missing '") + f + "'");

  MixtureModel model = model_from_json(doc["model"]);
  FitResult fit{std::move(model), 0.0, false,
                fit_method_from_name(doc["method"].get<std::string>())};
  if (doc["loglik"].is_null()) {
    fit.loglik = -std::numeric_limits<double>::infinity();
    fit.loglik_minus_infinity = true;
  } else {
    fit.loglik = doc["loglik"].get<double>();
  }
  if (doc.contains("minus_infinity"))
    fit.loglik_minus_infinity = doc["minus_infinity"].get<bool>();
  if (doc.contains("iterations")) fit.iterations = doc["iterations"].get<int>();
  if (doc.contains("converged")) fit.converged = doc["converged"].get<bool>();
  if (doc.contains("dataset_fingerprint"))
    fit.dataset_fingerprint = doc["dataset_fingerprint"].get<std::string>();
  if (doc.contains("warnings"))
    fit.warnings = doc["warnings"].get<std::vector<std::string>>();
  if (doc.contains("psi")) {
    const int M = fit.model.regime_count;
    fit.psi = matrix_from_json(doc["psi"], M - 1, fit.model.p(), "'psi'");
  }
  if (doc.contains("embedded")) {
    const json& chains = doc["embedded"];
    for (const json& c : chains)
      fit.embedded.emplace_back(
          matrix_from_json(c, fit.model.p(), fit.model.p(), "'embedded'"));
  }
  if (doc.contains("trace")) {
    const json& tr = doc["trace"];
    if (tr.contains("loglik"))
      fit.trace_loglik = tr["loglik"].get<std::vector<double>>();
    if (tr.contains("delta"))
      fit.trace_delta = tr["delta"].get<std::vector<double>>();
    if (tr.contains("seconds"))
      fit.trace_seconds = tr["seconds"].get<std::vector<double>>();
  }
  return fit;
}

void write_trace(const std::string& file, const FitResult& fit) {
  std::ofstream out = open_for_write(file);
  out << "iteration\tloglik\tdelta\tseconds\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < fit.trace_loglik.size(); ++i)
    out << (i + 1) << '\t' << fit.trace_loglik[i] << '\t' << fit.trace_delta[i]
        << '\t' << fit.trace_seconds[i] << '\n';
}

} // namespace ctmix
