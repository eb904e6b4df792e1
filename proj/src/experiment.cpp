#include "gnsp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include <openssl/evp.h>

#include "gnsp/errors.hpp"
#include "gnsp/io.hpp"
#include "gnsp/rng.hpp"

namespace gnsp {

using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

// Strict reader: every key must be consumed, every value must have the
// expected type.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
        out = v.get<bool>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
        out = v.get<std::string>();
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
        out = v.get<T>();
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned()) throw ConfigError("");
        out = v.get<T>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("");
        out = v.get<T>();
      } else {
        if (!v.is_array()) throw ConfigError("");
        out = v.get<T>();
      }
    } catch (const std::exception&) {
      throw ConfigError(where() + "." + key + " has the wrong type");
    }
  }

  Section child(const char* key) {
    used_.insert(key);
    static const json kEmpty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : kEmpty, path_ + "." + key);
  }

  bool has(const char* key) const { return j_.contains(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError("unknown config key " + where() + "." + it.key());
    }
  }

 private:
  std::string where() const { return path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename F>
void parallel_for(std::size_t count, int jobs, F&& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string alpha_tag(double alpha) { return io::format_double(alpha); }

std::vector<int> one_based_range(int d) {
  std::vector<int> v(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i)] = i + 1;
  return v;
}

// x,y[,z],label,trial plot file from selected embedding columns.
std::string format_plot_csv(const EmbeddingSet& set, const std::vector<std::size_t>& columns) {
  static const char* kAxes[] = {"x", "y", "z", "w"};
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) out += std::string(kAxes[c]) + ",";
  out += "label,trial\n";
  for (std::size_t t = 0; t < set.size(); ++t) {
    for (auto c : columns) out += io::format_double(set.coords[t][c]) + ",";
    out += set.labels[t] + "," + std::to_string(set.trial_ids[t]) + "\n";
  }
  return out;
}

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
  }

  void write(const std::string& relative, std::string_view contents) {
    io::write_file(root_ / relative, contents);
    files_.push_back(relative);
  }

  const std::filesystem::path& root() const { return root_; }
  std::vector<std::string>& files() { return files_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

std::string format_metrics_csv(const std::map<std::string, double>& metrics) {
  std::string out = "metric,value\n";
  for (const auto& [k, v] : metrics) out += k + "," + io::format_double(v) + "\n";
  return out;
}

json seeds_json(const ExperimentConfig& c) {
  return json{{"sbm", c.sbm.seed}, {"sim", c.sim.seed}, {"classify", c.classify.seed}};
}

}  // namespace

// Config ----------------------------------------------------------------------

void ExperimentConfig::validate() const {
  try {
    if (sbm.alpha_sweep.empty()) check_alpha(sbm.alpha);
    for (double a : sbm.alpha_sweep) check_alpha(a);
    if (sbm.n < 1) throw ConfigError("sbm.n must be >= 1");
    neuron.validate();
    synapse.validate();
    aux.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  if (!(sim.dt > 0.0)) throw ConfigError("sim.dt must be positive");
  if (sim.duration < stimulus.onset + sim.window || sim.duration < stimulus.onset + 100.0) {
    throw ConfigError("sim.duration must cover stimulus.onset + window (and at least 100 ms)");
  }
  if (!(sim.window > 0.0)) throw ConfigError("sim.window must be positive");
  if (!(stimulus.duration > 0.0)) throw ConfigError("stimulus.duration must be positive");
  if (trials_per_stimulus < 1) throw ConfigError("trials_per_stimulus must be >= 1");
  if (protocol.kind == ProtocolKind::kCustom && protocol.file.empty()) {
    throw ConfigError("custom protocol requires protocol.file");
  }
  if (protocol.kind == ProtocolKind::kMixedCluster && sbm.n < 3) {
    throw ConfigError("mixed_cluster protocol requires sbm.n >= 3");
  }
  if (embedding.methods.empty()) throw ConfigError("embedding.methods must not be empty");
  if (embedding.dimensions < 1) throw ConfigError("embedding.dimensions must be >= 1");
  for (int idx : embedding.gft_indices) {
    if (idx < 1 || idx > 4 * sbm.n) throw ConfigError("embedding.gft_indices out of range");
  }
  if (classify.folds < 2) throw ConfigError("classify.folds must be >= 2");
  if (!(classify.lambda >= 0.0)) throw ConfigError("classify.lambda must be nonnegative");
  if (classify.bootstrap_resamples < 1) throw ConfigError("classify.bootstrap_resamples must be >= 1");
  if (classify.dimension < 1 || classify.dimension > 4) throw ConfigError("classify.dimension must be 1..4");
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["sbm"] = {{"alpha", c.sbm.alpha}, {"n", c.sbm.n}, {"seed", c.sbm.seed},
              {"graph_per_trial", c.sbm.graph_per_trial}, {"alpha_sweep", c.sbm.alpha_sweep}};
  j["neuron"] = {{"tau_mem", c.neuron.tau_mem}, {"e_leak", c.neuron.e_leak}, {"r_in", c.neuron.r_in},
                 {"v_threshold", c.neuron.v_threshold}, {"v_reset", c.neuron.v_reset}};
  j["synapse"] = {{"e_syn", c.synapse.e_syn}, {"g_max", c.synapse.g_max}, {"tau_g", c.synapse.tau_g},
                  {"beta", c.synapse.beta}, {"tau_r", c.synapse.tau_r}, {"delay", c.synapse.delay},
                  {"poisson_rate", c.synapse.poisson_rate},
                  {"zero_degree", c.synapse.zero_degree == ZeroDegreePolicy::kIsolate ? "isolate" : "error"}};
  j["aux"] = {{"refractory_ms", c.aux.refractory_ms}, {"kca_increment", c.aux.kca_increment},
              {"kca_tau", c.aux.kca_tau}, {"kca_e", c.aux.kca_e}};
  j["stimulus"] = {{"onset", c.stimulus.onset}, {"duration", c.stimulus.duration},
                   {"amplitude", c.stimulus.amplitude}};
  j["sim"] = {{"dt", c.sim.dt}, {"duration", c.sim.duration}, {"window", c.sim.window}, {"seed", c.sim.seed}};
  j["protocol"] = {{"kind", to_string(c.protocol.kind)}, {"file", c.protocol.file}};
  j["trials_per_stimulus"] = c.trials_per_stimulus;
  std::vector<std::string> methods;
  for (auto m : c.embedding.methods) methods.emplace_back(to_string(m));
  j["embedding"] = {{"methods", methods}, {"dimensions", c.embedding.dimensions},
                    {"convention", to_string(c.embedding.convention)},
                    {"gft_indices", c.embedding.gft_indices}};
  j["classify"] = {{"enabled", c.classify.enabled}, {"lambda", c.classify.lambda}, {"folds", c.classify.folds},
                   {"bootstrap_resamples", c.classify.bootstrap_resamples}, {"seed", c.classify.seed},
                   {"tune_lambda", c.classify.tune_lambda}, {"dimension", c.classify.dimension}};
  j["io"] = {{"output_dir", c.io.output_dir}, {"dump_rasters", c.io.dump_rasters}};
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Section root(j, "config");
  {
    auto s = root.child("sbm");
    s.get("alpha", c.sbm.alpha);
    s.get("n", c.sbm.n);
    s.get("seed", c.sbm.seed);
    s.get("graph_per_trial", c.sbm.graph_per_trial);
    s.get("alpha_sweep", c.sbm.alpha_sweep);
    s.finish();
  }
  {
    auto s = root.child("neuron");
    s.get("tau_mem", c.neuron.tau_mem);
    s.get("e_leak", c.neuron.e_leak);
    s.get("r_in", c.neuron.r_in);
    s.get("v_threshold", c.neuron.v_threshold);
    s.get("v_reset", c.neuron.v_reset);
    s.finish();
  }
  {
    auto s = root.child("synapse");
    s.get("e_syn", c.synapse.e_syn);
    s.get("g_max", c.synapse.g_max);
    s.get("tau_g", c.synapse.tau_g);
    s.get("beta", c.synapse.beta);
    s.get("tau_r", c.synapse.tau_r);
    s.get("delay", c.synapse.delay);
    s.get("poisson_rate", c.synapse.poisson_rate);
    std::string policy = "error";
    s.get("zero_degree", policy);
    if (policy == "isolate") c.synapse.zero_degree = ZeroDegreePolicy::kIsolate;
    else if (policy == "error") c.synapse.zero_degree = ZeroDegreePolicy::kError;
    else throw ConfigError("synapse.zero_degree must be 'error' or 'isolate'");
    s.finish();
  }
  {
    auto s = root.child("aux");
    s.get("refractory_ms", c.aux.refractory_ms);
    s.get("kca_increment", c.aux.kca_increment);
    s.get("kca_tau", c.aux.kca_tau);
    s.get("kca_e", c.aux.kca_e);
    s.finish();
  }
  {
    auto s = root.child("stimulus");
    s.get("onset", c.stimulus.onset);
    s.get("duration", c.stimulus.duration);
    s.get("amplitude", c.stimulus.amplitude);
    s.finish();
  }
  {
    auto s = root.child("sim");
    s.get("dt", c.sim.dt);
    s.get("duration", c.sim.duration);
    s.get("window", c.sim.window);
    s.get("seed", c.sim.seed);
    s.finish();
  }
  {
    auto s = root.child("protocol");
    std::string kind = to_string(c.protocol.kind);
    s.get("kind", kind);
    try {
      c.protocol.kind = protocol_kind_from_string(kind);
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
    s.get("file", c.protocol.file);
    s.finish();
  }
  root.get("trials_per_stimulus", c.trials_per_stimulus);
  {
    auto s = root.child("embedding");
    if (s.has("methods")) {
      std::vector<std::string> names;
      s.get("methods", names);
      c.embedding.methods.clear();
      for (const auto& n : names) {
        try {
          c.embedding.methods.push_back(embedding_method_from_string(n));
        } catch (const ParameterError& e) {
          throw ConfigError(e.what());
        }
      }
    } else {
      std::vector<std::string> unused;
      s.get("methods", unused);
    }
    s.get("dimensions", c.embedding.dimensions);
    std::string convention = to_string(c.embedding.convention);
    s.get("convention", convention);
    try {
      c.embedding.convention = convention_from_string(convention);
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
    s.get("gft_indices", c.embedding.gft_indices);
    s.finish();
  }
  {
    auto s = root.child("classify");
    s.get("enabled", c.classify.enabled);
    s.get("lambda", c.classify.lambda);
    s.get("folds", c.classify.folds);
    s.get("bootstrap_resamples", c.classify.bootstrap_resamples);
    s.get("seed", c.classify.seed);
    s.get("tune_lambda", c.classify.tune_lambda);
    s.get("dimension", c.classify.dimension);
    s.finish();
  }
  {
    auto s = root.child("io");
    s.get("output_dir", c.io.output_dir);
    s.get("dump_rasters", c.io.dump_rasters);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::string serialize_config(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

// Simulation --------------------------------------------------------------------

Protocol build_protocol(const ExperimentConfig& config) {
  switch (config.protocol.kind) {
    case ProtocolKind::kTwoCluster: return two_cluster_protocol(config.sbm.n);
    case ProtocolKind::kMixedCluster: return mixed_cluster_protocol(config.sbm.n);
    case ProtocolKind::kCustom:
      return load_custom_protocol(config.protocol.file, static_cast<std::size_t>(4 * config.sbm.n));
  }
  throw ConfigError("unknown protocol");
}

namespace {

struct TrialOutcome {
  std::optional<ResponseVector> response;
  std::optional<SpikeRaster> raster;
  std::string skip_reason;
};

TrialOutcome simulate_one(const ExperimentConfig& config, const AdjacencyMatrix& graph,
                          const Stimulus& stimulus, std::uint64_t trial_id, std::uint64_t seed,
                          bool keep_raster) {
  StimulusPulse pulse;
  pulse.targets = stimulus.targets;
  pulse.onset = config.stimulus.onset;
  pulse.duration = config.stimulus.duration;
  pulse.amplitude = config.stimulus.amplitude;
  auto raster = run_trial(graph, config.neuron, config.synapse, config.aux, pulse, config.sim.duration,
                          config.sim.dt, seed);
  TrialOutcome out;
  try {
    auto r = extract_response(raster, config.stimulus.onset, config.sim.window);
    r.label = stimulus.label;
    r.trial_id = trial_id;
    out.response = std::move(r);
  } catch (const ZeroResponseError& e) {
    out.skip_reason = e.what();
  }
  if (keep_raster) out.raster = std::move(raster);
  return out;
}

}  // namespace

SimulatedData simulate_protocol(const ExperimentConfig& config, double alpha, const RunOptions& options,
                                bool keep_rasters) {
  const Protocol protocol = build_protocol(config);
  protocol.validate(static_cast<std::size_t>(4 * config.sbm.n));
  const auto trials = static_cast<std::uint64_t>(config.trials_per_stimulus);
  const std::size_t total = protocol.stimuli.size() * trials;

  SimulatedData out;
  out.dataset.source = DataSource::kSimulated;
  out.dataset.block_map = sbm_block_map(config.sbm.n);

  const std::size_t graph_count = config.sbm.graph_per_trial ? total : 1;
  out.graphs.resize(graph_count);
  parallel_for(graph_count, options.jobs, [&](std::size_t g) {
    const std::uint64_t seed = config.sbm.graph_per_trial ? derive_seed(config.sbm.seed, g) : config.sbm.seed;
    out.graphs[g] = sample_adjacency({alpha, config.sbm.n, seed});
  });

  std::vector<TrialOutcome> outcomes(total);
  parallel_for(total, options.jobs, [&](std::size_t id) {
    const auto& stimulus = protocol.stimuli[id / trials];
    const auto& graph = out.graphs[config.sbm.graph_per_trial ? id : 0];
    outcomes[id] = simulate_one(config, graph, stimulus, id, derive_seed(config.sim.seed, id), keep_rasters);
  });

  for (std::size_t id = 0; id < total; ++id) {
    auto& o = outcomes[id];
    if (o.response) {
      out.dataset.responses.push_back(std::move(*o.response));
      out.graph_of_response.push_back(config.sbm.graph_per_trial ? id : 0);
    } else {
      out.skipped.push_back(std::to_string(id) + ": " + o.skip_reason);
    }
    if (o.raster) out.rasters.push_back(std::move(*o.raster));
  }
  return out;
}

// Pipeline ----------------------------------------------------------------------

namespace {

struct Embedded {
  std::map<EmbeddingMethod, EmbeddingSet> sets;
  std::optional<SpectralDecomposition> shared_decomposition;
};

// GFT coordinates. With one graph, the raw sign-fixed eigenvectors are used;
// with one graph per trial each trial is projected on its own eigenbasis after
// aligning it to the graphon eigenfunctions (otherwise coordinates from
// different realizations are not comparable).
EmbeddingSet gft_embedding(const SimulatedData& data, const std::vector<int>& indices, int jobs,
                           std::optional<SpectralDecomposition>& shared) {
  const auto& responses = data.dataset.responses;
  if (data.graphs.size() == 1) {
    if (!shared) shared = eigendecompose(data.graphs.front());
    return gft_project(responses, *shared, indices);
  }
  const auto analytic = analytic_graphon_eigenpairs(0.25);
  EmbeddingSet out;
  out.method = EmbeddingMethod::kGft;
  out.coords.resize(responses.size());
  parallel_for(responses.size(), jobs, [&](std::size_t t) {
    const auto d = align_to_graphon_basis(eigendecompose(data.graphs[data.graph_of_response[t]]), analytic,
                                          data.dataset.block_map);
    out.coords[t] = gft_project(std::span(&responses[t], 1), d, indices).coords.front();
  });
  for (const auto& r : responses) {
    out.labels.push_back(r.label);
    out.trial_ids.push_back(r.trial_id);
  }
  out.basis_meta = "per-trial graph eigenvectors aligned to graphon eigenfunctions";
  return out;
}

void add_geometry_metrics(const std::string& prefix, const EmbeddingSet& set,
                          std::map<std::string, double>& metrics) {
  const auto centroids = label_centroids(set);
  if (centroids.size() >= 2 && set.size() > centroids.size()) {
    metrics[prefix + "_silhouette"] = silhouette_score(set);
    std::vector<std::string> labels = set.labels;
    try {
      metrics[prefix + "_linear_training_accuracy"] = training_accuracy(set.matrix(), labels, 1e-6);
    } catch (const SingularSystemError&) {
    }
  }
  if (centroids.count("s1") && centroids.count("s2") && centroids.count("s3")) {
    metrics[prefix + "_betweenness_t"] =
        segment_parameter(centroids.at("s2"), centroids.at("s1"), centroids.at("s3"));
  }
}

RunResult run_single(const ExperimentConfig& config, double alpha, const std::filesystem::path& dir,
                     const RunOptions& options) {
  OutputDir out(dir);
  RunResult result;
  result.directory = dir;

  const bool dump = config.io.dump_rasters;
  SimulatedData data = simulate_protocol(config, alpha, options, dump);
  result.skipped_trials = data.skipped;

  out.write("config.json", serialize_config(config));
  if (data.graphs.size() == 1) {
    out.write("graph.edgelist", format_edge_list(data.graphs.front(), alpha, config.sbm.seed));
  }
  out.write("block_map.csv", format_block_map_csv(data.dataset.block_map));
  out.write("responses.csv", format_responses_csv(data.dataset));
  if (dump) {
    for (const auto& raster : data.rasters) {
      // rasters are kept in trial order, including skipped trials
      const std::string name = "rasters/seed_" + std::to_string(raster.seed) + ".csv";
      out.write(name, format_raster_csv(raster));
    }
  }

  // Classes must keep enough usable trials for cross-validation.
  std::map<std::string, int> per_class;
  for (const auto& r : data.dataset.responses) ++per_class[r.label];
  for (const auto& s : build_protocol(config).stimuli) {
    if (per_class[s.label] < config.classify.folds) {
      throw InsufficientDataError("stimulus " + s.label + " has only " + std::to_string(per_class[s.label]) +
                                  " usable trials (< " + std::to_string(config.classify.folds) + " folds)");
    }
  }

  Embedded embedded;
  const auto analytic = analytic_graphon_eigenpairs(alpha);
  for (auto method : config.embedding.methods) {
    EmbeddingSet set;
    switch (method) {
      case EmbeddingMethod::kGft:
        set = gft_embedding(data, config.embedding.gft_indices, options.jobs, embedded.shared_decomposition);
        break;
      case EmbeddingMethod::kGraphon: {
        auto modes = one_based_range(std::min(config.embedding.dimensions, 3));
        for (auto& m : modes) m += 1;  // maps use modes 2..4
        set = graphon_project(data.dataset.responses, analytic, data.dataset.block_map,
                              config.embedding.convention, modes);
        break;
      }
      case EmbeddingMethod::kPca:
        set = pca_fit_transform(data.dataset.responses, config.embedding.dimensions);
        break;
    }
    out.write(std::string("embedding_") + to_string(method) + ".csv", format_embedding_csv(set));
    add_geometry_metrics(to_string(method), set, result.metrics);
    embedded.sets.emplace(method, std::move(set));
  }
  if (embedded.shared_decomposition) {
    std::string values = "index,eigenvalue\n";
    const auto& d = *embedded.shared_decomposition;
    for (Eigen::Index k = 0; k < d.eigenvalues.size(); ++k) {
      values += std::to_string(k + 1) + "," + io::format_double(d.eigenvalues(k)) + "\n";
    }
    out.write("spectra.csv", values);
  }

  if (config.classify.enabled) {
    CvOptions cv;
    cv.folds = config.classify.folds;
    cv.seed = config.classify.seed;
    cv.lambda = config.classify.lambda;
    cv.tune_lambda = config.classify.tune_lambda;
    cv.bootstrap_resamples = config.classify.bootstrap_resamples;
    cv.dimension = config.classify.dimension;
    cv.convention = config.embedding.convention;
    std::map<EmbeddingMethod, EvalReport> reports;
    for (auto method : config.embedding.methods) {
      if (method == EmbeddingMethod::kGft && !embedded.shared_decomposition) continue;
      const auto report = cross_validated_accuracy(
          data.dataset, method, cv, embedded.shared_decomposition ? &*embedded.shared_decomposition : nullptr);
      result.metrics[std::string(to_string(method)) + "_cv_accuracy"] = report.accuracy;
      reports.emplace(method, report);
    }
    std::optional<PairedStats> paired;
    if (reports.count(EmbeddingMethod::kGraphon) && reports.count(EmbeddingMethod::kPca)) {
      const auto& a = reports.at(EmbeddingMethod::kGraphon).correct;
      const auto& b = reports.at(EmbeddingMethod::kPca).correct;
      try {
        paired = paired_difference_stats(std::vector<double>(a.begin(), a.end()),
                                         std::vector<double>(b.begin(), b.end()),
                                         config.classify.bootstrap_resamples, config.classify.seed);
      } catch (const ParameterError&) {
        // constant nonzero difference: effect size undefined, report without it
      }
    }
    for (const auto& [method, report] : reports) {
      const std::string name = to_string(method);
      out.write("report_" + name + ".csv",
                format_report(report, method == EmbeddingMethod::kGraphon ? paired : std::nullopt));
      out.write("correct_" + name + ".csv", format_correctness_csv(report));
    }
  }

  result.metrics["trials_used"] = static_cast<double>(data.dataset.responses.size());
  result.metrics["trials_skipped"] = static_cast<double>(data.skipped.size());
  out.write("summary.csv", format_metrics_csv(result.metrics));

  json extra{{"config_sha256", sha256_hex(serialize_config(config))},
             {"alpha", alpha},
             {"seeds", seeds_json(config)},
             {"skipped_trials", data.skipped}};
  write_manifest(dir, out.files(), extra);
  result.files = out.files();
  return result;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const std::filesystem::path root = config.io.output_dir;
  if (config.sbm.alpha_sweep.empty()) return run_single(config, config.sbm.alpha, root, options);

  RunResult result;
  result.directory = root;
  OutputDir out(root);
  std::string sweep = "alpha,metric,value\n";
  for (double alpha : config.sbm.alpha_sweep) {
    const std::string sub = "alpha_" + alpha_tag(alpha);
    const auto r = run_single(config, alpha, root / sub, options);
    for (const auto& f : r.files) out.files().push_back(sub + "/" + f);
    out.files().push_back(sub + "/manifest.json");
    for (const auto& [k, v] : r.metrics) {
      sweep += alpha_tag(alpha) + "," + k + "," + io::format_double(v) + "\n";
      result.metrics[sub + "." + k] = v;
    }
    result.skipped_trials.insert(result.skipped_trials.end(), r.skipped_trials.begin(), r.skipped_trials.end());
  }
  out.write("sweep_summary.csv", sweep);
  write_manifest(root, out.files(),
                 json{{"config_sha256", sha256_hex(serialize_config(config))}, {"seeds", seeds_json(config)}});
  result.files = out.files();
  return result;
}

// Figures ---------------------------------------------------------------------------

FigureId figure_from_string(const std::string& name) {
  if (name == "fig5") return FigureId::kFig5;
  if (name == "fig6") return FigureId::kFig6;
  if (name == "fig8") return FigureId::kFig8;
  if (name == "table_sec6") return FigureId::kTableSec6;
  throw ConfigError("unknown figure '" + name + "' (fig5, fig6, fig8, table_sec6)");
}

const char* to_string(FigureId id) {
  switch (id) {
    case FigureId::kFig5: return "fig5";
    case FigureId::kFig6: return "fig6";
    case FigureId::kFig8: return "fig8";
    case FigureId::kTableSec6: return "table_sec6";
  }
  return "fig5";
}

ExperimentConfig figure_config(FigureId figure) {
  ExperimentConfig c;
  switch (figure) {
    case FigureId::kFig5:
      c.embedding.methods = {EmbeddingMethod::kGft, EmbeddingMethod::kGraphon};
      break;
    case FigureId::kFig6:
      c.embedding.methods = {EmbeddingMethod::kGft, EmbeddingMethod::kGraphon};
      c.embedding.convention = CoordinateConvention::kOrthonormal;
      c.classify.enabled = false;
      break;
    case FigureId::kFig8:
      c.protocol.kind = ProtocolKind::kMixedCluster;
      c.sbm.n = 99;  // exact thirds
      c.sbm.graph_per_trial = true;
      c.sbm.alpha_sweep = {0.05, 0.20, 0.45};
      c.embedding.methods = {EmbeddingMethod::kGraphon, EmbeddingMethod::kPca};
      c.classify.enabled = false;
      break;
    case FigureId::kTableSec6:
      c.protocol.kind = ProtocolKind::kMixedCluster;
      c.sbm.n = 99;
      c.sbm.graph_per_trial = true;
      c.trials_per_stimulus = 7;  // 21 samples over three stimuli
      c.embedding.methods = {EmbeddingMethod::kGraphon, EmbeddingMethod::kPca};
      c.classify.folds = 7;
      break;
  }
  return c;
}

namespace {

void apply_seed(ExperimentConfig& c, const std::optional<std::uint64_t>& seed) {
  if (!seed) return;
  c.sbm.seed = derive_seed(*seed, 1);
  c.sim.seed = derive_seed(*seed, 2);
  c.classify.seed = derive_seed(*seed, 3);
}

RunResult reproduce_fig5(const ReproduceOptions& opt) {
  auto config = figure_config(FigureId::kFig5);
  apply_seed(config, opt.seed);
  config.io.output_dir = opt.output_dir.string();
  RunResult result = run_experiment(config, {opt.jobs});

  const auto gft = read_embedding_csv(opt.output_dir / "embedding_gft.csv");
  const auto graphon = read_embedding_csv(opt.output_dir / "embedding_graphon.csv");
  OutputDir out(opt.output_dir);
  out.files() = result.files;
  out.write("fig5_gft_2_3.csv", format_plot_csv(gft, {0, 1}));
  out.write("fig5_gft_2_4.csv", format_plot_csv(gft, {0, 2}));
  out.write("fig5_graphon_2_4.csv", format_plot_csv(graphon, {0, 2}));

  // Separability of the two stimuli on graphon coordinates (c2, c4).
  Eigen::MatrixXd x(static_cast<Eigen::Index>(graphon.size()), 2);
  for (std::size_t t = 0; t < graphon.size(); ++t) {
    x(static_cast<Eigen::Index>(t), 0) = graphon.coords[t][0];
    x(static_cast<Eigen::Index>(t), 1) = graphon.coords[t][2];
  }
  result.metrics["graphon_c2_c4_separator_accuracy"] = training_accuracy(x, graphon.labels, 1e-6);
  out.write("fig5_summary.csv", format_metrics_csv(result.metrics));
  write_manifest(opt.output_dir, out.files(),
                 json{{"figure", "fig5"}, {"config_sha256", sha256_hex(serialize_config(config))},
                      {"seeds", seeds_json(config)}});
  result.files = out.files();
  return result;
}

// Across graph realizations, how far the per-realization centroid of each
// stimulus wanders from its mean over realizations (mean Euclidean distance,
// averaged over stimuli).
double centroid_dispersion(const std::vector<std::map<std::string, Eigen::VectorXd>>& per_realization) {
  std::map<std::string, std::vector<Eigen::VectorXd>> by_label;
  for (const auto& m : per_realization) {
    for (const auto& [label, c] : m) by_label[label].push_back(c);
  }
  double total = 0.0;
  for (const auto& [label, cs] : by_label) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(cs.front().size());
    for (const auto& c : cs) mean += c;
    mean /= static_cast<double>(cs.size());
    double spread = 0.0;
    for (const auto& c : cs) spread += (c - mean).norm();
    total += spread / static_cast<double>(cs.size());
  }
  return total / static_cast<double>(by_label.size());
}

RunResult reproduce_fig6(const ReproduceOptions& opt) {
  auto config = figure_config(FigureId::kFig6);
  apply_seed(config, opt.seed);
  config.trials_per_stimulus = opt.fig6_trials_per_realization;
  config.io.output_dir = opt.output_dir.string();
  config.validate();
  OutputDir out(opt.output_dir);
  out.write("config.json", serialize_config(config));

  RunResult result;
  result.directory = opt.output_dir;
  const auto analytic = analytic_graphon_eigenpairs(config.sbm.alpha);
  const std::vector<int> maps{2, 3, 4};
  std::string summary = "meta_rep,dispersion_graphon,dispersion_gft,ratio\n";
  int below_one = 0;
  EmbeddingSet graphon_all;

  for (int meta = 0; meta < opt.fig6_meta_repetitions; ++meta) {
    std::vector<std::map<std::string, Eigen::VectorXd>> gn_centroids, gft_centroids;
    for (int r = 0; r < opt.fig6_realizations; ++r) {
      ExperimentConfig rc = config;
      const auto stream = static_cast<std::uint64_t>(meta) * 1000 + static_cast<std::uint64_t>(r);
      rc.sbm.seed = derive_seed(config.sbm.seed, stream);
      rc.sim.seed = derive_seed(config.sim.seed, stream);
      rc.sbm.graph_per_trial = false;
      const SimulatedData data = simulate_protocol(rc, rc.sbm.alpha, {opt.jobs});
      for (const auto& s : data.skipped) result.skipped_trials.push_back("meta" + std::to_string(meta) + "/r" + std::to_string(r) + "/" + s);
      if (data.dataset.responses.empty()) continue;

      const auto decomposition =
          align_to_graphon_basis(eigendecompose(data.graphs.front()), analytic, data.dataset.block_map);
      auto gft = gft_project(data.dataset.responses, decomposition, maps);
      auto gn = graphon_project(data.dataset.responses, analytic, data.dataset.block_map,
                                CoordinateConvention::kOrthonormal, maps);
      gft_centroids.push_back(label_centroids(gft));
      gn_centroids.push_back(label_centroids(gn));

      if (meta == 0) {
        for (auto& id : gn.trial_ids) id += static_cast<std::uint64_t>(r) * 1000;
        for (auto& id : gft.trial_ids) id += static_cast<std::uint64_t>(r) * 1000;
        if (r < 3) {
          out.write("fig6_gft_realization_" + std::to_string(r + 1) + ".csv", format_plot_csv(gft, {0, 1}));
        }
        graphon_all.method = gn.method;
        graphon_all.basis_meta = gn.basis_meta;
        graphon_all.coords.insert(graphon_all.coords.end(), gn.coords.begin(), gn.coords.end());
        graphon_all.labels.insert(graphon_all.labels.end(), gn.labels.begin(), gn.labels.end());
        graphon_all.trial_ids.insert(graphon_all.trial_ids.end(), gn.trial_ids.begin(), gn.trial_ids.end());
      }
    }
    const double d_gn = centroid_dispersion(gn_centroids);
    const double d_gft = centroid_dispersion(gft_centroids);
    const double ratio = d_gn / d_gft;
    below_one += ratio < 1.0;
    summary += std::to_string(meta + 1) + "," + io::format_double(d_gn) + "," + io::format_double(d_gft) + "," +
               io::format_double(ratio) + "\n";
    result.metrics["dispersion_ratio_" + std::to_string(meta + 1)] = ratio;
  }
  result.metrics["meta_reps_ratio_below_one"] = below_one;
  result.metrics["meta_reps"] = opt.fig6_meta_repetitions;
  out.write("fig6_graphon.csv", format_plot_csv(graphon_all, {0, 1}));
  out.write("fig6_dispersion.csv", summary);
  out.write("fig6_summary.csv", format_metrics_csv(result.metrics));
  write_manifest(opt.output_dir, out.files(),
                 json{{"figure", "fig6"}, {"config_sha256", sha256_hex(serialize_config(config))},
                      {"seeds", seeds_json(config)}, {"skipped_trials", result.skipped_trials}});
  result.files = out.files();
  return result;
}

RunResult reproduce_fig8(const ReproduceOptions& opt) {
  auto config = figure_config(FigureId::kFig8);
  apply_seed(config, opt.seed);
  config.io.output_dir = opt.output_dir.string();
  RunResult result = run_experiment(config, {opt.jobs});

  OutputDir out(opt.output_dir);
  out.files() = result.files;
  std::string summary = "alpha,method,silhouette,betweenness_t\n";
  for (double alpha : config.sbm.alpha_sweep) {
    const std::string sub = "alpha_" + alpha_tag(alpha);
    for (const char* method : {"graphon", "pca"}) {
      const auto set = read_embedding_csv(opt.output_dir / sub / (std::string("embedding_") + method + ".csv"));
      out.write(std::string("fig8_") + method + "_alpha_" + alpha_tag(alpha) + ".csv",
                format_plot_csv(set, {0, 1, 2}));
      const auto& m = result.metrics;
      summary += alpha_tag(alpha) + "," + method + "," +
                 io::format_double(m.at(sub + "." + method + "_silhouette")) + "," +
                 io::format_double(m.at(sub + "." + method + "_betweenness_t")) + "\n";
    }
  }
  out.write("fig8_summary.csv", summary);
  write_manifest(opt.output_dir, out.files(),
                 json{{"figure", "fig8"}, {"config_sha256", sha256_hex(serialize_config(config))},
                      {"seeds", seeds_json(config)}});
  result.files = out.files();
  return result;
}

RunResult reproduce_table(const ReproduceOptions& opt) {
  auto config = figure_config(FigureId::kTableSec6);
  apply_seed(config, opt.seed);
  config.io.output_dir = opt.output_dir.string();
  const bool have_data = opt.experimental_responses && opt.experimental_block_map &&
                         std::filesystem::exists(*opt.experimental_responses) &&
                         std::filesystem::exists(*opt.experimental_block_map);
  OutputDir out(opt.output_dir);
  RunResult result;
  result.directory = opt.output_dir;

  LabeledDataset dataset;
  if (have_data) {
    dataset = load_experimental_responses(*opt.experimental_responses, *opt.experimental_block_map);
  } else {
    result.degraded = true;
    dataset = simulate_protocol(config, config.sbm.alpha, {opt.jobs}).dataset;
    out.write("SURROGATE.txt",
              "Experimental response matrix not supplied; results below come from a simulated\n"
              "mixed-cluster surrogate (21 trials) and are not comparable to recorded data.\n");
    out.write("responses.csv", format_responses_csv(dataset));
    out.write("block_map.csv", format_block_map_csv(dataset.block_map));
  }
  out.write("config.json", serialize_config(config));

  CvOptions cv;
  cv.folds = config.classify.folds;
  cv.seed = config.classify.seed;
  cv.lambda = config.classify.lambda;
  cv.bootstrap_resamples = config.classify.bootstrap_resamples;
  cv.dimension = 4;
  const auto graphon = cross_validated_accuracy(dataset, EmbeddingMethod::kGraphon, cv);
  const auto pca = cross_validated_accuracy(dataset, EmbeddingMethod::kPca, cv);
  result.metrics["graphon_cv_accuracy"] = graphon.accuracy;
  result.metrics["pca_cv_accuracy"] = pca.accuracy;
  result.metrics["surrogate"] = result.degraded ? 1.0 : 0.0;

  std::optional<PairedStats> vs_pca;
  const std::vector<double> g(graphon.correct.begin(), graphon.correct.end());
  const std::vector<double> p(pca.correct.begin(), pca.correct.end());
  try {
    vs_pca = paired_difference_stats(g, p, cv.bootstrap_resamples, cv.seed);
    result.metrics["graphon_vs_pca_effect_size"] = vs_pca->effect_size;
    result.metrics["graphon_vs_pca_required_n"] = vs_pca->required_n;
  } catch (const ParameterError&) {
  }
  out.write("report_graphon.csv", format_report(graphon, vs_pca));
  out.write("report_pca.csv", format_report(pca));
  out.write("correct_graphon.csv", format_correctness_csv(graphon));
  out.write("correct_pca.csv", format_correctness_csv(pca));

  if (opt.rc_correctness) {
    const auto rc = read_correctness_csv(*opt.rc_correctness);
    std::map<std::uint64_t, int> by_id(rc.begin(), rc.end());
    std::vector<double> a, b;
    for (std::size_t i = 0; i < graphon.trial_ids.size(); ++i) {
      const auto it = by_id.find(graphon.trial_ids[i]);
      if (it == by_id.end()) continue;
      a.push_back(graphon.correct[i]);
      b.push_back(it->second);
    }
    const auto vs_rc = paired_difference_stats(a, b, cv.bootstrap_resamples, cv.seed);
    result.metrics["graphon_vs_rc_diff_ci95_lo"] = vs_rc.diff_ci95.lo;
    result.metrics["graphon_vs_rc_diff_ci95_hi"] = vs_rc.diff_ci95.hi;
    result.metrics["graphon_vs_rc_effect_size"] = vs_rc.effect_size;
    result.metrics["graphon_vs_rc_required_n"] = vs_rc.required_n;
  }
  out.write("table_sec6_summary.csv", format_metrics_csv(result.metrics));
  write_manifest(opt.output_dir, out.files(),
                 json{{"figure", "table_sec6"}, {"surrogate", result.degraded},
                      {"config_sha256", sha256_hex(serialize_config(config))}, {"seeds", seeds_json(config)}});
  result.files = out.files();
  return result;
}

}  // namespace

RunResult reproduce(FigureId figure, const ReproduceOptions& options) {
  switch (figure) {
    case FigureId::kFig5: return reproduce_fig5(options);
    case FigureId::kFig6: return reproduce_fig6(options);
    case FigureId::kFig8: return reproduce_fig8(options);
    case FigureId::kTableSec6: return reproduce_table(options);
  }
  throw ConfigError("unknown figure");
}

// Manifest ------------------------------------------------------------------------

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* kHex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

void write_manifest(const std::filesystem::path& directory, const std::vector<std::string>& files,
                    const json& extra) {
  json manifest = extra;
  manifest["tool"] = "gnsp";
  manifest["version"] = kToolVersion;
  json list = json::array();
  std::vector<std::string> sorted = files;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (const auto& f : sorted) {
    list.push_back({{"path", f}, {"sha256", sha256_hex(io::read_file(directory / f))}});
  }
  manifest["files"] = list;
  io::write_file(directory / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<std::string> verify_manifest(const std::filesystem::path& directory) {
  const json manifest = json::parse(io::read_file(directory / "manifest.json"));
  std::vector<std::string> bad;
  for (const auto& entry : manifest.at("files")) {
    const auto path = entry.at("path").get<std::string>();
    try {
      if (sha256_hex(io::read_file(directory / path)) != entry.at("sha256").get<std::string>()) bad.push_back(path);
    } catch (const ParseError&) {
      bad.push_back(path);
    }
  }
  return bad;
}

}  // namespace gnsp
