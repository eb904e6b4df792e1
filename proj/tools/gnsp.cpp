// gnsp command-line driver.

#include <cmath>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "gnsp/errors.hpp"
#include "gnsp/experiment.hpp"
#include "gnsp/io.hpp"
#include "gnsp/rng.hpp"

namespace {

using namespace gnsp;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDegraded = 4;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out;
  bool dump_rasters = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_rasters = false) {
  cmd->add_option("--config", c.config, "JSON experiment config (defaults apply to missing keys)");
  cmd->add_option("--seed", c.seed, "root seed; overrides the sbm, sim and classify seeds");
  cmd->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "output directory");
  if (with_rasters) cmd->add_flag("--dump-rasters", c.dump_rasters, "write per-trial spike rasters");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig config = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.seed) {
    config.sbm.seed = derive_seed(*c.seed, 1);
    config.sim.seed = derive_seed(*c.seed, 2);
    config.classify.seed = derive_seed(*c.seed, 3);
  }
  if (!c.out.empty()) config.io.output_dir = c.out;
  if (c.dump_rasters) config.io.dump_rasters = true;
  config.validate();
  return config;
}

void print_metrics(const std::map<std::string, double>& metrics) {
  for (const auto& [k, v] : metrics) std::cout << k << " = " << io::format_double(v) << "\n";
}

void warn_skipped(const std::vector<std::string>& skipped) {
  for (const auto& s : skipped) std::cerr << "warning: skipped trial " << s << "\n";
}

int cmd_gen_graph(const Common& c) {
  const auto config = resolve(c);
  const std::filesystem::path dir = config.io.output_dir;
  const auto graph = sample_adjacency({config.sbm.alpha, config.sbm.n, config.sbm.seed});
  write_edge_list(dir / "graph.edgelist", graph, config.sbm.alpha, config.sbm.seed);
  write_spectra(dir / "eigenvalues.csv", dir / "eigenvectors.csv", eigendecompose(graph));
  std::cout << "nodes = " << graph.size() << "\nedges = " << graph.edge_count() << "\n";
  return kExitOk;
}

int cmd_simulate(const Common& c) {
  const auto config = resolve(c);
  const std::filesystem::path dir = config.io.output_dir;
  auto data = simulate_protocol(config, config.sbm.alpha, {c.jobs}, config.io.dump_rasters);
  warn_skipped(data.skipped);
  write_responses_csv(dir / "responses.csv", data.dataset);
  write_block_map_csv(dir / "block_map.csv", data.dataset.block_map);
  if (data.graphs.size() == 1) {
    write_edge_list(dir / "graph.edgelist", data.graphs.front(), config.sbm.alpha, config.sbm.seed);
  }
  for (const auto& r : data.rasters) {
    write_raster_csv(dir / "rasters" / ("seed_" + std::to_string(r.seed) + ".csv"), r);
  }
  std::cout << "trials = " << data.dataset.responses.size() << "\nskipped = " << data.skipped.size() << "\n";
  return kExitOk;
}

struct DataArgs {
  std::string responses;
  std::string block_map;
  std::string graph;
  std::string method = "graphon";
  int dimensions = 3;
  std::string convention = "paper_blocksum";
  double alpha = 0.05;
};

void add_data_args(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--responses", d.responses, "trial_id,label,roi_0.. CSV")->required();
  cmd->add_option("--block-map", d.block_map, "roi_index,block CSV")->required();
  cmd->add_option("--graph", d.graph, "edge list (required for gft)");
  cmd->add_option("--method", d.method, "gft | graphon | pca");
  cmd->add_option("--dimensions", d.dimensions, "embedding dimension");
  cmd->add_option("--convention", d.convention, "paper_blocksum | orthonormal");
  cmd->add_option("--alpha", d.alpha, "alpha for the graphon eigenvalues");
}

int cmd_embed(const Common& c, const DataArgs& d) {
  const auto dataset = load_experimental_responses(d.responses, d.block_map);
  const auto method = embedding_method_from_string(d.method);
  EmbeddingSet set;
  std::vector<int> modes;
  switch (method) {
    case EmbeddingMethod::kGft: {
      if (d.graph.empty()) throw ConfigError("--graph is required for the gft method");
      for (int k = 0; k < d.dimensions; ++k) modes.push_back(k + 2);
      set = gft_project(dataset.responses, eigendecompose(read_edge_list(d.graph).adjacency), modes);
      break;
    }
    case EmbeddingMethod::kGraphon:
      for (int k = 0; k < std::min(d.dimensions, 3); ++k) modes.push_back(k + 2);
      set = graphon_project(dataset.responses, analytic_graphon_eigenpairs(d.alpha), dataset.block_map,
                            convention_from_string(d.convention), modes);
      break;
    case EmbeddingMethod::kPca:
      set = pca_fit_transform(dataset.responses, d.dimensions);
      break;
  }
  const std::filesystem::path out = c.out.empty() ? "." : c.out;
  write_embedding_csv(out / (std::string("embedding_") + to_string(method) + ".csv"), set);
  std::cout << "rows = " << set.size() << "\ndimension = " << set.dimension() << "\n";
  return kExitOk;
}

int cmd_classify(const Common& c, const DataArgs& d, const CvOptions& base) {
  const auto dataset = load_experimental_responses(d.responses, d.block_map);
  const auto method = embedding_method_from_string(d.method);
  CvOptions cv = base;
  cv.convention = convention_from_string(d.convention);
  if (c.seed) cv.seed = *c.seed;
  std::optional<SpectralDecomposition> decomposition;
  if (method == EmbeddingMethod::kGft) {
    if (d.graph.empty()) throw ConfigError("--graph is required for the gft method");
    decomposition = eigendecompose(read_edge_list(d.graph).adjacency);
  }
  const auto report = cross_validated_accuracy(dataset, method, cv, decomposition ? &*decomposition : nullptr);
  const std::filesystem::path out = c.out.empty() ? "." : c.out;
  write_report(out / (std::string("report_") + to_string(method) + ".csv"), report);
  io::write_file(out / (std::string("correct_") + to_string(method) + ".csv"), format_correctness_csv(report));
  std::cout << format_report(report);
  return kExitOk;
}

int cmd_stats(const Common& c, const std::string& a_path, const std::string& b_path,
              std::optional<double> effect_size, int resamples) {
  if (effect_size) {
    std::cout << "effect_size = " << io::format_double(*effect_size) << "\n"
              << "required_n = " << io::format_double(required_sample_size(*effect_size)) << "\n";
    return kExitOk;
  }
  if (a_path.empty() || b_path.empty()) throw ConfigError("stats needs --a and --b, or --effect-size");
  const auto a = read_correctness_csv(a_path);
  const auto b = read_correctness_csv(b_path);
  std::map<std::uint64_t, int> by_id(b.begin(), b.end());
  std::vector<double> xa, xb;
  for (const auto& [id, ok] : a) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) continue;
    xa.push_back(ok);
    xb.push_back(it->second);
  }
  if (xa.size() < 2) throw InsufficientDataError("fewer than two paired trial ids");
  const auto s = paired_difference_stats(xa, xb, resamples, c.seed.value_or(0));
  std::cout << "pairs = " << xa.size() << "\n"
            << "mean_difference = " << io::format_double(s.mean_difference) << "\n"
            << "diff_ci95_lo = " << io::format_double(s.diff_ci95.lo) << "\n"
            << "diff_ci95_hi = " << io::format_double(s.diff_ci95.hi) << "\n"
            << "effect_size = " << io::format_double(s.effect_size) << "\n"
            << "required_n = " << io::format_double(s.required_n) << "\n";
  return kExitOk;
}

int cmd_run(const Common& c) {
  const auto config = resolve(c);
  const auto result = run_experiment(config, {c.jobs});
  warn_skipped(result.skipped_trials);
  print_metrics(result.metrics);
  std::cout << "output = " << result.directory.string() << "\n";
  return kExitOk;
}

int cmd_reproduce(const Common& c, const std::string& figure, ReproduceOptions opt) {
  opt.jobs = c.jobs;
  opt.seed = c.seed;
  if (!c.out.empty()) opt.output_dir = c.out;
  else opt.output_dir = std::filesystem::path("gnsp_reproduce") / figure;
  const auto result = reproduce(figure_from_string(figure), opt);
  warn_skipped(result.skipped_trials);
  print_metrics(result.metrics);
  std::cout << "output = " << result.directory.string() << "\n";
  if (result.degraded) {
    std::cerr << "warning: experimental data not supplied; ran the simulated surrogate (see SURROGATE.txt)\n";
    return kExitDegraded;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graphon signal processing for stimulus identification in spiking networks"};
  app.require_subcommand(1);

  Common common;
  DataArgs data;
  CvOptions cv;
  std::string stats_a, stats_b;
  std::optional<double> stats_effect;
  int stats_resamples = 10000;
  std::string figure;
  ReproduceOptions repro;
  std::string exp_responses, exp_block_map, rc_correctness;

  auto* gen = app.add_subcommand("gen-graph", "sample an SBM graph and its spectrum");
  add_common(gen, common);
  auto* sim = app.add_subcommand("simulate", "simulate every protocol trial and write responses");
  add_common(sim, common, true);
  auto* embed = app.add_subcommand("embed", "embed a response CSV");
  add_common(embed, common);
  add_data_args(embed, data);
  auto* classify = app.add_subcommand("classify", "cross-validated ridge classification");
  add_common(classify, common);
  add_data_args(classify, data);
  classify->add_option("--lambda", cv.lambda, "ridge penalty");
  classify->add_option("--folds", cv.folds, "stratified folds");
  classify->add_option("--bootstrap", cv.bootstrap_resamples, "bootstrap resamples");
  classify->add_flag("--tune-lambda", cv.tune_lambda, "nested grid search over lambda");
  auto* stats = app.add_subcommand("stats", "paired comparison or required sample size");
  add_common(stats, common);
  stats->add_option("--a", stats_a, "trial_id,correct CSV of method A");
  stats->add_option("--b", stats_b, "trial_id,correct CSV of method B");
  stats->add_option("--effect-size", stats_effect, "print the sample size needed for this Cohen's d");
  stats->add_option("--bootstrap", stats_resamples, "bootstrap resamples");
  auto* run = app.add_subcommand("run", "run the full configured pipeline");
  add_common(run, common, true);
  auto* rep = app.add_subcommand("reproduce", "regenerate a figure's data");
  add_common(rep, common);
  rep->add_option("figure", figure, "fig5 | fig6 | fig8 | table_sec6")->required();
  rep->add_option("--responses", exp_responses, "experimental response CSV (table_sec6)");
  rep->add_option("--block-map", exp_block_map, "experimental block map (table_sec6)");
  rep->add_option("--rc-correctness", rc_correctness, "reservoir-computing trial_id,correct CSV");
  rep->add_option("--meta-reps", repro.fig6_meta_repetitions, "fig6 meta repetitions");
  rep->add_option("--realizations", repro.fig6_realizations, "fig6 graph realizations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen) return cmd_gen_graph(common);
    if (*sim) return cmd_simulate(common);
    if (*embed) return cmd_embed(common, data);
    if (*classify) return cmd_classify(common, data, cv);
    if (*stats) return cmd_stats(common, stats_a, stats_b, stats_effect, stats_resamples);
    if (*run) return cmd_run(common);
    if (*rep) {
      if (!exp_responses.empty()) repro.experimental_responses = exp_responses;
      if (!exp_block_map.empty()) repro.experimental_block_map = exp_block_map;
      if (!rc_correctness.empty()) repro.rc_correctness = rc_correctness;
      return cmd_reproduce(common, figure, repro);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const InsufficientDataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const ZeroResponseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const SingularSystemError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
