#pragma once

// End-to-end experiments: graph generation -> simulation -> response
// extraction -> embedding -> classification -> statistics, driven by a JSON
// config, with a hashed manifest of every output file.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gnsp/classifier.hpp"
#include "gnsp/embedding.hpp"
#include "gnsp/lif.hpp"
#include "gnsp/protocols.hpp"

namespace gnsp {

struct ExperimentConfig {
  struct Sbm {
    double alpha = 0.05;
    int n = 100;
    std::uint64_t seed = 1;
    bool graph_per_trial = false;    // fresh network realization for every trial
    std::vector<double> alpha_sweep; // non-empty: one sub-experiment per alpha
  } sbm;
  NeuronParams neuron;
  SynapseParams synapse;
  AuxCurrentParams aux;
  struct Stimulus {
    double onset = 50.0;
    double duration = 5.0;
    double amplitude = 3.0;
  } stimulus;
  struct Sim {
    double dt = 0.1;
    double duration = 200.0;
    double window = 100.0;
    std::uint64_t seed = 2;
  } sim;
  struct ProtocolSection {
    ProtocolKind kind = ProtocolKind::kTwoCluster;
    std::string file;  // custom protocol CSV
  } protocol;
  int trials_per_stimulus = 20;
  struct Embedding {
    std::vector<EmbeddingMethod> methods{EmbeddingMethod::kGft, EmbeddingMethod::kGraphon,
                                         EmbeddingMethod::kPca};
    int dimensions = 3;
    CoordinateConvention convention = CoordinateConvention::kPaperBlockSum;
    std::vector<int> gft_indices{2, 3, 4};
  } embedding;
  struct Classify {
    bool enabled = true;
    double lambda = 1.0;
    int folds = 7;
    int bootstrap_resamples = 10000;
    std::uint64_t seed = 3;
    bool tune_lambda = false;
    int dimension = 4;
  } classify;
  struct Io {
    std::string output_dir = "gnsp_out";
    bool dump_rasters = false;
  } io;

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults; unknown keys and ill-typed values raise
/// ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

struct RunOptions {
  int jobs = 1;
};

/// Outcome of a pipeline run. `degraded` marks a surrogate substitution.
struct RunResult {
  std::filesystem::path directory;
  std::map<std::string, double> metrics;
  std::vector<std::string> files;  // relative to directory
  std::vector<std::string> skipped_trials;
  bool degraded = false;
};

/// Simulated responses for one protocol run.
struct SimulatedData {
  LabeledDataset dataset;
  std::vector<AdjacencyMatrix> graphs;          // one, or one per trial
  std::vector<std::size_t> graph_of_response;   // index into graphs
  std::vector<SpikeRaster> rasters;             // only when requested
  std::vector<std::string> skipped;             // "trial_id: reason"
};

/// Samples the graph(s) and runs every trial of the protocol. Trial t of
/// stimulus s has id s * trials + t; its noise seed and (per-trial) graph
/// seed are derived from the configured seeds and the id, so the output
/// does not depend on `jobs`.
SimulatedData simulate_protocol(const ExperimentConfig& config, double alpha, const RunOptions& options,
                                bool keep_rasters = false);

Protocol build_protocol(const ExperimentConfig& config);

/// Runs the configured experiment into config.io.output_dir.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

enum class FigureId { kFig5, kFig6, kFig8, kTableSec6 };
FigureId figure_from_string(const std::string& name);
const char* to_string(FigureId id);

struct ReproduceOptions {
  std::filesystem::path output_dir = "gnsp_reproduce";
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  // table_sec6 inputs; without both files a simulated surrogate is used.
  std::optional<std::filesystem::path> experimental_responses;
  std::optional<std::filesystem::path> experimental_block_map;
  std::optional<std::filesystem::path> rc_correctness;
  // fig6 sizing
  int fig6_meta_repetitions = 5;
  int fig6_realizations = 10;
  int fig6_trials_per_realization = 4;
};

RunResult reproduce(FigureId figure, const ReproduceOptions& options);

/// Canned configs for each figure.
ExperimentConfig figure_config(FigureId figure);

// Manifest ------------------------------------------------------------------

std::string sha256_hex(std::string_view data);

/// Writes manifest.json listing every file with its SHA-256.
void write_manifest(const std::filesystem::path& directory, const std::vector<std::string>& files,
                    const nlohmann::json& extra);

/// Files whose current hash differs from the manifest (empty: all good).
std::vector<std::string> verify_manifest(const std::filesystem::path& directory);

}  // namespace gnsp
