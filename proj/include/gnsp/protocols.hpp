#pragma once

// Stimulation protocols, spike-count response extraction and response-matrix
// ingestion.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gnsp/lif.hpp"

namespace gnsp {

enum class ProtocolKind { kTwoCluster, kMixedCluster, kCustom };

const char* to_string(ProtocolKind kind);
ProtocolKind protocol_kind_from_string(const std::string& name);

struct Stimulus {
  std::string label;
  std::vector<std::uint32_t> targets;  // sorted node indices
};

struct Protocol {
  ProtocolKind kind = ProtocolKind::kCustom;
  std::vector<Stimulus> stimuli;

  /// Unique labels, targets inside [0, num_nodes).
  void validate(std::size_t num_nodes) const;
};

/// s1 = block 1, s2 = block 2.
Protocol two_cluster_protocol(int n);

/// s1 = first ceil(2n/3) of block 1; s2 = the rest of block 1 plus the first
/// floor(n/3) of block 2; s3 = the rest of block 2. Requires n >= 3.
Protocol mixed_cluster_protocol(int n);

/// Custom protocol file: CSV "label,node" (header required), one row per
/// targeted node.
Protocol load_custom_protocol(const std::filesystem::path& path, std::size_t num_nodes);

struct ResponseVector {
  std::vector<double> values;  // nonnegative, unit L2 norm
  std::string label;
  std::uint64_t trial_id = 0;
  std::uint64_t seed = 0;
};

enum class DataSource { kSimulated, kExperimental };

struct LabeledDataset {
  std::vector<ResponseVector> responses;
  std::vector<int> block_map;  // node or ROI index -> block in 1..4
  DataSource source = DataSource::kSimulated;

  void validate() const;
  std::size_t dimension() const { return block_map.size(); }
};

/// Block map of the simulated network: node u -> u / n + 1.
std::vector<int> sbm_block_map(int n);

/// Scales to unit L2 norm in place; ZeroResponseError for an all-zero vector.
void normalize_l2(std::vector<double>& values);

/// Spike counts per neuron in [onset, onset + window), L2-normalized.
/// Throws ZeroResponseError when no neuron spiked in the window.
ResponseVector extract_response(const SpikeRaster& raster, double onset, double window = 100.0);

/// Allowed labels of the experimental schema.
struct ResponseSchema {
  std::vector<std::string> labels{"s1", "s2", "s3"};
};

/// Response CSV: header trial_id,label,roi_0..roi_{m-1}; block map CSV:
/// header roi_index,block. Rows are L2-normalized (idempotent). Every schema
/// violation is a ParseError carrying its kind and row number.
LabeledDataset load_experimental_responses(const std::filesystem::path& responses_csv,
                                           const std::filesystem::path& block_map_csv,
                                           const ResponseSchema& schema = {});

std::vector<int> load_block_map(const std::filesystem::path& path);

std::string format_responses_csv(const LabeledDataset& dataset);
std::string format_block_map_csv(const std::vector<int>& block_map);
void write_responses_csv(const std::filesystem::path& path, const LabeledDataset& dataset);
void write_block_map_csv(const std::filesystem::path& path, const std::vector<int>& block_map);

}  // namespace gnsp
