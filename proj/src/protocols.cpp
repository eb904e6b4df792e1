#include "gnsp/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gnsp/errors.hpp"
#include "gnsp/io.hpp"

namespace gnsp {

const char* to_string(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::kTwoCluster: return "two_cluster";
    case ProtocolKind::kMixedCluster: return "mixed_cluster";
    case ProtocolKind::kCustom: return "custom";
  }
  return "custom";
}

ProtocolKind protocol_kind_from_string(const std::string& name) {
  if (name == "two_cluster") return ProtocolKind::kTwoCluster;
  if (name == "mixed_cluster") return ProtocolKind::kMixedCluster;
  if (name == "custom") return ProtocolKind::kCustom;
  throw ParameterError("unknown protocol '" + name + "'");
}

void Protocol::validate(std::size_t num_nodes) const {
  std::set<std::string> seen;
  for (const auto& s : stimuli) {
    if (!seen.insert(s.label).second) throw ParameterError("duplicate stimulus label " + s.label);
    for (auto t : s.targets) {
      if (t >= num_nodes) throw ParameterError("stimulus " + s.label + " targets node out of range");
    }
  }
}

namespace {

std::vector<std::uint32_t> iota_range(std::uint32_t begin, std::uint32_t end) {
  std::vector<std::uint32_t> out;
  for (auto i = begin; i < end; ++i) out.push_back(i);
  return out;
}

}  // namespace

Protocol two_cluster_protocol(int n) {
  if (n < 1) throw ParameterError("nodes per block must be >= 1");
  const auto un = static_cast<std::uint32_t>(n);
  return {ProtocolKind::kTwoCluster, {{"s1", iota_range(0, un)}, {"s2", iota_range(un, 2 * un)}}};
}

Protocol mixed_cluster_protocol(int n) {
  if (n < 3) throw ParameterError("mixed-cluster protocol needs n >= 3");
  const auto un = static_cast<std::uint32_t>(n);
  const std::uint32_t head = (2 * un + 2) / 3;  // ceil(2n/3)
  const std::uint32_t third = un / 3;           // floor(n/3)
  Stimulus s1{"s1", iota_range(0, head)};
  Stimulus s2{"s2", iota_range(head, un)};
  const auto from_block2 = iota_range(un, un + third);
  s2.targets.insert(s2.targets.end(), from_block2.begin(), from_block2.end());
  Stimulus s3{"s3", iota_range(un + third, 2 * un)};
  return {ProtocolKind::kMixedCluster, {s1, s2, s3}};
}

Protocol load_custom_protocol(const std::filesystem::path& path, std::size_t num_nodes) {
  const std::string text = io::read_file(path);
  const auto lines = io::split_lines(text);
  if (lines.empty() || io::split_csv(lines[0]) != std::vector<std::string_view>{"label", "node"}) {
    throw ParseError(ParseErrorKind::kMissingColumn, 1, "expected header 'label,node'");
  }
  std::map<std::string, std::set<std::uint32_t>> targets;
  std::vector<std::string> order;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (io::trim(lines[row]).empty()) continue;
    const auto cells = io::split_csv(lines[row]);
    if (cells.size() != 2) throw ParseError(ParseErrorKind::kMissingColumn, row + 1, "expected 2 columns");
    const auto node = io::parse_uint(cells[1]);
    if (!node) throw ParseError(ParseErrorKind::kNonNumeric, row + 1, "node index");
    if (*node >= num_nodes) throw ParseError(ParseErrorKind::kMalformed, row + 1, "node out of range");
    std::string label(cells[0]);
    if (!targets.count(label)) order.push_back(label);
    targets[label].insert(static_cast<std::uint32_t>(*node));
  }
  Protocol p{ProtocolKind::kCustom, {}};
  for (const auto& label : order) {
    p.stimuli.push_back({label, {targets[label].begin(), targets[label].end()}});
  }
  p.validate(num_nodes);
  return p;
}

void LabeledDataset::validate() const {
  for (int b : block_map) {
    if (b < 1 || b > 4) throw ParameterError("block map entries must lie in 1..4");
  }
  for (const auto& r : responses) {
    if (r.values.size() != block_map.size()) {
      throw ParameterError("response length does not match the block map");
    }
  }
}

std::vector<int> sbm_block_map(int n) {
  std::vector<int> out(static_cast<std::size_t>(4 * n));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int>(i / static_cast<std::size_t>(n)) + 1;
  return out;
}

void normalize_l2(std::vector<double>& values) {
  double sq = 0.0;
  for (double x : values) sq += x * x;
  if (sq == 0.0) throw ZeroResponseError("response has zero norm");
  const double norm = std::sqrt(sq);
  for (double& x : values) x /= norm;
}

ResponseVector extract_response(const SpikeRaster& raster, double onset, double window) {
  if (onset + window > raster.duration + 1e-9) {
    throw ParameterError("response window extends past the end of the trial");
  }
  ResponseVector out;
  out.seed = raster.seed;
  out.values.resize(raster.spikes.size());
  const double end = onset + window;
  for (std::size_t i = 0; i < raster.spikes.size(); ++i) {
    const auto& s = raster.spikes[i];
    const auto lo = std::lower_bound(s.begin(), s.end(), onset);
    const auto hi = std::lower_bound(s.begin(), s.end(), end);
    out.values[i] = static_cast<double>(std::distance(lo, hi));
  }
  normalize_l2(out.values);
  return out;
}

std::vector<int> load_block_map(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  const auto lines = io::split_lines(text);
  if (lines.empty() || io::split_csv(lines[0]) != std::vector<std::string_view>{"roi_index", "block"}) {
    throw ParseError(ParseErrorKind::kMissingColumn, 1, "block map header must be 'roi_index,block'");
  }
  std::map<std::uint64_t, int> entries;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (io::trim(lines[row]).empty()) continue;
    const auto cells = io::split_csv(lines[row]);
    if (cells.size() != 2) throw ParseError(ParseErrorKind::kMissingColumn, row + 1, "expected 2 columns");
    const auto roi = io::parse_uint(cells[0]);
    const auto block = io::parse_int(cells[1]);
    if (!roi || !block) throw ParseError(ParseErrorKind::kNonNumeric, row + 1, "non-integer cell");
    if (*block < 1 || *block > 4) throw ParseError(ParseErrorKind::kBadBlock, row + 1, "block must be 1..4");
    if (!entries.emplace(*roi, static_cast<int>(*block)).second) {
      throw ParseError(ParseErrorKind::kMalformed, row + 1, "duplicate roi_index");
    }
  }
  std::vector<int> out;
  for (const auto& [roi, block] : entries) {
    if (roi != out.size()) {
      throw ParseError(ParseErrorKind::kMalformed, 0, "roi_index values must be 0..m-1 without gaps");
    }
    out.push_back(block);
  }
  return out;
}

LabeledDataset load_experimental_responses(const std::filesystem::path& responses_csv,
                                           const std::filesystem::path& block_map_csv,
                                           const ResponseSchema& schema) {
  const std::string text = io::read_file(responses_csv);
  const auto lines = io::split_lines(text);
  if (lines.empty()) throw ParseError(ParseErrorKind::kMissingColumn, 1, "empty response file");

  const auto header = io::split_csv(lines[0]);
  if (header.size() < 3 || header[0] != "trial_id" || header[1] != "label") {
    throw ParseError(ParseErrorKind::kMissingColumn, 1,
                     "header must start with trial_id,label followed by roi columns");
  }
  const std::size_t m = header.size() - 2;
  for (std::size_t k = 0; k < m; ++k) {
    if (header[k + 2] != "roi_" + std::to_string(k)) {
      throw ParseError(ParseErrorKind::kMissingColumn, 1, "expected column roi_" + std::to_string(k));
    }
  }

  LabeledDataset out;
  out.source = DataSource::kExperimental;
  out.block_map = load_block_map(block_map_csv);
  if (out.block_map.size() != m) {
    throw ParseError(ParseErrorKind::kLengthMismatch, 0,
                     "block map has " + std::to_string(out.block_map.size()) + " entries for " +
                         std::to_string(m) + " ROI columns");
  }

  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (io::trim(lines[row]).empty()) continue;
    const auto cells = io::split_csv(lines[row]);
    if (cells.size() != m + 2) {
      throw ParseError(ParseErrorKind::kMissingColumn, row + 1,
                       "expected " + std::to_string(m + 2) + " columns, got " + std::to_string(cells.size()));
    }
    ResponseVector r;
    const auto id = io::parse_uint(cells[0]);
    if (!id) throw ParseError(ParseErrorKind::kNonNumeric, row + 1, "trial_id must be an integer");
    r.trial_id = *id;
    r.label = std::string(cells[1]);
    if (std::find(schema.labels.begin(), schema.labels.end(), r.label) == schema.labels.end()) {
      throw ParseError(ParseErrorKind::kUnknownLabel, row + 1, "unknown label '" + r.label + "'");
    }
    r.values.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      const auto v = io::parse_double(cells[k + 2]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(ParseErrorKind::kNonNumeric, row + 1, "roi_" + std::to_string(k) + " is not a number");
      }
      if (*v < 0.0) {
        throw ParseError(ParseErrorKind::kMalformed, row + 1, "negative response in roi_" + std::to_string(k));
      }
      r.values[k] = *v;
    }
    try {
      normalize_l2(r.values);
    } catch (const ZeroResponseError&) {
      throw ParseError(ParseErrorKind::kMalformed, row + 1, "all-zero response");
    }
    out.responses.push_back(std::move(r));
  }
  return out;
}

std::string format_responses_csv(const LabeledDataset& dataset) {
  std::string out = "trial_id,label";
  for (std::size_t k = 0; k < dataset.dimension(); ++k) out += ",roi_" + std::to_string(k);
  out += "\n";
  for (const auto& r : dataset.responses) {
    out += std::to_string(r.trial_id) + "," + r.label;
    for (double v : r.values) out += "," + io::format_double(v);
    out += "\n";
  }
  return out;
}

std::string format_block_map_csv(const std::vector<int>& block_map) {
  std::string out = "roi_index,block\n";
  for (std::size_t i = 0; i < block_map.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(block_map[i]) + "\n";
  }
  return out;
}

void write_responses_csv(const std::filesystem::path& path, const LabeledDataset& dataset) {
  io::write_file(path, format_responses_csv(dataset));
}

void write_block_map_csv(const std::filesystem::path& path, const std::vector<int>& block_map) {
  io::write_file(path, format_block_map_csv(block_map));
}

}  // namespace gnsp
