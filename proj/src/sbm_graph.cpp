#include "gnsp/sbm_graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gnsp/errors.hpp"
#include "gnsp/io.hpp"
#include "gnsp/rng.hpp"

namespace gnsp {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw ParameterError("alpha must lie in (0, 1/2), got " + io::format_double(alpha));
  }
}

BlockProbabilityMatrix build_block_probability_matrix(double alpha) {
  check_alpha(alpha);
  const double d = 1.0 - 2.0 * alpha;
  BlockProbabilityMatrix c;
  c.alpha = alpha;
  c.entries = {{{d, alpha, alpha, 0.0},
                {alpha, d, 0.0, alpha},
                {alpha, 0.0, d, alpha},
                {0.0, alpha, alpha, d}}};
  return c;
}

std::array<BlockEigenpair, kNumBlocks> analytic_block_eigenpairs(double alpha) {
  check_alpha(alpha);
  const double h = 0.5;
  const double r = 1.0 / std::sqrt(2.0);
  return {{
      {1.0, {h, h, h, h}},
      {1.0 - 2.0 * alpha, {0.0, r, -r, 0.0}},
      {1.0 - 2.0 * alpha, {r, 0.0, 0.0, -r}},
      {1.0 - 4.0 * alpha, {h, -h, -h, h}},
  }};
}

void SbmConfig::validate() const {
  check_alpha(alpha);
  if (n < 1) throw ParameterError("nodes per block must be >= 1");
}

AdjacencyMatrix::AdjacencyMatrix(std::size_t size) : size_(size), data_(size * size, 0) {}

AdjacencyMatrix AdjacencyMatrix::from_edges(
    std::size_t size, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  AdjacencyMatrix a(size);
  for (auto [u, v] : edges) a.add_edge(u, v);
  return a;
}

void AdjacencyMatrix::add_edge(std::size_t i, std::size_t j) {
  if (i >= size_ || j >= size_) throw ContractError("edge index out of range");
  if (i == j) throw ContractError("self loops are not allowed");
  data_[i * size_ + j] = 1;
  data_[j * size_ + i] = 1;
}

std::size_t AdjacencyMatrix::degree(std::size_t i) const {
  return static_cast<std::size_t>(
      std::count(data_.begin() + static_cast<std::ptrdiff_t>(i * size_),
                 data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * size_), std::uint8_t{1}));
}

std::size_t AdjacencyMatrix::edge_count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1})) / 2;
}

std::vector<std::uint32_t> AdjacencyMatrix::neighbors(std::size_t i) const {
  std::vector<std::uint32_t> out;
  for (std::size_t j = 0; j < size_; ++j) {
    if (data_[i * size_ + j]) out.push_back(static_cast<std::uint32_t>(j));
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> AdjacencyMatrix::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < size_; ++i) {
    for (std::size_t j = i + 1; j < size_; ++j) {
      if (data_[i * size_ + j]) out.emplace_back(i, j);
    }
  }
  return out;
}

Eigen::MatrixXd AdjacencyMatrix::to_dense() const {
  const auto n = static_cast<Eigen::Index>(size_);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = data_[i * size_ + j];
  }
  return m;
}

AdjacencyMatrix sample_adjacency(const SbmConfig& config) {
  config.validate();
  const auto c = build_block_probability_matrix(config.alpha);
  const std::size_t n = static_cast<std::size_t>(config.n);
  const std::size_t size = config.num_nodes();
  AdjacencyMatrix a(size);
  Rng rng(config.seed);
  for (std::size_t u = 0; u < size; ++u) {
    const std::size_t bu = u / n;
    const std::size_t ku = u % n;
    for (std::size_t v = u + 1; v < size; ++v) {
      const std::size_t kv = v % n;
      if (ku == kv) continue;  // K^n diagonal
      const double p = c.entries[bu][v / n];
      if (p <= 0.0) continue;
      if (rng.uniform() < p) a.add_edge(u, v);
    }
  }
  return a;
}

Eigen::MatrixXd expected_adjacency(double alpha, int n) {
  const auto c = build_block_probability_matrix(alpha);
  if (n < 1) throw ParameterError("nodes per block must be >= 1");
  const Eigen::Index size = static_cast<Eigen::Index>(kNumBlocks) * n;
  Eigen::MatrixXd m(size, size);
  for (Eigen::Index u = 0; u < size; ++u) {
    for (Eigen::Index v = 0; v < size; ++v) {
      m(u, v) = (u % n == v % n) ? 0.0 : c.entries[u / n][v / n];
    }
  }
  return m;
}

SpectralDecomposition eigendecompose(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ContractError("eigendecompose: matrix is not square");
  if (m.rows() == 0) throw ContractError("eigendecompose: empty matrix");
  if (!(m.array() == m.transpose().array()).all()) {
    throw ContractError("eigendecompose: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver did not converge");

  const Eigen::Index n = m.rows();
  SpectralDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index k = 0; k < n; ++k) {
    auto col = out.eigenvectors.col(k);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
  }
  return out;
}

SpectralDecomposition eigendecompose(const AdjacencyMatrix& adjacency) {
  return eigendecompose(adjacency.to_dense());
}

std::string format_edge_list(const AdjacencyMatrix& adjacency, double alpha, std::uint64_t seed) {
  std::string out = "# nodes=" + std::to_string(adjacency.size()) +
                    " alpha=" + io::format_double(alpha) + " seed=" + std::to_string(seed) + "\n";
  for (auto [u, v] : adjacency.edges()) {
    out += std::to_string(u);
    out += ' ';
    out += std::to_string(v);
    out += '\n';
  }
  return out;
}

EdgeListFile parse_edge_list(const std::string& text) {
  const auto lines = io::split_lines(text);
  if (lines.empty()) throw ParseError(ParseErrorKind::kMalformed, 1, "empty edge list");

  std::optional<std::uint64_t> nodes;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  {
    std::string_view header = lines[0];
    if (header.substr(0, 1) != "#") {
      throw ParseError(ParseErrorKind::kMissingColumn, 1, "missing '# nodes=... alpha=... seed=...' header");
    }
    header.remove_prefix(1);
    std::istringstream ss{std::string(header)};
    std::string token;
    while (ss >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      if (key == "nodes") nodes = io::parse_uint(value);
      else if (key == "alpha") alpha = io::parse_double(value);
      else if (key == "seed") seed = io::parse_uint(value);
    }
  }
  if (!nodes || !alpha || !seed) {
    throw ParseError(ParseErrorKind::kMissingColumn, 1, "header must carry nodes, alpha and seed");
  }

  EdgeListFile out{AdjacencyMatrix(*nodes), *alpha, *seed};
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const auto line = io::trim(lines[row]);
    if (line.empty() || line.front() == '#') continue;
    const auto space = line.find_first_of(" \t");
    if (space == std::string_view::npos) {
      throw ParseError(ParseErrorKind::kMalformed, row + 1, "expected 'u v'");
    }
    const auto u = io::parse_uint(line.substr(0, space));
    const auto v = io::parse_uint(io::trim(line.substr(space + 1)));
    if (!u || !v) throw ParseError(ParseErrorKind::kNonNumeric, row + 1, "non-numeric node index");
    if (*u >= *nodes || *v >= *nodes || *u == *v) {
      throw ParseError(ParseErrorKind::kMalformed, row + 1, "invalid edge");
    }
    out.adjacency.add_edge(*u, *v);
  }
  return out;
}

void write_edge_list(const std::filesystem::path& path, const AdjacencyMatrix& adjacency,
                     double alpha, std::uint64_t seed) {
  io::write_file(path, format_edge_list(adjacency, alpha, seed));
}

EdgeListFile read_edge_list(const std::filesystem::path& path) {
  return parse_edge_list(io::read_file(path));
}

void write_spectra(const std::filesystem::path& eigenvalues_csv,
                   const std::filesystem::path& eigenvectors_csv,
                   const SpectralDecomposition& d) {
  std::string values = "index,eigenvalue\n";
  for (Eigen::Index k = 0; k < d.eigenvalues.size(); ++k) {
    values += std::to_string(k + 1) + "," + io::format_double(d.eigenvalues(k)) + "\n";
  }
  io::write_file(eigenvalues_csv, values);

  std::string vectors = "node";
  for (Eigen::Index k = 0; k < d.eigenvectors.cols(); ++k) vectors += ",v" + std::to_string(k + 1);
  vectors += "\n";
  for (Eigen::Index i = 0; i < d.eigenvectors.rows(); ++i) {
    vectors += std::to_string(i);
    for (Eigen::Index k = 0; k < d.eigenvectors.cols(); ++k) {
      vectors += "," + io::format_double(d.eigenvectors(i, k));
    }
    vectors += "\n";
  }
  io::write_file(eigenvectors_csv, vectors);
}

}  // namespace gnsp
