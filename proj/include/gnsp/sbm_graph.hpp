#pragma once

// Four-block stochastic block network: block probability matrix C(alpha),
// Bernoulli sampling of B = C (x) K^n, and dense spectral decomposition.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gnsp {

inline constexpr int kNumBlocks = 4;

using Block4 = std::array<std::array<double, kNumBlocks>, kNumBlocks>;
using Vec4 = std::array<double, kNumBlocks>;

/// Validates 0 < alpha < 1/2; throws ParameterError otherwise.
void check_alpha(double alpha);

/// C(alpha): diagonal 1 - 2 alpha, alpha between blocks {1,4} and {2,3},
/// zero between 1-4 and 2-3. Rows sum to 1.
struct BlockProbabilityMatrix {
  double alpha = 0.0;
  Block4 entries{};

  double operator()(int row, int col) const { return entries[row][col]; }
};

BlockProbabilityMatrix build_block_probability_matrix(double alpha);

struct BlockEigenpair {
  double eigenvalue = 0.0;
  Vec4 vector{};
};

/// The closed-form orthonormal eigenbasis of C(alpha), ordered
/// 1, 1-2a, 1-2a, 1-4a.
std::array<BlockEigenpair, kNumBlocks> analytic_block_eigenpairs(double alpha);

struct SbmConfig {
  double alpha = 0.05;
  int n = 100;  // nodes per block
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t num_nodes() const { return static_cast<std::size_t>(kNumBlocks) * n; }
};

/// Symmetric 0/1 matrix with zero diagonal. The invariants are maintained by
/// construction: edges can only be added in mirrored pairs.
class AdjacencyMatrix {
 public:
  explicit AdjacencyMatrix(std::size_t size = 0);

  /// Throws ContractError on self loops or out-of-range indices.
  static AdjacencyMatrix from_edges(std::size_t size,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& edges);

  std::size_t size() const { return size_; }
  bool operator()(std::size_t i, std::size_t j) const { return data_[i * size_ + j] != 0; }

  void add_edge(std::size_t i, std::size_t j);

  std::size_t degree(std::size_t i) const;
  std::size_t edge_count() const;

  /// Neighbors of i in increasing order.
  std::vector<std::uint32_t> neighbors(std::size_t i) const;
  /// Edges (u, v) with u < v in lexicographic order.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  Eigen::MatrixXd to_dense() const;

  bool operator==(const AdjacencyMatrix&) const = default;

 private:
  std::size_t size_;
  std::vector<std::uint8_t> data_;
};

/// One draw of the block network. Node u belongs to block u / n and has
/// within-block index u % n; the edge probability is C[b(u)][b(v)] when the
/// within-block indices differ and 0 when they coincide (K^n has a zero
/// diagonal, so the Kronecker product also removes edges between
/// same-indexed nodes of different blocks). Upper triangle sampled, then
/// mirrored. Deterministic in config.seed.
AdjacencyMatrix sample_adjacency(const SbmConfig& config);

/// Expected adjacency C (x) K^n (edge probabilities) for the given config.
Eigen::MatrixXd expected_adjacency(double alpha, int n);

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   // nonincreasing
  Eigen::MatrixXd eigenvectors;  // column k pairs with eigenvalues[k]
};

/// Full symmetric eigendecomposition, eigenvalues sorted descending, each
/// eigenvector flipped so its largest-magnitude entry is positive.
SpectralDecomposition eigendecompose(const AdjacencyMatrix& adjacency);

/// Same for a general dense matrix; throws ContractError if it is not
/// symmetric (exactly, entrywise).
SpectralDecomposition eigendecompose(const Eigen::MatrixXd& symmetric);

// Edge-list format: header "# nodes=<N> alpha=<a> seed=<s>", then one
// "u v" line per undirected edge (u < v, 0-based).
struct EdgeListFile {
  AdjacencyMatrix adjacency;
  double alpha = 0.0;
  std::uint64_t seed = 0;
};

std::string format_edge_list(const AdjacencyMatrix& adjacency, double alpha, std::uint64_t seed);
EdgeListFile parse_edge_list(const std::string& text);
void write_edge_list(const std::filesystem::path& path, const AdjacencyMatrix& adjacency,
                     double alpha, std::uint64_t seed);
EdgeListFile read_edge_list(const std::filesystem::path& path);

/// Writes <stem>.csv (index,eigenvalue) and <stem>_vectors.csv (one row per
/// node, one column per eigenvector).
void write_spectra(const std::filesystem::path& eigenvalues_csv,
                   const std::filesystem::path& eigenvectors_csv,
                   const SpectralDecomposition& decomposition);

}  // namespace gnsp
