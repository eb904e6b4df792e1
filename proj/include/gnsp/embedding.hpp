#pragma once

// Low-dimensional coordinates of response vectors: graph Fourier transform,
// projection onto the limit graphon's eigenfunctions, and PCA. Also the
// cluster-geometry metrics used to compare them.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gnsp/graphon.hpp"
#include "gnsp/protocols.hpp"
#include "gnsp/sbm_graph.hpp"

namespace gnsp {

enum class EmbeddingMethod { kGft, kGraphon, kPca };
const char* to_string(EmbeddingMethod method);
EmbeddingMethod embedding_method_from_string(const std::string& name);

/// How graphon coordinates are scaled.
///   kPaperBlockSum: c_k = sum over blocks of (v_kj / max_j |v_kj|) * (block sum
///     of f), e.g. c2 = B2 - B3, c4 = (B1 + B4) - (B2 + B3).
///   kOrthonormal: inner product with the unit-norm block-constant vector
///     u_k(i) = v_kj / sqrt(m_j) (m_j = block size), which is the L2([0,1])
///     product with the unit eigenfunction under the isometric embedding of
///     node signals as step functions. Then c_k^paper = s_k * c_k^ortho with
///     s_k = sqrt(m) / max_j |v_kj| for equal blocks of size m.
enum class CoordinateConvention { kOrthonormal, kPaperBlockSum };
const char* to_string(CoordinateConvention convention);
CoordinateConvention convention_from_string(const std::string& name);

struct EmbeddingSet {
  EmbeddingMethod method = EmbeddingMethod::kGraphon;
  std::vector<std::vector<double>> coords;
  std::vector<std::string> labels;
  std::vector<std::uint64_t> trial_ids;
  std::string basis_meta;

  std::size_t dimension() const { return coords.empty() ? 0 : coords.front().size(); }
  std::size_t size() const { return coords.size(); }
  Eigen::MatrixXd matrix() const;  // one row per trial
};

/// coords[t][k] = <response t, eigenvector indices[k]>; indices are 1-based
/// by descending eigenvalue.
EmbeddingSet gft_project(std::span<const ResponseVector> responses,
                         const SpectralDecomposition& decomposition,
                         const std::vector<int>& indices = {2, 3, 4});

/// Projection onto the analytic graphon eigenfunctions. `modes` are 1-based
/// mode numbers; `block_map` assigns each node/ROI to a block 1..4.
EmbeddingSet graphon_project(std::span<const ResponseVector> responses,
                             const std::array<GraphonEigenpair, kNumBlocks>& eigenpairs,
                             const std::vector<int>& block_map,
                             CoordinateConvention convention = CoordinateConvention::kPaperBlockSum,
                             const std::vector<int>& modes = {2, 3, 4});

/// Unit-norm block-constant vectors u_k of the orthonormal convention, one
/// column per mode 1..4.
Eigen::MatrixXd discretized_eigenfunctions(const std::array<GraphonEigenpair, kNumBlocks>& eigenpairs,
                                           const std::vector<int>& block_map);

/// Norm of the component of f in the zero eigenspace of the limit operator
/// (f minus its block means). Diagnostic only.
double v0_residual_norm(const ResponseVector& response, const std::vector<int>& block_map);

struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;  // one unit column per component
  std::vector<double> explained_variance_ratio;

  EmbeddingSet transform(std::span<const ResponseVector> responses) const;
};

/// Requires at least d + 1 trials. Components are sign-fixed so their
/// largest-magnitude loading is positive.
PcaModel pca_fit(std::span<const ResponseVector> responses, int d);
EmbeddingSet pca_fit_transform(std::span<const ResponseVector> responses, int d);

struct PairAlignment {
  Eigen::Matrix2d rotation = Eigen::Matrix2d::Identity();
  bool degenerate = true;  // false: eigenvalues 2, 3 not within 5%, identity returned
};

/// Orthogonal Procrustes transform Q (2x2) maximizing the fit of
/// [v2 v3] Q to the discretized (phi2, phi3).
PairAlignment align_degenerate_pair(const SpectralDecomposition& empirical,
                                    const std::array<GraphonEigenpair, kNumBlocks>& analytic,
                                    const std::vector<int>& block_map);

/// Copy of `empirical` with eigenvectors 1 and 4 sign-matched to the
/// discretized phi1, phi4 and the (v2, v3) plane rotated by
/// align_degenerate_pair.
SpectralDecomposition align_to_graphon_basis(const SpectralDecomposition& empirical,
                                             const std::array<GraphonEigenpair, kNumBlocks>& analytic,
                                             const std::vector<int>& block_map,
                                             PairAlignment* alignment = nullptr);

// Cluster geometry -----------------------------------------------------------

/// Mean coordinate per label.
std::map<std::string, Eigen::VectorXd> label_centroids(const EmbeddingSet& set);

/// Mean silhouette over all points (Euclidean). Points in singleton clusters
/// contribute 0.
double silhouette_score(const EmbeddingSet& set);

/// Position t of the projection of p onto the line a + t (b - a); the
/// projection lies strictly inside the segment iff 0 < t < 1.
double segment_parameter(const Eigen::VectorXd& p, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// trial_id,label,c1..cd,method
std::string format_embedding_csv(const EmbeddingSet& set);
void write_embedding_csv(const std::filesystem::path& path, const EmbeddingSet& set);
EmbeddingSet read_embedding_csv(const std::filesystem::path& path);

}  // namespace gnsp
