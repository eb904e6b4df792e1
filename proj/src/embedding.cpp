#include "gnsp/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gnsp/errors.hpp"
#include "gnsp/io.hpp"
#include "gnsp/simd.hpp"

namespace gnsp {

const char* to_string(EmbeddingMethod method) {
  switch (method) {
    case EmbeddingMethod::kGft: return "gft";
    case EmbeddingMethod::kGraphon: return "graphon";
    case EmbeddingMethod::kPca: return "pca";
  }
  return "graphon";
}

EmbeddingMethod embedding_method_from_string(const std::string& name) {
  if (name == "gft") return EmbeddingMethod::kGft;
  if (name == "graphon") return EmbeddingMethod::kGraphon;
  if (name == "pca") return EmbeddingMethod::kPca;
  throw ParameterError("unknown embedding method '" + name + "'");
}

const char* to_string(CoordinateConvention convention) {
  return convention == CoordinateConvention::kOrthonormal ? "orthonormal" : "paper_blocksum";
}

CoordinateConvention convention_from_string(const std::string& name) {
  if (name == "orthonormal") return CoordinateConvention::kOrthonormal;
  if (name == "paper_blocksum") return CoordinateConvention::kPaperBlockSum;
  throw ParameterError("unknown coordinate convention '" + name + "'");
}

Eigen::MatrixXd EmbeddingSet::matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(dimension()));
  for (std::size_t t = 0; t < size(); ++t) {
    for (std::size_t k = 0; k < dimension(); ++k) {
      m(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = coords[t][k];
    }
  }
  return m;
}

namespace {

void copy_trial_info(std::span<const ResponseVector> responses, EmbeddingSet& out) {
  for (const auto& r : responses) {
    out.labels.push_back(r.label);
    out.trial_ids.push_back(r.trial_id);
  }
}

// coords[t][k] = <responses[t], basis column k>
std::vector<std::vector<double>> project(std::span<const ResponseVector> responses,
                                         const Eigen::MatrixXd& basis) {
  const auto& k = simd::active_kernels();
  std::vector<std::vector<double>> out;
  out.reserve(responses.size());
  for (const auto& r : responses) {
    if (static_cast<Eigen::Index>(r.values.size()) != basis.rows()) {
      throw ContractError("response length " + std::to_string(r.values.size()) +
                          " does not match basis size " + std::to_string(basis.rows()));
    }
    std::vector<double> c(static_cast<std::size_t>(basis.cols()));
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
      c[static_cast<std::size_t>(j)] =
          k.dot(r.values, std::span<const double>(basis.col(j).data(), static_cast<std::size_t>(basis.rows())));
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::array<std::size_t, kNumBlocks> block_sizes(const std::vector<int>& block_map) {
  std::array<std::size_t, kNumBlocks> sizes{};
  for (int b : block_map) {
    if (b < 1 || b > kNumBlocks) throw ParameterError("block map entries must lie in 1..4");
    ++sizes[static_cast<std::size_t>(b - 1)];
  }
  return sizes;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

EmbeddingSet gft_project(std::span<const ResponseVector> responses,
                         const SpectralDecomposition& decomposition, const std::vector<int>& indices) {
  const Eigen::Index n = decomposition.eigenvectors.cols();
  Eigen::MatrixXd basis(decomposition.eigenvectors.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 1 || indices[k] > n) throw ContractError("eigenvector index out of range");
    basis.col(static_cast<Eigen::Index>(k)) = decomposition.eigenvectors.col(indices[k] - 1);
  }
  EmbeddingSet out;
  out.method = EmbeddingMethod::kGft;
  out.coords = project(responses, basis);
  copy_trial_info(responses, out);
  out.basis_meta = "graph eigenvectors " + join_ints(indices) + " (descending eigenvalue order)";
  return out;
}

Eigen::MatrixXd discretized_eigenfunctions(const std::array<GraphonEigenpair, kNumBlocks>& eigenpairs,
                                           const std::vector<int>& block_map) {
  const auto sizes = block_sizes(block_map);
  Eigen::MatrixXd u(static_cast<Eigen::Index>(block_map.size()), kNumBlocks);
  for (int k = 0; k < kNumBlocks; ++k) {
    const auto& phi = eigenpairs[static_cast<std::size_t>(k)].eigenfunction;
    for (std::size_t i = 0; i < block_map.size(); ++i) {
      const auto j = static_cast<std::size_t>(block_map[i] - 1);
      // Unit eigenfunction on quarter j equals 2 v_kj.
      const double v = 0.5 * phi.values[j];
      u(static_cast<Eigen::Index>(i), k) = v / std::sqrt(static_cast<double>(sizes[j]));
    }
  }
  return u;
}

EmbeddingSet graphon_project(std::span<const ResponseVector> responses,
                             const std::array<GraphonEigenpair, kNumBlocks>& eigenpairs,
                             const std::vector<int>& block_map, CoordinateConvention convention,
                             const std::vector<int>& modes) {
  if (block_map.empty()) throw ContractError("graphon projection needs a block map");
  const auto sizes = block_sizes(block_map);
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(block_map.size()), static_cast<Eigen::Index>(modes.size()));
  if (convention == CoordinateConvention::kOrthonormal) {
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      if (sizes[j] == 0) throw ContractError("orthonormal graphon coordinates need every block populated");
    }
  }
  for (std::size_t c = 0; c < modes.size(); ++c) {
    const int k = modes[c];
    if (k < 1 || k > kNumBlocks) throw ContractError("graphon mode must be 1..4");
    const auto& phi = eigenpairs[static_cast<std::size_t>(k - 1)].eigenfunction.values;
    const double peak = std::abs(*std::max_element(phi.begin(), phi.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    }));
    for (std::size_t i = 0; i < block_map.size(); ++i) {
      const auto j = static_cast<std::size_t>(block_map[i] - 1);
      const double weight = convention == CoordinateConvention::kPaperBlockSum
                                ? phi[j] / peak
                                : 0.5 * phi[j] / std::sqrt(static_cast<double>(sizes[j]));
      basis(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = weight;
    }
  }
  EmbeddingSet out;
  out.method = EmbeddingMethod::kGraphon;
  out.coords = project(responses, basis);
  copy_trial_info(responses, out);
  out.basis_meta = "graphon eigenfunctions " + join_ints(modes) + " (" + to_string(convention) + ")";
  return out;
}

double v0_residual_norm(const ResponseVector& response, const std::vector<int>& block_map) {
  if (response.values.size() != block_map.size()) throw ContractError("block map length mismatch");
  const auto sizes = block_sizes(block_map);
  std::array<double, kNumBlocks> sums{};
  double sq = 0.0;
  for (std::size_t i = 0; i < block_map.size(); ++i) {
    sums[static_cast<std::size_t>(block_map[i] - 1)] += response.values[i];
    sq += response.values[i] * response.values[i];
  }
  double block_part = 0.0;
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    if (sizes[j]) block_part += sums[j] * sums[j] / static_cast<double>(sizes[j]);
  }
  return std::sqrt(std::max(0.0, sq - block_part));
}

EmbeddingSet PcaModel::transform(std::span<const ResponseVector> responses) const {
  EmbeddingSet out;
  out.method = EmbeddingMethod::kPca;
  for (const auto& r : responses) {
    if (static_cast<Eigen::Index>(r.values.size()) != mean.size()) {
      throw ContractError("response length does not match the PCA model");
    }
    const Eigen::Map<const Eigen::VectorXd> x(r.values.data(), mean.size());
    const Eigen::VectorXd c = components.transpose() * (x - mean);
    out.coords.emplace_back(c.data(), c.data() + c.size());
  }
  copy_trial_info(responses, out);
  out.basis_meta = "principal components 1.." + std::to_string(components.cols()) + "; explained variance";
  for (double r : explained_variance_ratio) out.basis_meta += " " + io::format_double(r);
  return out;
}

PcaModel pca_fit(std::span<const ResponseVector> responses, int d) {
  if (d < 1) throw ParameterError("PCA dimension must be >= 1");
  if (responses.size() < static_cast<std::size_t>(d) + 1) {
    throw InsufficientDataError("PCA with d=" + std::to_string(d) + " needs at least " +
                                std::to_string(d + 1) + " trials");
  }
  const auto t = static_cast<Eigen::Index>(responses.size());
  const auto n = static_cast<Eigen::Index>(responses.front().values.size());
  if (d > n) throw ParameterError("PCA dimension exceeds the response length");
  Eigen::MatrixXd x(t, n);
  for (Eigen::Index i = 0; i < t; ++i) {
    const auto& v = responses[static_cast<std::size_t>(i)].values;
    if (static_cast<Eigen::Index>(v.size()) != n) throw ContractError("responses differ in length");
    x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), n);
  }
  PcaModel model;
  model.mean = x.colwise().mean().transpose();
  x.rowwise() -= model.mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  model.components = svd.matrixV().leftCols(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    auto col = model.components.col(k);
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col(arg) < 0.0) col = -col;
  }
  const double total = s.squaredNorm();
  for (Eigen::Index k = 0; k < d; ++k) {
    model.explained_variance_ratio.push_back(
        total > 0.0 && k < s.size() ? s(k) * s(k) / total : 0.0);
  }
  return model;
}

EmbeddingSet pca_fit_transform(std::span<const ResponseVector> responses, int d) {
  return pca_fit(responses, d).transform(responses);
}

PairAlignment align_degenerate_pair(const SpectralDecomposition& empirical,
                                    const std::array<GraphonEigenpair, kNumBlocks>& analytic,
                                    const std::vector<int>& block_map) {
  if (empirical.eigenvectors.cols() < 3) throw ContractError("need at least three eigenvectors");
  if (empirical.eigenvectors.rows() != static_cast<Eigen::Index>(block_map.size())) {
    throw ContractError("block map length does not match the decomposition");
  }
  PairAlignment out;
  const double l2 = empirical.eigenvalues(1);
  const double l3 = empirical.eigenvalues(2);
  const double scale = std::max(std::abs(l2), std::abs(l3));
  if (scale == 0.0 || std::abs(l2 - l3) / scale > 0.05) {
    out.degenerate = false;
    return out;
  }
  const Eigen::MatrixXd u = discretized_eigenfunctions(analytic, block_map);
  const Eigen::Matrix2d m = empirical.eigenvectors.middleCols(1, 2).transpose() * u.middleCols(1, 2);
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.rotation = svd.matrixU() * svd.matrixV().transpose();
  return out;
}

SpectralDecomposition align_to_graphon_basis(const SpectralDecomposition& empirical,
                                             const std::array<GraphonEigenpair, kNumBlocks>& analytic,
                                             const std::vector<int>& block_map,
                                             PairAlignment* alignment) {
  if (empirical.eigenvectors.cols() < kNumBlocks) throw ContractError("need at least four eigenvectors");
  const auto pair = align_degenerate_pair(empirical, analytic, block_map);
  if (alignment) *alignment = pair;
  const Eigen::MatrixXd u = discretized_eigenfunctions(analytic, block_map);
  SpectralDecomposition out = empirical;
  out.eigenvectors.middleCols(1, 2) = empirical.eigenvectors.middleCols(1, 2) * pair.rotation;
  for (Eigen::Index k : {Eigen::Index{0}, Eigen::Index{3}}) {
    if (out.eigenvectors.col(k).dot(u.col(k)) < 0.0) out.eigenvectors.col(k) *= -1.0;
  }
  return out;
}

std::map<std::string, Eigen::VectorXd> label_centroids(const EmbeddingSet& set) {
  std::map<std::string, Eigen::VectorXd> sums;
  std::map<std::string, int> counts;
  const auto d = static_cast<Eigen::Index>(set.dimension());
  for (std::size_t t = 0; t < set.size(); ++t) {
    auto [it, inserted] = sums.try_emplace(set.labels[t], Eigen::VectorXd::Zero(d));
    it->second += Eigen::Map<const Eigen::VectorXd>(set.coords[t].data(), d);
    ++counts[set.labels[t]];
  }
  for (auto& [label, v] : sums) v /= counts[label];
  return sums;
}

double silhouette_score(const EmbeddingSet& set) {
  const std::size_t t = set.size();
  if (t < 2) throw InsufficientDataError("silhouette needs at least two points");
  const Eigen::MatrixXd x = set.matrix();
  std::map<std::string, int> label_index;
  for (const auto& l : set.labels) label_index.try_emplace(l, static_cast<int>(label_index.size()));
  if (label_index.size() < 2) throw InsufficientDataError("silhouette needs at least two labels");
  std::vector<int> cluster(t);
  std::vector<int> cluster_size(label_index.size(), 0);
  for (std::size_t i = 0; i < t; ++i) {
    cluster[i] = label_index[set.labels[i]];
    ++cluster_size[static_cast<std::size_t>(cluster[i])];
  }

  double total = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    std::vector<double> dist_sum(label_index.size(), 0.0);
    for (std::size_t j = 0; j < t; ++j) {
      if (i == j) continue;
      dist_sum[static_cast<std::size_t>(cluster[j])] +=
          (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm();
    }
    const auto own = static_cast<std::size_t>(cluster[i]);
    if (cluster_size[own] < 2) continue;
    const double a = dist_sum[own] / (cluster_size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < dist_sum.size(); ++c) {
      if (c != own) b = std::min(b, dist_sum[c] / cluster_size[c]);
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(t);
}

double segment_parameter(const Eigen::VectorXd& p, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) throw ContractError("segment endpoints coincide");
  return (p - a).dot(ab) / len2;
}

std::string format_embedding_csv(const EmbeddingSet& set) {
  std::string out = "trial_id,label";
  for (std::size_t k = 0; k < set.dimension(); ++k) out += ",c" + std::to_string(k + 1);
  out += ",method\n";
  for (std::size_t t = 0; t < set.size(); ++t) {
    out += std::to_string(set.trial_ids[t]) + "," + set.labels[t];
    for (double c : set.coords[t]) out += "," + io::format_double(c);
    out += std::string(",") + to_string(set.method) + "\n";
  }
  return out;
}

void write_embedding_csv(const std::filesystem::path& path, const EmbeddingSet& set) {
  io::write_file(path, format_embedding_csv(set));
}

EmbeddingSet read_embedding_csv(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  const auto lines = io::split_lines(text);
  if (lines.empty()) throw ParseError(ParseErrorKind::kMissingColumn, 1, "empty embedding file");
  const auto header = io::split_csv(lines[0]);
  if (header.size() < 4 || header[0] != "trial_id" || header[1] != "label" || header.back() != "method") {
    throw ParseError(ParseErrorKind::kMissingColumn, 1, "header must be trial_id,label,c1..cd,method");
  }
  const std::size_t d = header.size() - 3;
  EmbeddingSet out;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (io::trim(lines[row]).empty()) continue;
    const auto cells = io::split_csv(lines[row]);
    if (cells.size() != d + 3) throw ParseError(ParseErrorKind::kMissingColumn, row + 1, "wrong column count");
    const auto id = io::parse_uint(cells[0]);
    if (!id) throw ParseError(ParseErrorKind::kNonNumeric, row + 1, "trial_id");
    std::vector<double> c(d);
    for (std::size_t k = 0; k < d; ++k) {
      const auto v = io::parse_double(cells[k + 2]);
      if (!v) throw ParseError(ParseErrorKind::kNonNumeric, row + 1, "coordinate c" + std::to_string(k + 1));
      c[k] = *v;
    }
    try {
      out.method = embedding_method_from_string(std::string(cells.back()));
    } catch (const ParameterError&) {
      throw ParseError(ParseErrorKind::kMalformed, row + 1, "unknown method");
    }
    out.trial_ids.push_back(*id);
    out.labels.emplace_back(cells[1]);
    out.coords.push_back(std::move(c));
  }
  return out;
}

}  // namespace gnsp
