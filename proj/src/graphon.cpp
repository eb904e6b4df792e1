#include "gnsp/graphon.hpp"

#include <algorithm>
#include <cmath>

#include "gnsp/errors.hpp"
#include "gnsp/io.hpp"
#include "gnsp/rng.hpp"

namespace gnsp {
namespace {

constexpr double kBoundaryTol = 1e-12;

// Index of the cell containing x (right-open cells, last cell closed at 1).
std::size_t locate(const Partition& p, double x) {
  if (x <= p.front()) return 0;
  if (x >= p.back()) return p.size() - 2;
  auto it = std::upper_bound(p.begin(), p.end(), x);
  return static_cast<std::size_t>(std::distance(p.begin(), it)) - 1;
}

// For each cell of `finer`, the index of the coarse cell that contains it.
std::vector<std::size_t> coarse_index(const Partition& coarse, const Partition& finer) {
  std::vector<std::size_t> out(finer.size() - 1);
  std::size_t c = 0;
  for (std::size_t i = 0; i + 1 < finer.size(); ++i) {
    const double mid = 0.5 * (finer[i] + finer[i + 1]);
    while (c + 2 < coarse.size() && coarse[c + 1] <= mid) ++c;
    if (finer[i] < coarse[c] - kBoundaryTol || finer[i + 1] > coarse[c + 1] + kBoundaryTol) {
      throw ContractError("partition is not a refinement");
    }
    out[i] = c;
  }
  return out;
}

}  // namespace

void validate_partition(const Partition& p) {
  if (p.size() < 2) throw ParameterError("partition needs at least two points");
  if (p.front() != 0.0 || p.back() != 1.0) throw ParameterError("partition must span [0,1]");
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (!(p[i] > p[i - 1])) throw ParameterError("partition must be strictly increasing");
  }
}

Partition uniform_partition(std::size_t cells) {
  if (cells == 0) throw ParameterError("partition needs at least one cell");
  Partition p(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) p[i] = static_cast<double>(i) / static_cast<double>(cells);
  p.back() = 1.0;
  return p;
}

Partition merge_partitions(const Partition& a, const Partition& b) {
  Partition all;
  all.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(all));
  Partition out;
  for (double x : all) {
    if (out.empty() || x - out.back() > kBoundaryTol) out.push_back(x);
  }
  out.front() = 0.0;
  out.back() = 1.0;
  return out;
}

void StepFunction::validate() const {
  validate_partition(boundaries);
  if (values.size() + 1 != boundaries.size()) {
    throw ParameterError("step function needs one value per cell");
  }
}

double StepFunction::operator()(double x) const { return values[locate(boundaries, x)]; }

double StepFunction::integral(double lo, double hi) const {
  lo = std::max(lo, 0.0);
  hi = std::min(hi, 1.0);
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double overlap = std::min(hi, boundaries[i + 1]) - std::max(lo, boundaries[i]);
    if (overlap > 0.0) total += overlap * values[i];
  }
  return total;
}

StepFunction refine(const StepFunction& f, const Partition& finer) {
  const auto idx = coarse_index(f.boundaries, finer);
  StepFunction out{finer, std::vector<double>(idx.size())};
  for (std::size_t i = 0; i < idx.size(); ++i) out.values[i] = f.values[idx[i]];
  return out;
}

double inner_product(const StepFunction& a, const StepFunction& b) {
  const Partition common = merge_partitions(a.boundaries, b.boundaries);
  const auto ra = refine(a, common);
  const auto rb = refine(b, common);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < common.size(); ++i) {
    total += (common[i + 1] - common[i]) * ra.values[i] * rb.values[i];
  }
  return total;
}

double l2_norm(const StepFunction& f) { return std::sqrt(inner_product(f, f)); }

StepFunction linear_combination(double a, const StepFunction& f, double b, const StepFunction& g) {
  const Partition common = merge_partitions(f.boundaries, g.boundaries);
  auto rf = refine(f, common);
  const auto rg = refine(g, common);
  for (std::size_t i = 0; i < rf.values.size(); ++i) rf.values[i] = a * rf.values[i] + b * rg.values[i];
  return rf;
}

StepKernel::StepKernel(Partition boundaries, Eigen::MatrixXd values)
    : boundaries_(std::move(boundaries)), values_(std::move(values)) {
  validate_partition(boundaries_);
  const auto m = static_cast<Eigen::Index>(boundaries_.size() - 1);
  if (values_.rows() != m || values_.cols() != m) {
    throw ParameterError("kernel values must be an m x m matrix for m cells");
  }
  if (!(values_.array() == values_.transpose().array()).all()) {
    throw ParameterError("kernel values must be symmetric");
  }
}

Eigen::VectorXd StepKernel::cell_lengths() const {
  Eigen::VectorXd w(static_cast<Eigen::Index>(cells()));
  for (std::size_t i = 0; i < cells(); ++i) w(static_cast<Eigen::Index>(i)) = boundaries_[i + 1] - boundaries_[i];
  return w;
}

double StepKernel::operator()(double x, double y) const {
  return values_(static_cast<Eigen::Index>(locate(boundaries_, x)),
                 static_cast<Eigen::Index>(locate(boundaries_, y)));
}

StepKernel StepKernel::refine(const Partition& finer) const {
  const auto idx = coarse_index(boundaries_, finer);
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd v(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      v(i, j) = values_(static_cast<Eigen::Index>(idx[i]), static_cast<Eigen::Index>(idx[j]));
    }
  }
  return StepKernel(finer, std::move(v));
}

StepGraphon::StepGraphon(Partition boundaries, Eigen::MatrixXd values)
    : StepKernel(std::move(boundaries), std::move(values)) {
  if ((this->values().array() < 0.0).any() || (this->values().array() > 1.0).any()) {
    throw ParameterError("graphon values must lie in [0,1]");
  }
}

StepGraphon step_graphon_from_adjacency(const AdjacencyMatrix& adjacency) {
  if (adjacency.size() == 0) throw ParameterError("empty adjacency matrix");
  return StepGraphon(uniform_partition(adjacency.size()), adjacency.to_dense());
}

StepGraphon limit_graphon(double alpha) {
  const auto c = build_block_probability_matrix(alpha);
  Eigen::MatrixXd v(kNumBlocks, kNumBlocks);
  for (int i = 0; i < kNumBlocks; ++i) {
    for (int j = 0; j < kNumBlocks; ++j) v(i, j) = c.entries[i][j];
  }
  return StepGraphon(uniform_partition(kNumBlocks), std::move(v));
}

StepKernel difference(const StepKernel& a, const StepKernel& b) {
  const Partition common = merge_partitions(a.boundaries(), b.boundaries());
  const auto ra = a.refine(common);
  const auto rb = b.refine(common);
  return StepKernel(common, ra.values() - rb.values());
}

std::array<GraphonEigenpair, kNumBlocks> analytic_graphon_eigenpairs(double alpha) {
  const auto block = analytic_block_eigenpairs(alpha);
  std::array<GraphonEigenpair, kNumBlocks> out;
  for (int k = 0; k < kNumBlocks; ++k) {
    out[k].eigenvalue = block[k].eigenvalue / kNumBlocks;
    out[k].eigenfunction.boundaries = uniform_partition(kNumBlocks);
    out[k].eigenfunction.values.resize(kNumBlocks);
    for (int j = 0; j < kNumBlocks; ++j) out[k].eigenfunction.values[j] = 2.0 * block[k].vector[j];
  }
  return out;
}

StepFunction apply_kernel_operator(const StepKernel& kernel, const StepFunction& signal) {
  signal.validate();
  const auto& p = kernel.boundaries();
  const std::size_t m = kernel.cells();
  std::vector<double> mass(m);
  for (std::size_t j = 0; j < m; ++j) mass[j] = signal.integral(p[j], p[j + 1]);
  StepFunction out{p, std::vector<double>(m, 0.0)};
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      acc += kernel.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * mass[j];
    }
    out.values[i] = acc;
  }
  return out;
}

std::vector<GraphonEigenpair> kernel_operator_eigenpairs(const StepKernel& kernel) {
  // On step functions over cells of length w, the operator acts as W D with
  // D = diag(w); it is similar to the symmetric D^1/2 W D^1/2.
  const Eigen::VectorXd w = kernel.cell_lengths();
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd sym = sw.asDiagonal() * kernel.values() * sw.asDiagonal();
  const Eigen::MatrixXd symmetric = 0.5 * (sym + sym.transpose());
  const auto d = eigendecompose(symmetric);
  std::vector<GraphonEigenpair> out(static_cast<std::size_t>(d.eigenvalues.size()));
  for (Eigen::Index k = 0; k < d.eigenvalues.size(); ++k) {
    auto& pair = out[static_cast<std::size_t>(k)];
    pair.eigenvalue = d.eigenvalues(k);
    pair.eigenfunction.boundaries = kernel.boundaries();
    pair.eigenfunction.values.resize(kernel.cells());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      pair.eigenfunction.values[static_cast<std::size_t>(i)] = d.eigenvectors(i, k) / sw(i);
    }
  }
  return out;
}

double infty_to_one_norm_lower_bound(const StepKernel& kernel, int restarts, std::uint64_t seed) {
  if (restarts < 1) throw ParameterError("restarts must be >= 1");
  const Eigen::VectorXd w = kernel.cell_lengths();
  const Eigen::MatrixXd m = w.asDiagonal() * kernel.values() * w.asDiagonal();
  const Eigen::Index cells = m.rows();
  auto sign = [](double x) { return x >= 0.0 ? 1.0 : -1.0; };

  double best = 0.0;
  Eigen::VectorXd f(cells), g(cells);
  for (int r = 0; r < restarts; ++r) {
    if (r == 0) {
      f.setOnes();
    } else {
      Rng rng(seed, static_cast<std::uint64_t>(r));
      for (Eigen::Index i = 0; i < cells; ++i) f(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    }
    double value = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 1000; ++iter) {
      const Eigen::VectorXd mf = m.transpose() * f;
      for (Eigen::Index j = 0; j < cells; ++j) g(j) = sign(mf(j));
      const Eigen::VectorXd mg = m * g;
      for (Eigen::Index i = 0; i < cells; ++i) f(i) = sign(mg(i));
      const double next = f.dot(m * g);
      if (next <= value) break;
      value = next;
    }
    best = std::max(best, std::abs(value));
  }
  return best;
}

std::string format_graphon_csv(const StepKernel& kernel) {
  std::string out;
  const auto& p = kernel.boundaries();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += ',';
    out += io::format_double(p[i]);
  }
  out += '\n';
  const auto& v = kernel.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      if (j) out += ',';
      out += io::format_double(v(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_graphon_csv(const std::filesystem::path& path, const StepKernel& kernel) {
  io::write_file(path, format_graphon_csv(kernel));
}

}  // namespace gnsp
