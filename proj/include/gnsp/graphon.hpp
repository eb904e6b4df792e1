#pragma once

// Step graphons on [0,1]^2 and piecewise-constant signals on [0,1]. All
// arithmetic happens on exact common refinements of the partitions; nothing
// is sampled on a grid.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gnsp/sbm_graph.hpp"

namespace gnsp {

/// Partition of [0,1]: strictly increasing, first point 0, last point 1.
using Partition = std::vector<double>;

void validate_partition(const Partition& boundaries);

/// Uniform partition into `cells` intervals.
Partition uniform_partition(std::size_t cells);

/// Union of two partitions; points closer than 1e-12 are identified.
Partition merge_partitions(const Partition& a, const Partition& b);

/// Piecewise-constant function: value[i] on [boundaries[i], boundaries[i+1]).
struct StepFunction {
  Partition boundaries;
  std::vector<double> values;

  void validate() const;
  std::size_t cells() const { return values.size(); }
  double operator()(double x) const;
  /// Integral over [lo, hi] (clipped to [0,1]).
  double integral(double lo, double hi) const;
};

/// Re-expresses f on a finer partition (every point of f's partition must
/// appear in `finer`).
StepFunction refine(const StepFunction& f, const Partition& finer);

double inner_product(const StepFunction& a, const StepFunction& b);
double l2_norm(const StepFunction& f);
StepFunction linear_combination(double a, const StepFunction& f, double b, const StepFunction& g);

/// Symmetric kernel, piecewise constant on boundaries x boundaries. Values may
/// be any real numbers (differences of graphons are signed).
class StepKernel {
 public:
  StepKernel(Partition boundaries, Eigen::MatrixXd values);

  const Partition& boundaries() const { return boundaries_; }
  const Eigen::MatrixXd& values() const { return values_; }
  std::size_t cells() const { return boundaries_.size() - 1; }
  Eigen::VectorXd cell_lengths() const;

  double operator()(double x, double y) const;

  /// Same kernel on a finer partition.
  StepKernel refine(const Partition& finer) const;

 private:
  Partition boundaries_;
  Eigen::MatrixXd values_;
};

/// A step kernel whose values lie in [0,1], i.e. a graphon.
class StepGraphon : public StepKernel {
 public:
  StepGraphon(Partition boundaries, Eigen::MatrixXd values);
};

/// W^n for an adjacency matrix of size a: uniform partition into a cells,
/// value A[i][j] on I_i x I_j.
StepGraphon step_graphon_from_adjacency(const AdjacencyMatrix& adjacency);

/// The limit graphon of the block network: quarters, values C(alpha).
StepGraphon limit_graphon(double alpha);

/// a - b on the common refinement.
StepKernel difference(const StepKernel& a, const StepKernel& b);

struct GraphonEigenpair {
  double eigenvalue = 0.0;
  StepFunction eigenfunction;
};

/// Nonzero-spectrum eigenpairs of the limit kernel operator, ordered
/// 1/4, (1-2a)/4, (1-2a)/4, (1-4a)/4. Eigenfunctions are scaled to unit
/// L2([0,1]) norm: on quarter j, phi_k = 2 v_kj where v_k are the unit block
/// eigenvectors of C. (The unscaled sum of indicators has norm 1/2.) The
/// remaining spectrum is the zero eigenvalue on block-mean-free functions.
std::array<GraphonEigenpair, kNumBlocks> analytic_graphon_eigenpairs(double alpha);

/// (W f)(x) = integral of W(x,y) f(y) dy, exact, returned on the kernel's
/// partition.
StepFunction apply_kernel_operator(const StepKernel& kernel, const StepFunction& signal);

/// Full signed spectrum of the kernel operator restricted to step functions
/// on the kernel's partition (every nonzero eigenvalue of the operator is
/// among these). Sorted by eigenvalue descending; eigenfunctions unit L2.
std::vector<GraphonEigenpair> kernel_operator_eigenpairs(const StepKernel& kernel);

/// Heuristic lower bound on the infinity-to-one norm
///   sup_{|f|,|g| <= 1} | integral W(x,y) f(x) g(y) dx dy |
/// by alternating sign optimization over cellwise +-1 functions. Restart 0
/// starts from f = 1; restart r > 0 from random signs drawn from a stream
/// derived from (seed, r), so the result is nondecreasing in `restarts`.
double infty_to_one_norm_lower_bound(const StepKernel& kernel, int restarts, std::uint64_t seed);

inline constexpr int kDefaultNormRestarts = 32;

/// Line 1: boundaries; then one line per row of values.
std::string format_graphon_csv(const StepKernel& kernel);
void write_graphon_csv(const std::filesystem::path& path, const StepKernel& kernel);

}  // namespace gnsp
