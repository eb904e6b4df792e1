#pragma once

// Ridge-regression stimulus classification, stratified cross-validation,
// bootstrap intervals and paired effect-size / sample-size estimates.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gnsp/embedding.hpp"
#include "gnsp/protocols.hpp"

namespace gnsp {

/// One-vs-rest ridge regression on one-hot targets. The intercept is not
/// penalized.
struct RidgeModel {
  Eigen::MatrixXd weights;     // d x K
  Eigen::VectorXd intercepts;  // K
  double lambda = 1.0;
  std::vector<std::string> class_order;

  Eigen::VectorXd scores(std::span<const double> features) const;
};

/// Classes are ordered lexicographically. Throws SingularSystemError if the
/// normal equations are singular (only possible for lambda = 0).
RidgeModel ridge_fit(const Eigen::MatrixXd& features, const std::vector<std::string>& labels,
                     double lambda);

/// Argmax of class scores; ties go to the earliest class in class_order.
std::size_t argmax_class(const Eigen::VectorXd& scores);
std::string predict(const RidgeModel& model, std::span<const double> features);
std::vector<std::string> predict(const RidgeModel& model, const Eigen::MatrixXd& features);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile bootstrap interval for the mean of `values`.
Interval bootstrap_mean_ci(std::span<const double> values, int resamples, std::uint64_t seed,
                           double level = 0.95);

struct EvalReport {
  std::string method;
  double accuracy = 0.0;
  std::vector<std::string> class_order;
  std::vector<double> per_class_accuracy;
  Eigen::MatrixXi confusion;  // rows: true class, cols: predicted
  Interval ci95;
  std::size_t n = 0;
  double lambda = 1.0;
  /// Pooled out-of-fold correctness, aligned with trial_ids.
  std::vector<std::uint64_t> trial_ids;
  std::vector<int> correct;
};

struct CvOptions {
  int folds = 7;
  std::uint64_t seed = 0;
  double lambda = 1.0;
  bool tune_lambda = false;
  std::vector<double> lambda_grid{0.01, 0.1, 1.0, 10.0};
  int bootstrap_resamples = 10000;
  int dimension = 4;
  CoordinateConvention convention = CoordinateConvention::kPaperBlockSum;
};

/// Stratified k-fold accuracy. The embedding is fit on the training folds
/// only (PCA); graphon coordinates use modes 1..dimension; GFT uses
/// eigenvectors 1..dimension of `decomposition` (required for kGft).
EvalReport cross_validated_accuracy(const LabeledDataset& dataset, EmbeddingMethod method,
                                    const CvOptions& options,
                                    const SpectralDecomposition* decomposition = nullptr);

/// Training-set accuracy of a ridge classifier on fixed features.
double training_accuracy(const Eigen::MatrixXd& features, const std::vector<std::string>& labels,
                         double lambda);

struct PairedStats {
  double mean_difference = 0.0;
  Interval diff_ci95;
  double effect_size = 0.0;  // Cohen's d of the paired differences
  double required_n = 0.0;   // for 80% power at two-sided 0.05; +inf when d = 0
};

/// Normal-approximation sample size n = ((z_{1-a/2} + z_{power}) / d)^2.
double required_sample_size(double effect_size, double significance = 0.05, double power = 0.80);

/// Power of the two-sided paired z-test with n samples.
double paired_power(double effect_size, double n, double significance = 0.05);

/// Differences a_i - b_i of paired correctness values. Zero-variance
/// differences with nonzero mean make d undefined (ParameterError);
/// identical vectors give d = 0.
PairedStats paired_difference_stats(std::span<const double> a, std::span<const double> b,
                                    int resamples = 10000, std::uint64_t seed = 0);

/// trial_id,correct CSV (correct in {0,1}).
std::vector<std::pair<std::uint64_t, int>> read_correctness_csv(const std::filesystem::path& path);
std::string format_correctness_csv(const EvalReport& report);

std::string format_report(const EvalReport& report, const std::optional<PairedStats>& paired = {});
void write_report(const std::filesystem::path& path, const EvalReport& report,
                  const std::optional<PairedStats>& paired = {});

}  // namespace gnsp
