#include "gnsp/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <boost/math/distributions/normal.hpp>

#include "gnsp/errors.hpp"
#include "gnsp/io.hpp"
#include "gnsp/rng.hpp"

namespace gnsp {

Eigen::VectorXd RidgeModel::scores(std::span<const double> features) const {
  if (static_cast<Eigen::Index>(features.size()) != weights.rows()) {
    throw ContractError("feature dimension " + std::to_string(features.size()) +
                        " does not match model dimension " + std::to_string(weights.rows()));
  }
  const Eigen::Map<const Eigen::VectorXd> x(features.data(), weights.rows());
  return weights.transpose() * x + intercepts;
}

RidgeModel ridge_fit(const Eigen::MatrixXd& features, const std::vector<std::string>& labels,
                     double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be nonnegative");
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ContractError("one label per feature row required");
  }
  const std::set<std::string> classes(labels.begin(), labels.end());
  if (classes.size() < 2) throw InsufficientDataError("ridge classification needs at least two classes");

  RidgeModel model;
  model.lambda = lambda;
  model.class_order.assign(classes.begin(), classes.end());
  const Eigen::Index t = features.rows();
  const Eigen::Index d = features.cols();
  const auto k = static_cast<Eigen::Index>(model.class_order.size());

  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(t, k);
  for (Eigen::Index i = 0; i < t; ++i) {
    const auto it = std::find(model.class_order.begin(), model.class_order.end(), labels[static_cast<std::size_t>(i)]);
    y(i, std::distance(model.class_order.begin(), it)) = 1.0;
  }
  const Eigen::RowVectorXd x_mean = features.colwise().mean();
  const Eigen::RowVectorXd y_mean = y.colwise().mean();
  const Eigen::MatrixXd xc = features.rowwise() - x_mean;
  const Eigen::MatrixXd yc = y.rowwise() - y_mean;

  Eigen::MatrixXd gram = xc.transpose() * xc;
  gram.diagonal().array() += lambda;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
  if (qr.rank() < d) {
    throw SingularSystemError("normal equations are singular (collinear features); use lambda > 0");
  }
  model.weights = qr.solve(xc.transpose() * yc);
  model.intercepts = (y_mean - x_mean * model.weights).transpose();
  if (!model.weights.allFinite()) throw SingularSystemError("ridge solution is not finite");
  return model;
}

std::size_t argmax_class(const Eigen::VectorXd& scores) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores(i) > scores(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
  }
  return best;
}

std::string predict(const RidgeModel& model, std::span<const double> features) {
  return model.class_order[argmax_class(model.scores(features))];
}

std::vector<std::string> predict(const RidgeModel& model, const Eigen::MatrixXd& features) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Eigen::VectorXd row = features.row(i).transpose();
    out.push_back(predict(model, std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))));
  }
  return out;
}

Interval bootstrap_mean_ci(std::span<const double> values, int resamples, std::uint64_t seed,
                           double level) {
  if (values.empty()) throw InsufficientDataError("bootstrap needs data");
  if (resamples < 1) throw ParameterError("resamples must be >= 1");
  Rng rng(seed);
  const std::size_t n = values.size();
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += values[rng.below(n)];
    m = acc / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, means.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return means[lo] + frac * (means[hi] - means[lo]);
  };
  const double tail = 0.5 * (1.0 - level);
  return {quantile(tail), quantile(1.0 - tail)};
}

namespace {

std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<std::string>& labels,
                                                       const std::vector<std::string>& classes,
                                                       int folds, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  for (std::size_t c = 0; c < classes.size(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == classes[c]) members.push_back(i);
    }
    if (members.size() < static_cast<std::size_t>(folds)) {
      throw InsufficientDataError("class " + classes[c] + " has " + std::to_string(members.size()) +
                                  " trials, fewer than " + std::to_string(folds) + " folds");
    }
    Rng rng(seed, c);
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
    for (std::size_t p = 0; p < members.size(); ++p) out[p % static_cast<std::size_t>(folds)].push_back(members[p]);
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

std::vector<int> modes_up_to(int d) {
  std::vector<int> m(static_cast<std::size_t>(d));
  std::iota(m.begin(), m.end(), 1);
  return m;
}

// Fits the embedding on `train` and returns features for train and test.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> embed_split(const LabeledDataset& data,
                                                        EmbeddingMethod method, const CvOptions& opt,
                                                        const SpectralDecomposition* decomposition,
                                                        const std::vector<std::size_t>& train,
                                                        const std::vector<std::size_t>& test) {
  std::vector<ResponseVector> tr, te;
  for (auto i : train) tr.push_back(data.responses[i]);
  for (auto i : test) te.push_back(data.responses[i]);
  switch (method) {
    case EmbeddingMethod::kGraphon: {
      if (opt.dimension > kNumBlocks) throw ParameterError("graphon embedding has at most 4 modes");
      // alpha only scales eigenvalues; eigenfunctions are alpha-independent.
      const auto pairs = analytic_graphon_eigenpairs(0.25);
      const auto modes = modes_up_to(opt.dimension);
      return {graphon_project(tr, pairs, data.block_map, opt.convention, modes).matrix(),
              graphon_project(te, pairs, data.block_map, opt.convention, modes).matrix()};
    }
    case EmbeddingMethod::kPca: {
      const auto model = pca_fit(tr, opt.dimension);
      return {model.transform(tr).matrix(), model.transform(te).matrix()};
    }
    case EmbeddingMethod::kGft: {
      if (!decomposition) throw ContractError("GFT cross-validation needs a spectral decomposition");
      const auto idx = modes_up_to(opt.dimension);
      return {gft_project(tr, *decomposition, idx).matrix(), gft_project(te, *decomposition, idx).matrix()};
    }
  }
  throw ContractError("unknown embedding method");
}

double accuracy_of(const RidgeModel& model, const Eigen::MatrixXd& x, const std::vector<std::string>& y) {
  const auto pred = predict(model, x);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += pred[i] == y[i];
  return static_cast<double>(ok) / static_cast<double>(y.size());
}

double tune_lambda(const LabeledDataset& data, EmbeddingMethod method, const CvOptions& opt,
                   const SpectralDecomposition* decomposition, const std::vector<std::size_t>& train) {
  std::vector<std::string> labels;
  for (auto i : train) labels.push_back(data.responses[i].label);
  const std::set<std::string> class_set(labels.begin(), labels.end());
  const std::vector<std::string> classes(class_set.begin(), class_set.end());
  std::size_t smallest = labels.size();
  for (const auto& c : classes) smallest = std::min<std::size_t>(smallest, std::count(labels.begin(), labels.end(), c));
  const int inner = static_cast<int>(std::max<std::size_t>(2, std::min<std::size_t>(opt.folds - 1, smallest)));
  if (smallest < 2) return opt.lambda;
  const auto folds = stratified_folds(labels, classes, inner, derive_seed(opt.seed, 0x7e57));

  double best_lambda = opt.lambda;
  double best_acc = -1.0;
  for (double lambda : opt.lambda_grid) {
    double acc = 0.0;
    for (const auto& fold : folds) {
      std::vector<std::size_t> in_tr, in_te;
      std::vector<bool> is_test(train.size(), false);
      for (auto p : fold) is_test[p] = true;
      for (std::size_t p = 0; p < train.size(); ++p) (is_test[p] ? in_te : in_tr).push_back(train[p]);
      auto [xtr, xte] = embed_split(data, method, opt, decomposition, in_tr, in_te);
      std::vector<std::string> ytr, yte;
      for (auto i : in_tr) ytr.push_back(data.responses[i].label);
      for (auto i : in_te) yte.push_back(data.responses[i].label);
      acc += accuracy_of(ridge_fit(xtr, ytr, lambda), xte, yte);
    }
    if (acc > best_acc) {
      best_acc = acc;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

}  // namespace

EvalReport cross_validated_accuracy(const LabeledDataset& data, EmbeddingMethod method,
                                    const CvOptions& opt, const SpectralDecomposition* decomposition) {
  data.validate();
  if (opt.folds < 2) throw ParameterError("need at least two folds");
  std::vector<std::string> labels;
  for (const auto& r : data.responses) labels.push_back(r.label);
  const std::set<std::string> class_set(labels.begin(), labels.end());
  if (class_set.size() < 2) throw InsufficientDataError("need at least two stimulus classes");
  const std::vector<std::string> classes(class_set.begin(), class_set.end());
  const auto folds = stratified_folds(labels, classes, opt.folds, opt.seed);

  EvalReport report;
  report.method = to_string(method);
  report.class_order = classes;
  report.n = labels.size();
  report.confusion = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(classes.size()),
                                           static_cast<Eigen::Index>(classes.size()));
  report.correct.assign(labels.size(), 0);
  for (const auto& r : data.responses) report.trial_ids.push_back(r.trial_id);

  std::vector<double> chosen_lambdas;
  for (const auto& test : folds) {
    std::vector<bool> is_test(labels.size(), false);
    for (auto i : test) is_test[i] = true;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!is_test[i]) train.push_back(i);
    }
    const double lambda = opt.tune_lambda ? tune_lambda(data, method, opt, decomposition, train) : opt.lambda;
    chosen_lambdas.push_back(lambda);
    auto [xtr, xte] = embed_split(data, method, opt, decomposition, train, test);
    std::vector<std::string> ytr;
    for (auto i : train) ytr.push_back(labels[i]);
    const auto model = ridge_fit(xtr, ytr, lambda);
    const auto pred = predict(model, xte);
    for (std::size_t p = 0; p < test.size(); ++p) {
      const std::size_t i = test[p];
      const auto truth = std::distance(classes.begin(), std::find(classes.begin(), classes.end(), labels[i]));
      const auto guess = std::distance(classes.begin(), std::find(classes.begin(), classes.end(), pred[p]));
      ++report.confusion(truth, guess);
      report.correct[i] = truth == guess;
    }
  }

  std::sort(chosen_lambdas.begin(), chosen_lambdas.end());
  report.lambda = chosen_lambdas[chosen_lambdas.size() / 2];
  const std::vector<double> correct(report.correct.begin(), report.correct.end());
  report.accuracy = std::accumulate(correct.begin(), correct.end(), 0.0) / static_cast<double>(correct.size());
  for (Eigen::Index c = 0; c < report.confusion.rows(); ++c) {
    const int total = report.confusion.row(c).sum();
    report.per_class_accuracy.push_back(total ? static_cast<double>(report.confusion(c, c)) / total : 0.0);
  }
  report.ci95 = bootstrap_mean_ci(correct, opt.bootstrap_resamples, derive_seed(opt.seed, 0xb007));
  // A percentile interval can miss the point estimate by rounding; keep it inside.
  report.ci95.lo = std::min(report.ci95.lo, report.accuracy);
  report.ci95.hi = std::max(report.ci95.hi, report.accuracy);
  return report;
}

double training_accuracy(const Eigen::MatrixXd& features, const std::vector<std::string>& labels,
                         double lambda) {
  return accuracy_of(ridge_fit(features, labels, lambda), features, labels);
}

double required_sample_size(double effect_size, double significance, double power) {
  if (!(significance > 0.0 && significance < 1.0) || !(power > 0.0 && power < 1.0)) {
    throw ParameterError("significance and power must lie in (0, 1)");
  }
  if (effect_size == 0.0) return std::numeric_limits<double>::infinity();
  const boost::math::normal_distribution<double> z;
  const double total = boost::math::quantile(z, 1.0 - significance / 2.0) + boost::math::quantile(z, power);
  const double ratio = total / std::abs(effect_size);
  return ratio * ratio;
}

double paired_power(double effect_size, double n, double significance) {
  const boost::math::normal_distribution<double> z;
  const double crit = boost::math::quantile(z, 1.0 - significance / 2.0);
  return boost::math::cdf(z, std::abs(effect_size) * std::sqrt(n) - crit);
}

PairedStats paired_difference_stats(std::span<const double> a, std::span<const double> b, int resamples,
                                    std::uint64_t seed) {
  if (a.size() != b.size()) throw ContractError("paired vectors differ in length");
  if (a.size() < 2) throw InsufficientDataError("paired statistics need at least two pairs");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const double n = static_cast<double>(diff.size());
  const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / (n - 1.0));

  PairedStats out;
  out.mean_difference = mean;
  if (sd == 0.0) {
    if (mean != 0.0) {
      throw ParameterError("paired differences have zero variance and nonzero mean; effect size undefined");
    }
    out.effect_size = 0.0;
  } else {
    out.effect_size = mean / sd;
  }
  out.required_n = required_sample_size(out.effect_size);
  out.diff_ci95 = bootstrap_mean_ci(diff, resamples, seed);
  return out;
}

std::vector<std::pair<std::uint64_t, int>> read_correctness_csv(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  const auto lines = io::split_lines(text);
  if (lines.empty() || io::split_csv(lines[0]) != std::vector<std::string_view>{"trial_id", "correct"}) {
    throw ParseError(ParseErrorKind::kMissingColumn, 1, "header must be 'trial_id,correct'");
  }
  std::vector<std::pair<std::uint64_t, int>> out;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (io::trim(lines[row]).empty()) continue;
    const auto cells = io::split_csv(lines[row]);
    if (cells.size() != 2) throw ParseError(ParseErrorKind::kMissingColumn, row + 1, "expected 2 columns");
    const auto id = io::parse_uint(cells[0]);
    const auto ok = io::parse_int(cells[1]);
    if (!id || !ok) throw ParseError(ParseErrorKind::kNonNumeric, row + 1, "non-integer cell");
    if (*ok != 0 && *ok != 1) throw ParseError(ParseErrorKind::kMalformed, row + 1, "correct must be 0 or 1");
    out.emplace_back(*id, static_cast<int>(*ok));
  }
  return out;
}

std::string format_correctness_csv(const EvalReport& report) {
  std::string out = "trial_id,correct\n";
  for (std::size_t i = 0; i < report.correct.size(); ++i) {
    out += std::to_string(report.trial_ids[i]) + "," + std::to_string(report.correct[i]) + "\n";
  }
  return out;
}

std::string format_report(const EvalReport& r, const std::optional<PairedStats>& paired) {
  using io::format_double;
  std::string out = "key,value\n";
  out += "method," + r.method + "\n";
  out += "n," + std::to_string(r.n) + "\n";
  out += "lambda," + format_double(r.lambda) + "\n";
  out += "accuracy," + format_double(r.accuracy) + "\n";
  out += "ci95_lo," + format_double(r.ci95.lo) + "\n";
  out += "ci95_hi," + format_double(r.ci95.hi) + "\n";
  for (std::size_t c = 0; c < r.class_order.size(); ++c) {
    out += "accuracy_" + r.class_order[c] + "," + format_double(r.per_class_accuracy[c]) + "\n";
  }
  for (std::size_t i = 0; i < r.class_order.size(); ++i) {
    for (std::size_t j = 0; j < r.class_order.size(); ++j) {
      out += "confusion_" + r.class_order[i] + "_as_" + r.class_order[j] + "," +
             std::to_string(r.confusion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) + "\n";
    }
  }
  if (paired) {
    out += "paired_mean_difference," + format_double(paired->mean_difference) + "\n";
    out += "paired_diff_ci95_lo," + format_double(paired->diff_ci95.lo) + "\n";
    out += "paired_diff_ci95_hi," + format_double(paired->diff_ci95.hi) + "\n";
    out += "effect_size," + format_double(paired->effect_size) + "\n";
    out += "required_n," + format_double(paired->required_n) + "\n";
  }
  return out;
}

void write_report(const std::filesystem::path& path, const EvalReport& report,
                  const std::optional<PairedStats>& paired) {
  io::write_file(path, format_report(report, paired));
}

}  // namespace gnsp
