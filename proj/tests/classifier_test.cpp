#include <doctest.h>

#include <cmath>

#include "gnsp/classifier.hpp"
#include "gnsp/errors.hpp"
#include "gnsp/io.hpp"
#include "gnsp/rng.hpp"

using namespace gnsp;

namespace {

// Standard normal quantiles, tabulated.
constexpr double kZ975 = 1.959963984540054;
constexpr double kZ80 = 0.8416212335729143;

double gaussian(Rng& r) {
  // Box-Muller
  const double u = 1.0 - r.uniform();
  const double v = r.uniform();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * 3.141592653589793 * v);
}

// Responses whose block sums sit at fixed fractions per class, plus noise.
LabeledDataset block_dataset(int trials_per_class, double noise, std::uint64_t seed) {
  const int n = 5;
  const std::vector<std::vector<double>> profiles{{1, 0.2, 0.2, 0.1}, {0.2, 1, 0.1, 0.2}, {0.2, 0.1, 0.2, 1}};
  LabeledDataset ds;
  ds.block_map = sbm_block_map(n);
  Rng r(seed);
  std::uint64_t id = 0;
  for (std::size_t c = 0; c < profiles.size(); ++c) {
    for (int t = 0; t < trials_per_class; ++t) {
      ResponseVector v;
      v.values.resize(4 * n);
      for (int i = 0; i < 4 * n; ++i) v.values[i] = std::max(0.0, profiles[c][i / n] + noise * gaussian(r));
      normalize_l2(v.values);
      v.label = "s" + std::to_string(c + 1);
      v.trial_id = id++;
      ds.responses.push_back(v);
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("ridge fit on two points per side") {
  Eigen::MatrixXd x(4, 1);
  x << -1, -1.2, 1, 1.2;
  const std::vector<std::string> y{"s1", "s1", "s2", "s2"};
  const auto m = ridge_fit(x, y, 0.0);
  CHECK(training_accuracy(x, y, 0.0) == 1.0);
  // symmetric data: boundary at 0
  const auto s0 = m.scores(std::vector<double>{0.0});
  CHECK(s0(0) == doctest::Approx(s0(1)));
  CHECK(predict(m, std::vector<double>{-1.0}) == "s1");
  CHECK(predict(m, std::vector<double>{0.3}) == "s2");
}

TEST_CASE("ridge matches the normal equations") {
  Rng r(2);
  const int t = 30, d = 3;
  Eigen::MatrixXd x(t, d);
  std::vector<std::string> y;
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = r.uniform();
    y.push_back(i % 3 == 0 ? "a" : (i % 3 == 1 ? "b" : "c"));
  }
  const double lambda = 0.7;
  const auto m = ridge_fit(x, y, lambda);
  // augmented system with an unpenalized intercept column, solved by LDLT
  Eigen::MatrixXd xa(t, d + 1);
  xa << x, Eigen::VectorXd::Ones(t);
  Eigen::MatrixXd yy = Eigen::MatrixXd::Zero(t, 3);
  for (int i = 0; i < t; ++i) yy(i, y[i][0] - 'a') = 1.0;
  Eigen::MatrixXd pen = Eigen::MatrixXd::Identity(d + 1, d + 1) * lambda;
  pen(d, d) = 0.0;
  const Eigen::MatrixXd w = (xa.transpose() * xa + pen).ldlt().solve(xa.transpose() * yy);
  CHECK((m.weights - w.topRows(d)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((m.intercepts - w.row(d).transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ridge edge cases") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 2, 2, 4, 3, 6, 4, 8;  // collinear
  const std::vector<std::string> y{"s1", "s1", "s2", "s2"};
  CHECK_THROWS_AS(ridge_fit(x, y, 0.0), SingularSystemError);
  CHECK_NOTHROW(ridge_fit(x, y, 0.1));
  CHECK_THROWS_AS(ridge_fit(x, {"a", "a", "a", "a"}, 1.0), InsufficientDataError);
  CHECK_THROWS_AS(ridge_fit(x, y, -1.0), ParameterError);

  // huge penalty: weights vanish and the majority class wins through the intercept
  Eigen::MatrixXd z(5, 1);
  z << -2, -1, 0, 1, 2;
  const auto m = ridge_fit(z, {"b", "b", "b", "a", "a"}, 1e12);
  CHECK(m.weights.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(predict(m, std::vector<double>{2.0}) == "b");
}

TEST_CASE("argmax and ties") {
  CHECK(argmax_class(Eigen::Vector3d(0.9, 0.1, 0.0)) == 0);
  CHECK(argmax_class(Eigen::Vector3d(0.1, 0.5, 0.5)) == 1);
}

TEST_CASE("well separated blobs are classified almost perfectly") {
  Rng r(21);
  Eigen::MatrixXd x(300, 2);
  std::vector<std::string> y;
  const double centers[3][2] = {{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}};
  for (int i = 0; i < 300; ++i) {
    const int c = i % 3;
    x(i, 0) = centers[c][0] + 0.05 * gaussian(r);
    x(i, 1) = centers[c][1] + 0.05 * gaussian(r);
    y.push_back("c" + std::to_string(c));
  }
  CHECK(training_accuracy(x, y, 1e-3) >= 0.99);
}

TEST_CASE("bootstrap interval") {
  const std::vector<double> ones(20, 1.0);
  const auto ci = bootstrap_mean_ci(ones, 1000, 1);
  CHECK(ci.lo == 1.0);
  CHECK(ci.hi == 1.0);
  // coverage of the mean of Bernoulli(0.7) samples, n = 40
  Rng r(5);
  int covered = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<double> v(40);
    for (auto& x : v) x = r.uniform() < 0.7 ? 1.0 : 0.0;
    const auto c = bootstrap_mean_ci(v, 2000, rep);
    covered += c.lo <= 0.7 && 0.7 <= c.hi;
  }
  // nominal 95%; percentile intervals undercover slightly at n = 40
  CHECK(covered >= static_cast<int>(0.88 * reps));
  CHECK(bootstrap_mean_ci(std::vector<double>{0.0, 1.0}, 500, 9).lo ==
        bootstrap_mean_ci(std::vector<double>{0.0, 1.0}, 500, 9).lo);
}

TEST_CASE("required sample size and power") {
  const double oracle = std::pow((kZ975 + kZ80) / 0.213, 2);
  CHECK(required_sample_size(0.213) == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(std::abs(required_sample_size(0.213) - 173.0) <= 3.0);
  CHECK(required_sample_size(-0.213) == doctest::Approx(oracle));
  CHECK(std::isinf(required_sample_size(0.0)));
  CHECK(paired_power(0.213, oracle) == doctest::Approx(0.80).epsilon(1e-9));
  CHECK(paired_power(0.5, 100) > paired_power(0.5, 20));
  CHECK_THROWS_AS(required_sample_size(0.2, 1.5), ParameterError);
}

TEST_CASE("paired difference statistics") {
  const std::vector<double> a{1, 0, 1, 1, 0, 1};
  const auto same = paired_difference_stats(a, a, 500, 1);
  CHECK(same.mean_difference == 0.0);
  CHECK(same.diff_ci95.lo == 0.0);
  CHECK(same.diff_ci95.hi == 0.0);
  CHECK(same.effect_size == 0.0);
  CHECK(std::isinf(same.required_n));

  const std::vector<double> ones(10, 1.0), zeros(10, 0.0);
  CHECK_THROWS_AS(paired_difference_stats(ones, zeros), ParameterError);

  const std::vector<double> b{0, 0, 1, 0, 0, 1};
  const auto s = paired_difference_stats(a, b, 2000, 3);
  // differences 1,0,0,1,0,0: mean 1/3, sd sqrt(4/15)
  CHECK(s.mean_difference == doctest::Approx(1.0 / 3.0));
  CHECK(s.effect_size == doctest::Approx((1.0 / 3.0) / std::sqrt(4.0 / 15.0)));
  CHECK(s.diff_ci95.lo <= s.mean_difference);
  CHECK(s.diff_ci95.hi >= s.mean_difference);
  CHECK_THROWS_AS(paired_difference_stats(a, std::vector<double>{1.0}), ContractError);
}

TEST_CASE("cross-validated accuracy") {
  const auto ds = block_dataset(14, 0.05, 3);
  CvOptions opt;
  opt.seed = 4;
  opt.bootstrap_resamples = 500;
  for (auto method : {EmbeddingMethod::kGraphon, EmbeddingMethod::kPca}) {
    const auto rep = cross_validated_accuracy(ds, method, opt);
    CHECK(rep.accuracy == 1.0);
    CHECK(rep.ci95.lo == 1.0);
    CHECK(rep.ci95.hi == 1.0);
    CHECK(rep.n == 42);
    CHECK(rep.confusion.sum() == 42);
    CHECK(rep.class_order == std::vector<std::string>{"s1", "s2", "s3"});
    // fold assignment is seeded
    CHECK(cross_validated_accuracy(ds, method, opt).correct == rep.correct);
  }

  // permuted labels: chance level
  auto shuffled = block_dataset(30, 0.05, 6);
  Rng r(7);
  for (std::size_t i = shuffled.responses.size(); i > 1; --i) {
    std::swap(shuffled.responses[i - 1].label, shuffled.responses[r.below(i)].label);
  }
  const auto null = cross_validated_accuracy(shuffled, EmbeddingMethod::kGraphon, opt);
  CHECK(std::abs(null.accuracy - 1.0 / 3.0) < 0.2);

  opt.tune_lambda = true;
  CHECK(cross_validated_accuracy(ds, EmbeddingMethod::kGraphon, opt).accuracy == 1.0);

  auto tiny = block_dataset(3, 0.05, 1);
  opt.tune_lambda = false;
  CHECK_THROWS_AS(cross_validated_accuracy(tiny, EmbeddingMethod::kGraphon, opt), InsufficientDataError);
  CHECK_THROWS_AS(cross_validated_accuracy(ds, EmbeddingMethod::kGft, opt), ContractError);
}

TEST_CASE("correctness csv and report") {
  EvalReport r;
  r.method = "graphon";
  r.accuracy = 0.5;
  r.class_order = {"s1", "s2"};
  r.per_class_accuracy = {1.0, 0.0};
  r.confusion = Eigen::MatrixXi::Zero(2, 2);
  r.trial_ids = {3, 8};
  r.correct = {1, 0};
  const auto dir = std::filesystem::temp_directory_path() / "gnsp_classifier_test";
  io::write_file(dir / "c.csv", format_correctness_csv(r));
  const auto back = read_correctness_csv(dir / "c.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0] == std::pair<std::uint64_t, int>{3, 1});
  CHECK(back[1] == std::pair<std::uint64_t, int>{8, 0});
  io::write_file(dir / "c.csv", "trial_id,correct\n1,2\n");
  CHECK_THROWS_AS(read_correctness_csv(dir / "c.csv"), ParseError);
  const auto text = format_report(r);
  CHECK(text.find("accuracy,0.5\n") != std::string::npos);
}
