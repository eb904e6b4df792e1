#include <doctest.h>

#include <cmath>

#include "gnsp/errors.hpp"
#include "gnsp/graphon.hpp"
#include "gnsp/rng.hpp"

using namespace gnsp;

namespace {

// Exact quadrature of (W f)(x) at a point for a step kernel and step function.
double apply_at(const StepKernel& w, const StepFunction& f, double x) {
  const auto fine = merge_partitions(w.boundaries(), f.boundaries);
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < fine.size(); ++j) {
    const double mid = 0.5 * (fine[j] + fine[j + 1]);
    acc += w(x, mid) * f(mid) * (fine[j + 1] - fine[j]);
  }
  return acc;
}

// Exhaustive sup over cellwise sign patterns (small kernels only).
double brute_force_cut(const StepKernel& w) {
  const auto len = w.cell_lengths();
  const auto n = static_cast<int>(w.cells());
  double best = 0.0;
  for (int fm = 0; fm < (1 << n); ++fm) {
    for (int gm = 0; gm < (1 << n); ++gm) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          s += w.values()(i, j) * len(i) * len(j) * ((fm >> i & 1) ? 1 : -1) * ((gm >> j & 1) ? 1 : -1);
      best = std::max(best, std::abs(s));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("partitions") {
  CHECK(uniform_partition(4) == Partition{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(merge_partitions({0.0, 0.5, 1.0}, {0.0, 0.25, 0.5 + 1e-14, 1.0}) == Partition{0.0, 0.25, 0.5, 1.0});
  CHECK_THROWS_AS(validate_partition({0.0, 0.5, 0.4, 1.0}), ParameterError);
  CHECK_THROWS_AS(validate_partition({0.1, 1.0}), ParameterError);
}

TEST_CASE("step functions") {
  StepFunction f{{0.0, 0.5, 1.0}, {2.0, -1.0}};
  CHECK(f(0.25) == 2.0);
  CHECK(f(0.5) == -1.0);
  CHECK(f(1.0) == -1.0);
  CHECK(f.integral(0.0, 1.0) == doctest::Approx(0.5));
  CHECK(f.integral(0.25, 0.75) == doctest::Approx(0.25));
  CHECK(l2_norm(f) == doctest::Approx(std::sqrt(2.5)));
  StepFunction g{{0.0, 0.25, 1.0}, {1.0, 1.0}};
  CHECK(inner_product(f, g) == doctest::Approx(0.5));
  const auto h = linear_combination(1.0, f, -1.0, g);
  CHECK(h(0.1) == doctest::Approx(1.0));
  CHECK(h(0.9) == doctest::Approx(-2.0));
  const auto r = refine(f, {0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(r.values == std::vector<double>{2.0, 2.0, -1.0, -1.0});
}

TEST_CASE("step graphon from adjacency") {
  AdjacencyMatrix p(2);
  p.add_edge(0, 1);
  const auto w = step_graphon_from_adjacency(p);
  CHECK(w.boundaries() == Partition{0.0, 0.5, 1.0});
  CHECK(w(0.2, 0.7) == 1.0);
  CHECK(w(0.2, 0.3) == 0.0);
  CHECK_THROWS_AS(StepGraphon({0.0, 1.0}, Eigen::MatrixXd::Constant(1, 1, 1.5)), ParameterError);
  Eigen::MatrixXd asym(2, 2);
  asym << 0, 1, 0, 0;
  CHECK_THROWS_AS(StepKernel({0.0, 0.5, 1.0}, asym), ParameterError);
}

TEST_CASE("limit graphon values") {
  const auto w = limit_graphon(0.05);
  CHECK(w(0.1, 0.1) == doctest::Approx(0.9));
  CHECK(w(0.1, 0.9) == 0.0);
  CHECK(w(0.3, 0.6) == 0.0);
  CHECK(w(0.1, 0.3) == doctest::Approx(0.05));
  CHECK(w(0.3, 0.9) == doctest::Approx(0.05));
}

TEST_CASE("analytic graphon eigenpairs") {
  for (double alpha : {0.05, 0.2, 0.45}) {
    const auto pairs = analytic_graphon_eigenpairs(alpha);
    const double expected[4] = {0.25, (1 - 2 * alpha) / 4, (1 - 2 * alpha) / 4, (1 - 4 * alpha) / 4};
    const auto w = limit_graphon(alpha);
    for (int k = 0; k < 4; ++k) {
      CHECK(pairs[k].eigenvalue == doctest::Approx(expected[k]).epsilon(1e-14));
      const auto& phi = pairs[k].eigenfunction;
      for (double x : {0.1, 0.3, 0.6, 0.9}) {
        CHECK(std::abs(apply_at(w, phi, x) - pairs[k].eigenvalue * phi(x)) < 1e-12);
      }
      const auto out = apply_kernel_operator(w, phi);
      for (double x : {0.1, 0.3, 0.6, 0.9}) CHECK(std::abs(out(x) - pairs[k].eigenvalue * phi(x)) < 1e-12);
      for (int l = 0; l < 4; ++l) {
        CHECK(std::abs(inner_product(phi, pairs[l].eigenfunction) - (k == l ? 1.0 : 0.0)) < 1e-14);
      }
    }
  }
  const auto p = analytic_graphon_eigenpairs(0.05);
  const double r2 = std::sqrt(2.0);
  CHECK(p[1].eigenfunction.values[0] == doctest::Approx(0.0));
  CHECK(p[1].eigenfunction.values[1] == doctest::Approx(r2));
  CHECK(p[1].eigenfunction.values[2] == doctest::Approx(-r2));
  CHECK(p[1].eigenfunction.values[3] == doctest::Approx(0.0));
}

TEST_CASE("kernel operator examples") {
  const auto w = limit_graphon(0.1);
  const StepFunction one{{0.0, 1.0}, {1.0}};
  const auto out = apply_kernel_operator(w, one);
  for (double v : out.values) CHECK(v == doctest::Approx(0.25));
  const StepKernel zero({0.0, 0.5, 1.0}, Eigen::MatrixXd::Zero(2, 2));
  for (double v : apply_kernel_operator(zero, one).values) CHECK(v == 0.0);
}

TEST_CASE("operator spectrum of an empirical step graphon is the adjacency spectrum over its size") {
  const auto a = sample_adjacency({0.05, 12, 2});
  const auto d = eigendecompose(a);
  const auto ops = kernel_operator_eigenpairs(step_graphon_from_adjacency(a));
  REQUIRE(ops.size() == a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(ops[k].eigenvalue == doctest::Approx(d.eigenvalues(static_cast<Eigen::Index>(k)) / 48.0).epsilon(1e-10));
    CHECK(l2_norm(ops[k].eigenfunction) == doctest::Approx(1.0));
  }
  // non-uniform partition: limit graphon refined unevenly keeps its spectrum
  const auto refined = limit_graphon(0.2).refine({0.0, 0.1, 0.25, 0.5, 0.6, 0.75, 1.0});
  const auto sp = kernel_operator_eigenpairs(refined);
  const auto an = analytic_graphon_eigenpairs(0.2);
  for (int k = 0; k < 4; ++k) CHECK(sp[k].eigenvalue == doctest::Approx(an[k].eigenvalue).epsilon(1e-12));
  for (std::size_t k = 4; k < sp.size(); ++k) CHECK(std::abs(sp[k].eigenvalue) < 1e-12);
}

TEST_CASE("infinity-to-one norm bound") {
  const StepKernel zero({0.0, 1.0}, Eigen::MatrixXd::Zero(1, 1));
  CHECK(infty_to_one_norm_lower_bound(zero, 4, 1) == 0.0);
  const StepKernel constant({0.0, 0.3, 1.0}, Eigen::MatrixXd::Constant(2, 2, 0.7));
  CHECK(infty_to_one_norm_lower_bound(constant, 4, 1) == doctest::Approx(0.7));
  Eigen::MatrixXd checker(2, 2);
  checker << 0.4, -0.4, -0.4, 0.4;
  CHECK(infty_to_one_norm_lower_bound(StepKernel({0.0, 0.5, 1.0}, checker), 4, 1) == doctest::Approx(0.4));
}

TEST_CASE("norm bound properties on random signed kernels") {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(4));
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) m(i, j) = m(j, i) = rng.uniform() * 2 - 1;
    Partition b{0.0};
    for (int i = 1; i < n; ++i) b.push_back(static_cast<double>(i) / n + 0.3 / n * (rng.uniform() - 0.5));
    b.push_back(1.0);
    const StepKernel w(b, m);
    const double exact = brute_force_cut(w);
    double prev = 0.0;
    for (int restarts : {1, 2, 8, 32}) {
      const double bound = infty_to_one_norm_lower_bound(w, restarts, 5);
      CHECK(bound >= prev - 1e-15);  // monotone in restarts
      CHECK(bound <= exact + 1e-12);  // a lower bound
      CHECK(bound <= m.cwiseAbs().maxCoeff() + 1e-12);
      prev = bound;
    }
    CHECK(prev == doctest::Approx(exact).epsilon(1e-12));  // small kernels: found exactly
  }
  // constant-sign kernel: equals its integral of |W|
  Eigen::MatrixXd pos(3, 3);
  pos << 0.2, 0.5, 0.1, 0.5, 0.9, 0.3, 0.1, 0.3, 0.4;
  const StepKernel w({0.0, 0.2, 0.7, 1.0}, pos);
  const auto len = w.cell_lengths();
  CHECK(infty_to_one_norm_lower_bound(w, 1, 0) == doctest::Approx(len.dot(pos * len)));
}

TEST_CASE("difference kernel and empirical convergence in cut distance") {
  const auto lim = limit_graphon(0.05);
  double prev = 1.0;
  for (int n : {10, 40, 160}) {
    double mean = 0.0;
    for (std::uint64_t s = 0; s < 3; ++s) {
      const auto diff = difference(step_graphon_from_adjacency(sample_adjacency({0.05, n, s})), lim);
      mean += infty_to_one_norm_lower_bound(diff, 8, s) / 3.0;
    }
    CHECK(mean < prev);
    prev = mean;
  }
}

TEST_CASE("graphon csv") {
  const auto text = format_graphon_csv(limit_graphon(0.25));
  CHECK(text.substr(0, text.find('\n')) == "0,0.25,0.5,0.75,1");
}
