#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "gnsp/rng.hpp"
#include "gnsp/simd.hpp"

using namespace gnsp;
using namespace gnsp::simd;

namespace {

struct Neurons {
  std::vector<double> v, g, adapt, resource, refr, arrivals, drive, release;

  explicit Neurons(std::size_t n, std::uint64_t seed)
      : v(n), g(n), adapt(n), resource(n), refr(n), arrivals(n), drive(n), release(n) {
    Rng r(seed);
    for (std::size_t i = 0; i < n; ++i) {
      v[i] = -75.0 + 25.0 * r.uniform();
      g[i] = 1e-3 * r.uniform();
      adapt[i] = 1e-4 * r.uniform();
      resource[i] = r.uniform();
      refr[i] = r.uniform() < 0.2 ? 0.1 * static_cast<double>(r.below(20)) : 0.0;
    }
  }

  LifState state() { return {v, g, adapt, resource, refr}; }

  void perturb(Rng& r) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      arrivals[i] = r.uniform() < 0.3 ? 2e-4 * r.uniform() : 0.0;
      drive[i] = r.uniform() < 0.5 ? 40.0 * r.uniform() : 0.0;
    }
  }
};

LifStepConstants constants() {
  LifStepConstants c{};
  c.dt_over_tau_mem = 0.1 / 20.0;
  c.e_leak = -74.0;
  c.e_syn = 0.0;
  c.e_adapt = -80.0;
  c.r_in = 4e4;
  c.v_threshold = -54.0;
  c.v_reset = -60.0;
  c.g_decay = 1.0 - 0.1 / 5.0;
  c.adapt_decay = 1.0 - 0.1 / 80.0;
  c.dt_over_tau_r = 0.1 / 2e4;
  c.beta = 0.8;
  c.adapt_increment = 1e-5;
  c.refractory = 2.0;
  c.dt = 0.1;
  return c;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<const Kernels*> vector_backends() {
  std::vector<const Kernels*> out;
  for (auto b : {Backend::kAvx2, Backend::kNeon}) {
    if (auto* k = kernels_for(b)) out.push_back(k);
  }
  return out;
}

}  // namespace

TEST_CASE("scalar backend is always available") {
  CHECK(kernels_for(Backend::kScalar) == &scalar_kernels());
  CHECK(active_kernels().lif_step != nullptr);
  MESSAGE("active backend: " << to_string(active_kernels().backend));
}

TEST_CASE("vector lif_step is bit-identical to the scalar reference") {
  const auto backends = vector_backends();
  if (backends.empty()) MESSAGE("no vector backend on this machine; comparing scalar with itself");
  const auto c = constants();
  // odd sizes exercise the scalar tails
  for (std::size_t n : {1u, 3u, 4u, 5u, 17u, 400u}) {
    for (const Kernels* k : backends) {
      Neurons ref(n, 11 + n), vec(n, 11 + n);
      Rng r1(5), r2(5);
      for (int step = 0; step < 500; ++step) {
        ref.perturb(r1);
        vec.perturb(r2);
        scalar_kernels().lif_step(c, ref.state(), ref.arrivals, ref.drive, ref.release);
        k->lif_step(c, vec.state(), vec.arrivals, vec.drive, vec.release);
        REQUIRE(bit_equal(ref.v, vec.v));
        REQUIRE(bit_equal(ref.g, vec.g));
        REQUIRE(bit_equal(ref.adapt, vec.adapt));
        REQUIRE(bit_equal(ref.resource, vec.resource));
        REQUIRE(bit_equal(ref.refr, vec.refr));
        REQUIRE(bit_equal(ref.release, vec.release));
        REQUIRE(bit_equal(ref.arrivals, vec.arrivals));
      }
    }
  }
}

TEST_CASE("vector reductions match the scalar reference to rounding") {
  Rng r(3);
  for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 33u, 1000u}) {
    std::vector<double> a(n), b(n);
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = r.uniform() - 0.5;
      b[i] = r.uniform() - 0.5;
      abs_sum += std::abs(a[i] * b[i]) + std::abs(a[i]);
    }
    const double dot = scalar_kernels().dot(a, b);
    const double sum = scalar_kernels().sum(a);
    for (const Kernels* k : vector_backends()) {
      CHECK(std::abs(k->dot(a, b) - dot) <= 1e-14 * (abs_sum + 1.0));
      CHECK(std::abs(k->sum(a) - sum) <= 1e-14 * (abs_sum + 1.0));
    }
  }
}

TEST_CASE("scalar lif_step single neuron semantics") {
  auto c = constants();
  c.adapt_increment = 0.0;
  Neurons s(1, 1);
  s.v = {-54.01};
  s.g = {0.0};
  s.adapt = {0.0};
  s.resource = {1.0};
  s.refr = {0.0};
  s.arrivals = {0.0};
  s.drive = {30.0};
  scalar_kernels().lif_step(c, s.state(), s.arrivals, s.drive, s.release);
  // crosses threshold: reset, refractory, release R and depress it by beta
  CHECK(s.v[0] == -60.0);
  CHECK(s.refr[0] == 2.0);
  CHECK(s.release[0] > 0.0);
  CHECK(s.resource[0] == doctest::Approx(s.release[0] * 0.8).epsilon(1e-15));
  // refractory: clamped at reset whatever the drive
  for (int i = 0; i < 19; ++i) {
    scalar_kernels().lif_step(c, s.state(), s.arrivals, s.drive, s.release);
    CHECK(s.v[0] == -60.0);
    CHECK(s.release[0] == 0.0);
  }
  // arrivals are consumed
  s.arrivals = {1e-3};
  scalar_kernels().lif_step(c, s.state(), s.arrivals, s.drive, s.release);
  CHECK(s.arrivals[0] == 0.0);
}
