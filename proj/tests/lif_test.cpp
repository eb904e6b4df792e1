#include <doctest.h>

#include <cmath>

#include "gnsp/errors.hpp"
#include "gnsp/lif.hpp"
#include "gnsp/protocols.hpp"

using namespace gnsp;

namespace {

SynapseParams quiet_synapse() {
  SynapseParams s;
  s.poisson_rate = 0.0;
  s.zero_degree = ZeroDegreePolicy::kIsolate;
  return s;
}

StimulusPulse constant_current(std::vector<std::uint32_t> targets, double amplitude, double until) {
  StimulusPulse p;
  p.targets = std::move(targets);
  p.onset = 0.0;
  p.duration = until;
  p.amplitude = amplitude;
  return p;
}

std::size_t window_count(const SpikeRaster& raster, double onset) {
  std::size_t n = 0;
  for (const auto& s : raster.spikes)
    for (double t : s) n += t >= onset && t < onset + 100.0;
  return n;
}

}  // namespace

TEST_CASE("closed-form spike time of a driven isolated neuron") {
  // R_in I = 30 mV with E_L = -74, V_th = -54: t* = tau ln(30 / 10)
  const AdjacencyMatrix single(1);
  const double amplitude = 30.0 / (4e4 * 1e-3);
  const auto raster = run_trial(single, {}, quiet_synapse(), {}, constant_current({0}, amplitude, 100.0),
                                100.0, 0.1, 1);
  REQUIRE_FALSE(raster.spikes[0].empty());
  const double expected = 20.0 * std::log(3.0);
  CHECK(expected == doctest::Approx(21.97).epsilon(1e-3));
  CHECK(std::abs(raster.spikes[0][0] - expected) <= 2 * 0.1);
  // after reset at -60 the next crossing takes tau ln(30 / 10) - tau ln(30 / 16), plus refractoriness
  REQUIRE(raster.spikes[0].size() >= 2);
  const double isi = 2.0 + 20.0 * std::log(16.0 / 10.0);
  CHECK(std::abs(raster.spikes[0][1] - raster.spikes[0][0] - isi) <= 2 * 0.1);
}

TEST_CASE("no input relaxes to the leak reversal") {
  const auto graph = sample_adjacency({0.05, 5, 3});
  TrialTrace trace;
  trace.neurons = {0, 7, 19};
  TrialOptions opt;
  opt.initial.v = -65.0;
  opt.trace = &trace;
  StimulusPulse none;
  const auto raster = run_trial(graph, {}, quiet_synapse(), {}, none, 150.0, 0.1, 1, opt);
  CHECK(raster.total_spikes() == 0);
  const std::size_t at_100ms = 999;  // time index of t = 100 ms
  CHECK(trace.time[at_100ms] == doctest::Approx(100.0));
  for (const auto& v : trace.v) CHECK(std::abs(v[at_100ms] - (-74.0)) < 0.1);
}

TEST_CASE("synaptic depression step is exactly beta") {
  const AdjacencyMatrix single(1);
  TrialTrace trace;
  trace.neurons = {0};
  TrialOptions opt;
  opt.trace = &trace;
  const auto raster = run_trial(single, {}, quiet_synapse(), {}, constant_current({0}, 0.75, 100.0), 100.0,
                                0.1, 1, opt);
  REQUIRE_FALSE(raster.spikes[0].empty());
  const double tau_r = 2e4, dt = 0.1;
  for (double spike : raster.spikes[0]) {
    const auto k = static_cast<std::size_t>(std::llround(spike / dt)) - 1;  // trace index of the spike step
    REQUIRE(k >= 1);
    const double before = trace.resource[0][k - 1];
    const double recovered = before + dt / tau_r * (1.0 - before);
    CHECK(trace.resource[0][k] == recovered * 0.8);
  }
  // between spikes R only recovers
  std::size_t drops = 0;
  for (std::size_t k = 1; k < trace.time.size(); ++k) drops += trace.resource[0][k] < trace.resource[0][k - 1];
  CHECK(drops == raster.spikes[0].size());
}

TEST_CASE("conduction delay") {
  AdjacencyMatrix pair(2);
  pair.add_edge(0, 1);
  TrialTrace trace;
  trace.neurons = {1};
  TrialOptions opt;
  opt.trace = &trace;
  const auto raster =
      run_trial(pair, {}, quiet_synapse(), {}, constant_current({0}, 0.75, 100.0), 100.0, 0.1, 1, opt);
  REQUIRE_FALSE(raster.spikes[0].empty());
  const double spike = raster.spikes[0][0];
  double first_g = -1.0;
  for (std::size_t k = 0; k < trace.time.size(); ++k) {
    if (trace.g[0][k] > 0.0) {
      first_g = trace.time[k];
      break;
    }
  }
  REQUIRE(first_g > 0.0);
  // the increment lands at spike + delay; the trace samples it one step later
  const double lag = first_g - spike - 2.8;
  CHECK(lag >= -1e-9);
  CHECK(lag <= 0.1 + 1e-9);
  // the arriving conductance is g_max / S_1 times the released resource
  const double dt = 0.1, released = 1.0 + 0.0;  // R = 1 at the first spike (recovery saturates)
  CHECK(trace.g[0][static_cast<std::size_t>(std::llround(first_g / dt)) - 1] ==
        doctest::Approx(3.5e-4 * released * (1.0 - dt / 5.0)));
}

TEST_CASE("delay must be a multiple of dt") {
  const AdjacencyMatrix single(1);
  CHECK_THROWS_AS(run_trial(single, {}, quiet_synapse(), {}, {}, 200.0, 0.3, 1), ContractError);
  CHECK_THROWS_AS(run_trial(single, {}, quiet_synapse(), {}, {}, 120.0, 0.1, 1), ParameterError);
  CHECK_THROWS_AS(run_trial(AdjacencyMatrix(0), {}, quiet_synapse(), {}, {}, 200.0, 0.1, 1), ParameterError);
  SynapseParams strict;
  CHECK_THROWS_AS(run_trial(single, {}, strict, {}, {}, 200.0, 0.1, 1), ParameterError);
}

TEST_CASE("scaling factors") {
  AdjacencyMatrix k4(4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) k4.add_edge(i, j);
  CHECK(scaling_factors(k4) == std::vector<double>{3, 3, 3, 3});
  AdjacencyMatrix star(5);
  for (std::size_t i = 1; i < 5; ++i) star.add_edge(0, i);
  CHECK(scaling_factors(star)[0] == 4.0);
  CHECK(scaling_factors(star)[3] == 1.0);

  const auto graph = sample_adjacency({0.05, 100, 1});
  const auto s = scaling_factors(graph);
  double mean = 0.0;
  for (double x : s) mean += x / static_cast<double>(s.size());
  // (1 - 2a)(n - 1) + 2 a n; variance of one degree ~ sum of Bernoulli variances
  const double expected = 0.9 * 99 + 0.1 * 100;
  const double var = 99 * 0.9 * 0.1 + 200 * 0.05 * 0.95;
  CHECK(std::abs(mean - expected) < 3 * std::sqrt(var / 400.0) * 2);
}

TEST_CASE("trials are deterministic and backend independent") {
  const auto graph = sample_adjacency({0.05, 20, 4});
  const auto protocol = two_cluster_protocol(20);
  StimulusPulse pulse;
  pulse.targets = protocol.stimuli[0].targets;
  const auto a = run_trial(graph, {}, {}, {}, pulse, 200.0, 0.1, 77);
  const auto b = run_trial(graph, {}, {}, {}, pulse, 200.0, 0.1, 77);
  CHECK(a.spikes == b.spikes);
  TrialOptions scalar;
  scalar.kernels = &simd::scalar_kernels();
  CHECK(run_trial(graph, {}, {}, {}, pulse, 200.0, 0.1, 77, scalar).spikes == a.spikes);
  CHECK(run_trial(graph, {}, {}, {}, pulse, 200.0, 0.1, 78).spikes != a.spikes);
  CHECK(a.total_spikes() > 0);
  const auto csv = format_raster_csv(a);
  CHECK(csv.find("# seed=77") != std::string::npos);
  CHECK(csv.find("neuron_id,spike_time_ms\n") != std::string::npos);
}

TEST_CASE("halving dt barely changes spike counts") {
  const auto graph = sample_adjacency({0.05, 100, 8});
  StimulusPulse pulse;
  pulse.targets = two_cluster_protocol(100).stimuli[0].targets;
  double coarse = 0.0, fine = 0.0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    coarse += static_cast<double>(window_count(run_trial(graph, {}, {}, {}, pulse, 200.0, 0.1, t), 50.0));
    fine += static_cast<double>(window_count(run_trial(graph, {}, {}, {}, pulse, 200.0, 0.05, t), 50.0));
  }
  REQUIRE(coarse > 0.0);
  CHECK(std::abs(fine - coarse) / coarse <= 0.05);
}
