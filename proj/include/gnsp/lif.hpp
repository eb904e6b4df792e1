#pragma once

// Conductance-based leaky integrate-and-fire network with short-term
// synaptic depression, a fixed conduction delay, Poisson background input and
// pulse stimulation. Forward Euler on a fixed grid.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gnsp/sbm_graph.hpp"
#include "gnsp/simd.hpp"

namespace gnsp {

struct NeuronParams {
  double tau_mem = 20.0;       // ms
  double e_leak = -74.0;       // mV
  double r_in = 4.0e4;         // kOhm
  double v_threshold = -54.0;  // mV
  double v_reset = -60.0;      // mV

  void validate() const;
};

/// How a neuron without in-edges is handled.
enum class ZeroDegreePolicy {
  kError,    // reject the network
  kIsolate,  // the neuron gets no synaptic or background input
};

struct SynapseParams {
  double e_syn = 0.0;         // mV
  double g_max = 3.5e-4;      // mS
  double tau_g = 5.0;         // ms
  double beta = 0.8;          // resource kept per spike
  double tau_r = 2.0e4;       // ms, resource recovery
  double delay = 2.8;         // ms
  double poisson_rate = 1.0;  // Hz per incoming synapse
  ZeroDegreePolicy zero_degree = ZeroDegreePolicy::kError;

  void validate() const;
};

/// Stand-ins for the refractory and calcium-dependent potassium currents:
/// an absolute refractory clamp (V held at V_reset) and a spike-incremented
/// adaptation conductance relaxing with kca_tau toward 0, reversal kca_e.
/// kca_increment = 0 disables adaptation.
struct AuxCurrentParams {
  double refractory_ms = 2.0;
  double kca_increment = 0.0;  // mS per spike
  double kca_tau = 80.0;       // ms
  double kca_e = -80.0;        // mV

  void validate() const;
};

struct InitialConditions {
  std::optional<double> v;  // defaults to E_L
  double g = 0.0;
  double resource = 1.0;
};

struct StimulusPulse {
  std::vector<std::uint32_t> targets;
  double onset = 50.0;     // ms
  double duration = 5.0;   // ms
  double amplitude = 3.0;  // nA

  void validate(std::size_t num_neurons) const;
};

struct SpikeRaster {
  std::vector<std::vector<double>> spikes;  // per neuron, ms, increasing
  double duration = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> metadata;  // "key=value" lines for export

  std::size_t total_spikes() const;
};

/// Per-step samples of selected neurons, for tests and diagnostics.
struct TrialTrace {
  std::vector<std::uint32_t> neurons;
  std::vector<double> time;                 // t after the step
  std::vector<std::vector<double>> v;       // [probe][step]
  std::vector<std::vector<double>> g;
  std::vector<std::vector<double>> resource;
};

struct TrialOptions {
  InitialConditions initial;
  const simd::Kernels* kernels = nullptr;  // nullptr: active backend
  TrialTrace* trace = nullptr;
};

/// S_j = number of in-edges of j. Zero-degree neurons raise ParameterError
/// unless the policy is kIsolate, in which case S_j = 0.
std::vector<double> scaling_factors(const AdjacencyMatrix& adjacency,
                                    ZeroDegreePolicy policy = ZeroDegreePolicy::kError);

/// Simulates one trial. Step k advances t_k = k dt to t_{k+1}; a spike found
/// in step k is stamped t_{k+1} and reaches its targets' conductance at
/// t_{k+1} + delay. Each neuron j receives background events at rate
/// poisson_rate * S_j; every event comes from a uniformly chosen in-neighbor
/// i and adds (g_max / S_j) R_i to g_j without depressing R_i.
/// Deterministic in `seed`.
SpikeRaster run_trial(const AdjacencyMatrix& adjacency, const NeuronParams& neuron,
                      const SynapseParams& synapse, const AuxCurrentParams& aux,
                      const StimulusPulse& stimulus, double duration, double dt,
                      std::uint64_t seed, const TrialOptions& options = {});

/// neuron_id,spike_time_ms with '#'-prefixed metadata lines.
std::string format_raster_csv(const SpikeRaster& raster);
void write_raster_csv(const std::filesystem::path& path, const SpikeRaster& raster);

}  // namespace gnsp
