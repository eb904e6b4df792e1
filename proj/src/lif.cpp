#include "gnsp/lif.hpp"

#include <cmath>

#include "gnsp/errors.hpp"
#include "gnsp/io.hpp"
#include "gnsp/rng.hpp"

namespace gnsp {

void NeuronParams::validate() const {
  if (!(tau_mem > 0.0)) throw ParameterError("tau_mem must be positive");
  if (!(r_in > 0.0)) throw ParameterError("r_in must be positive");
  if (!(v_reset < v_threshold)) throw ParameterError("v_reset must be below v_threshold");
}

void SynapseParams::validate() const {
  if (!(beta > 0.0 && beta <= 1.0)) throw ParameterError("beta must lie in (0, 1]");
  if (!(tau_g > 0.0) || !(tau_r > 0.0) || !(delay > 0.0)) {
    throw ParameterError("synaptic time constants and delay must be positive");
  }
  if (!(g_max >= 0.0)) throw ParameterError("g_max must be nonnegative");
  if (!(poisson_rate >= 0.0)) throw ParameterError("poisson_rate must be nonnegative");
}

void AuxCurrentParams::validate() const {
  if (!(refractory_ms >= 0.0)) throw ParameterError("refractory_ms must be nonnegative");
  if (!(kca_tau > 0.0)) throw ParameterError("kca_tau must be positive");
  if (!(kca_increment >= 0.0)) throw ParameterError("kca_increment must be nonnegative");
}

void StimulusPulse::validate(std::size_t num_neurons) const {
  if (!(duration > 0.0)) throw ParameterError("stimulus duration must be positive");
  if (!(onset >= 0.0)) throw ParameterError("stimulus onset must be nonnegative");
  for (auto t : targets) {
    if (t >= num_neurons) throw ParameterError("stimulus target out of range");
  }
}

std::size_t SpikeRaster::total_spikes() const {
  std::size_t total = 0;
  for (const auto& s : spikes) total += s.size();
  return total;
}

std::vector<double> scaling_factors(const AdjacencyMatrix& adjacency, ZeroDegreePolicy policy) {
  std::vector<double> s(adjacency.size());
  for (std::size_t j = 0; j < adjacency.size(); ++j) {
    s[j] = static_cast<double>(adjacency.degree(j));
    if (s[j] == 0.0 && policy == ZeroDegreePolicy::kError) {
      throw ParameterError("neuron " + std::to_string(j) +
                           " has no in-edges (use the isolate zero-degree policy)");
    }
  }
  return s;
}

SpikeRaster run_trial(const AdjacencyMatrix& adjacency, const NeuronParams& neuron,
                      const SynapseParams& synapse, const AuxCurrentParams& aux,
                      const StimulusPulse& stimulus, double duration, double dt,
                      std::uint64_t seed, const TrialOptions& options) {
  const std::size_t n = adjacency.size();
  if (n == 0) throw ParameterError("empty network");
  neuron.validate();
  synapse.validate();
  aux.validate();
  stimulus.validate(n);
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  const double delay_ratio = synapse.delay / dt;
  const auto delay_steps = static_cast<std::size_t>(std::llround(delay_ratio));
  if (delay_steps == 0 ||
      std::abs(static_cast<double>(delay_steps) * dt - synapse.delay) > 1e-9 * synapse.delay) {
    throw ContractError("dt must divide the conduction delay");
  }
  if (duration < stimulus.onset + 100.0) {
    throw ParameterError("duration must cover stimulus onset + 100 ms");
  }

  const simd::Kernels& kernels = options.kernels ? *options.kernels : simd::active_kernels();
  const auto s = scaling_factors(adjacency, synapse.zero_degree);
  std::vector<std::vector<std::uint32_t>> neighbors(n);
  std::vector<double> coef(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    neighbors[j] = adjacency.neighbors(j);
    if (s[j] > 0.0) coef[j] = synapse.g_max / s[j];
  }

  const simd::LifStepConstants c{
      .dt_over_tau_mem = dt / neuron.tau_mem,
      .e_leak = neuron.e_leak,
      .e_syn = synapse.e_syn,
      .e_adapt = aux.kca_e,
      .r_in = neuron.r_in,
      .v_threshold = neuron.v_threshold,
      .v_reset = neuron.v_reset,
      .g_decay = 1.0 - dt / synapse.tau_g,
      .adapt_decay = 1.0 - dt / aux.kca_tau,
      .dt_over_tau_r = dt / synapse.tau_r,
      .beta = synapse.beta,
      .adapt_increment = aux.kca_increment,
      .refractory = aux.refractory_ms,
      .dt = dt,
  };

  std::vector<double> v(n, options.initial.v.value_or(neuron.e_leak));
  std::vector<double> g(n, options.initial.g);
  std::vector<double> adapt(n, 0.0);
  std::vector<double> resource(n, options.initial.resource);
  std::vector<double> refractory_left(n, 0.0);
  std::vector<double> drive(n, 0.0);
  std::vector<double> release(n, 0.0);
  const simd::LifState state{v, g, adapt, resource, refractory_left};

  // Ring of pending conductance increments, one slot per step of delay.
  const std::size_t ring = delay_steps + 1;
  std::vector<std::vector<double>> pending(ring, std::vector<double>(n, 0.0));

  Rng rng(seed);
  std::vector<double> next_noise(n, std::numeric_limits<double>::infinity());
  std::vector<double> noise_rate(n, 0.0);  // events per ms
  for (std::size_t j = 0; j < n; ++j) {
    noise_rate[j] = synapse.poisson_rate * s[j] / 1000.0;
    if (noise_rate[j] > 0.0) next_noise[j] = rng.exponential(noise_rate[j]);
  }

  const double drive_mv = neuron.r_in * stimulus.amplitude * 1e-3;  // kOhm * nA -> mV
  const double stim_end = stimulus.onset + stimulus.duration;
  constexpr double kTimeTol = 1e-9;

  SpikeRaster raster;
  raster.spikes.assign(n, {});
  raster.duration = duration;
  raster.seed = seed;

  TrialTrace* trace = options.trace;
  if (trace) {
    trace->time.clear();
    trace->v.assign(trace->neurons.size(), {});
    trace->g.assign(trace->neurons.size(), {});
    trace->resource.assign(trace->neurons.size(), {});
  }

  const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
  bool stim_on = false;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double t_next = static_cast<double>(k + 1) * dt;

    const bool want_stim = t >= stimulus.onset - kTimeTol && t < stim_end - kTimeTol;
    if (want_stim != stim_on) {
      for (auto target : stimulus.targets) drive[target] = want_stim ? drive_mv : 0.0;
      stim_on = want_stim;
    }

    std::vector<double>& arrivals = pending[k % ring];
    for (std::size_t j = 0; j < n; ++j) {
      while (next_noise[j] < t_next) {
        const auto& in = neighbors[j];
        const std::uint32_t source = in[rng.below(in.size())];
        arrivals[j] += coef[j] * resource[source];
        next_noise[j] += rng.exponential(noise_rate[j]);
      }
    }

    kernels.lif_step(c, state, arrivals, drive, release);

    std::vector<double>& outgoing = pending[(k + 1 + delay_steps) % ring];
    for (std::size_t i = 0; i < n; ++i) {
      if (release[i] == 0.0) continue;
      raster.spikes[i].push_back(t_next);
      for (auto j : neighbors[i]) outgoing[j] += coef[j] * release[i];
    }

    if (trace) {
      trace->time.push_back(t_next);
      for (std::size_t p = 0; p < trace->neurons.size(); ++p) {
        const auto id = trace->neurons[p];
        trace->v[p].push_back(v[id]);
        trace->g[p].push_back(g[id]);
        trace->resource[p].push_back(resource[id]);
      }
    }
  }

  auto& meta = raster.metadata;
  auto put = [&meta](const std::string& key, double value) {
    meta.push_back(key + "=" + io::format_double(value));
  };
  meta.push_back("seed=" + std::to_string(seed));
  meta.push_back("neurons=" + std::to_string(n));
  meta.push_back("simd=" + std::string(simd::to_string(kernels.backend)));
  put("duration_ms", duration);
  put("dt_ms", dt);
  put("tau_mem_ms", neuron.tau_mem);
  put("e_leak_mv", neuron.e_leak);
  put("r_in_kohm", neuron.r_in);
  put("v_threshold_mv", neuron.v_threshold);
  put("v_reset_mv", neuron.v_reset);
  put("e_syn_mv", synapse.e_syn);
  put("g_max_ms", synapse.g_max);
  put("tau_g_ms", synapse.tau_g);
  put("beta", synapse.beta);
  put("tau_r_ms", synapse.tau_r);
  put("delay_ms", synapse.delay);
  put("poisson_rate_hz", synapse.poisson_rate);
  put("refractory_ms", aux.refractory_ms);
  put("kca_increment_ms", aux.kca_increment);
  put("kca_tau_ms", aux.kca_tau);
  put("kca_e_mv", aux.kca_e);
  put("stim_onset_ms", stimulus.onset);
  put("stim_duration_ms", stimulus.duration);
  put("stim_amplitude_na", stimulus.amplitude);
  meta.push_back("stim_targets=" + std::to_string(stimulus.targets.size()));
  return raster;
}

std::string format_raster_csv(const SpikeRaster& raster) {
  std::string out;
  for (const auto& line : raster.metadata) out += "# " + line + "\n";
  out += "neuron_id,spike_time_ms\n";
  for (std::size_t i = 0; i < raster.spikes.size(); ++i) {
    for (double t : raster.spikes[i]) out += std::to_string(i) + "," + io::format_double(t) + "\n";
  }
  return out;
}

void write_raster_csv(const std::filesystem::path& path, const SpikeRaster& raster) {
  io::write_file(path, format_raster_csv(raster));
}

}  // namespace gnsp
