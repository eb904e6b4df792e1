#pragma once

// Data-parallel inner loops with a scalar reference implementation and
// vectorized variants (AVX2 on x86-64, NEON on aarch64) picked at runtime.
//
// The elementwise kernels (lif_step) use only IEEE add/sub/mul/compare, no
// fused multiply-add, so every backend is bit-identical to the scalar
// reference. Reductions (dot, sum) reassociate and agree to rounding only.

#include <cstddef>
#include <span>
#include <string_view>

namespace gnsp::simd {

enum class Backend { kScalar, kAvx2, kNeon };

std::string_view to_string(Backend backend);

/// Constants of one forward-Euler step of the conductance-based LIF network.
/// All voltages in mV, times in ms, conductances in mS, R_in in kOhm, so
/// r_in * g * dV is already in mV.
struct LifStepConstants {
  double dt_over_tau_mem;
  double e_leak;
  double e_syn;
  double e_adapt;
  double r_in;
  double v_threshold;
  double v_reset;
  double g_decay;       // 1 - dt / tau_g
  double adapt_decay;   // 1 - dt / tau_kca
  double dt_over_tau_r; // dt / tau_R
  double beta;
  double adapt_increment;
  double refractory;    // ms
  double dt;
};

/// Mutable per-neuron state, structure-of-arrays. All spans have equal length.
struct LifState {
  std::span<double> v;
  std::span<double> g;
  std::span<double> adapt;
  std::span<double> resource;
  std::span<double> refractory_left;
};

/// Advances every neuron by one step.
///   arrivals: conductance increments landing this step; consumed and zeroed.
///   drive:    external input already expressed in mV (R_in * I_in).
///   release:  output; resource value at emission for neurons that spiked in
///             this step, 0 otherwise.
using LifStepFn = void (*)(const LifStepConstants&, const LifState&,
                           std::span<double> arrivals, std::span<const double> drive,
                           std::span<double> release);
using DotFn = double (*)(std::span<const double>, std::span<const double>);
using SumFn = double (*)(std::span<const double>);

struct Kernels {
  Backend backend;
  LifStepFn lif_step;
  DotFn dot;
  SumFn sum;
};

const Kernels& scalar_kernels();

/// Kernels for `backend`, or nullptr when it was not compiled in or the CPU
/// lacks the instruction set.
const Kernels* kernels_for(Backend backend);

/// Fastest backend supported by this CPU. The GNSP_SIMD environment variable
/// ("scalar", "avx2", "neon") overrides the choice when that backend exists.
const Kernels& active_kernels();

namespace detail {
void lif_step_scalar_range(const LifStepConstants& c, const LifState& s,
                           std::span<double> arrivals, std::span<const double> drive,
                           std::span<double> release, std::size_t begin, std::size_t end);
const Kernels* avx2_kernels();
const Kernels* neon_kernels();
}  // namespace detail

}  // namespace gnsp::simd
