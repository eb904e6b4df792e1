#include "gnsp/simd.hpp"

namespace gnsp::simd {
namespace detail {

// Reference step. Vector backends must reproduce this operation order exactly.
void lif_step_scalar_range(const LifStepConstants& c, const LifState& s,
                           std::span<double> arrivals, std::span<const double> drive,
                           std::span<double> release, std::size_t begin, std::size_t end) {
  const double half_dt = 0.5 * c.dt;
  for (std::size_t i = begin; i < end; ++i) {
    double v = s.v[i];
    double g = s.g[i] + arrivals[i];
    arrivals[i] = 0.0;
    double adapt = s.adapt[i];
    double res = s.resource[i];
    double refr = s.refractory_left[i];

    const bool active = refr <= half_dt;
    const double input =
        c.r_in * (g * (c.e_syn - v) + adapt * (c.e_adapt - v)) + drive[i];
    double v_new = v + c.dt_over_tau_mem * ((c.e_leak - v) + input);
    if (!active) {
      v_new = c.v_reset;
      refr = refr - c.dt;
    }
    g = g * c.g_decay;
    adapt = adapt * c.adapt_decay;
    res = res + c.dt_over_tau_r * (1.0 - res);

    double out = 0.0;
    if (active && v_new >= c.v_threshold) {
      out = res;
      v_new = c.v_reset;
      refr = c.refractory;
      res = res * c.beta;
      adapt = adapt + c.adapt_increment;
    }
    s.v[i] = v_new;
    s.g[i] = g;
    s.adapt[i] = adapt;
    s.resource[i] = res;
    s.refractory_left[i] = refr;
    release[i] = out;
  }
}

}  // namespace detail

namespace {

void lif_step(const LifStepConstants& c, const LifState& s, std::span<double> arrivals,
              std::span<const double> drive, std::span<double> release) {
  detail::lif_step_scalar_range(c, s, arrivals, drive, release, 0, s.v.size());
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sum(std::span<const double> a) {
  double acc = 0.0;
  for (double x : a) acc += x;
  return acc;
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k{Backend::kScalar, &lif_step, &dot, &sum};
  return k;
}

}  // namespace gnsp::simd
