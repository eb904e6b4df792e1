#include "gnsp/simd.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

namespace gnsp::simd {
namespace {

void lif_step(const LifStepConstants& c, const LifState& s, std::span<double> arrivals,
              std::span<const double> drive, std::span<double> release) {
  const std::size_t n = s.v.size();
  const std::size_t vec_end = n - n % 2;

  const float64x2_t dt_over_tau_mem = vdupq_n_f64(c.dt_over_tau_mem);
  const float64x2_t e_leak = vdupq_n_f64(c.e_leak);
  const float64x2_t e_syn = vdupq_n_f64(c.e_syn);
  const float64x2_t e_adapt = vdupq_n_f64(c.e_adapt);
  const float64x2_t r_in = vdupq_n_f64(c.r_in);
  const float64x2_t v_threshold = vdupq_n_f64(c.v_threshold);
  const float64x2_t v_reset = vdupq_n_f64(c.v_reset);
  const float64x2_t g_decay = vdupq_n_f64(c.g_decay);
  const float64x2_t adapt_decay = vdupq_n_f64(c.adapt_decay);
  const float64x2_t dt_over_tau_r = vdupq_n_f64(c.dt_over_tau_r);
  const float64x2_t beta = vdupq_n_f64(c.beta);
  const float64x2_t adapt_increment = vdupq_n_f64(c.adapt_increment);
  const float64x2_t refractory = vdupq_n_f64(c.refractory);
  const float64x2_t dt = vdupq_n_f64(c.dt);
  const float64x2_t half_dt = vdupq_n_f64(0.5 * c.dt);
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);

  for (std::size_t i = 0; i < vec_end; i += 2) {
    float64x2_t v = vld1q_f64(&s.v[i]);
    float64x2_t g = vaddq_f64(vld1q_f64(&s.g[i]), vld1q_f64(&arrivals[i]));
    vst1q_f64(&arrivals[i], zero);
    float64x2_t adapt = vld1q_f64(&s.adapt[i]);
    float64x2_t res = vld1q_f64(&s.resource[i]);
    float64x2_t refr = vld1q_f64(&s.refractory_left[i]);

    const uint64x2_t active = vcleq_f64(refr, half_dt);
    // vmulq + vaddq kept separate: vmlaq may fuse and break bit-equivalence.
    const float64x2_t syn = vmulq_f64(g, vsubq_f64(e_syn, v));
    const float64x2_t adp = vmulq_f64(adapt, vsubq_f64(e_adapt, v));
    const float64x2_t input = vaddq_f64(vmulq_f64(r_in, vaddq_f64(syn, adp)), vld1q_f64(&drive[i]));
    float64x2_t v_new =
        vaddq_f64(v, vmulq_f64(dt_over_tau_mem, vaddq_f64(vsubq_f64(e_leak, v), input)));
    v_new = vbslq_f64(active, v_new, v_reset);
    refr = vbslq_f64(active, refr, vsubq_f64(refr, dt));

    g = vmulq_f64(g, g_decay);
    adapt = vmulq_f64(adapt, adapt_decay);
    res = vaddq_f64(res, vmulq_f64(dt_over_tau_r, vsubq_f64(one, res)));

    const uint64x2_t spike = vandq_u64(active, vcgeq_f64(v_new, v_threshold));
    const float64x2_t out = vbslq_f64(spike, res, zero);
    v_new = vbslq_f64(spike, v_reset, v_new);
    refr = vbslq_f64(spike, refractory, refr);
    res = vbslq_f64(spike, vmulq_f64(res, beta), res);
    adapt = vbslq_f64(spike, vaddq_f64(adapt, adapt_increment), adapt);

    vst1q_f64(&s.v[i], v_new);
    vst1q_f64(&s.g[i], g);
    vst1q_f64(&s.adapt[i], adapt);
    vst1q_f64(&s.resource[i], res);
    vst1q_f64(&s.refractory_left[i], refr);
    vst1q_f64(&release[i], out);
  }
  detail::lif_step_scalar_range(c, s, arrivals, drive, release, vec_end, n);
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t vec_end = n - n % 2;
  float64x2_t acc = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < vec_end; i += 2)
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(&a[i]), vld1q_f64(&b[i])));
  double total = vaddvq_f64(acc);
  for (std::size_t i = vec_end; i < n; ++i) total += a[i] * b[i];
  return total;
}

double sum(std::span<const double> a) {
  const std::size_t n = a.size();
  const std::size_t vec_end = n - n % 2;
  float64x2_t acc = vdupq_n_f64(0.0);
  for (std::size_t i = 0; i < vec_end; i += 2) acc = vaddq_f64(acc, vld1q_f64(&a[i]));
  double total = vaddvq_f64(acc);
  for (std::size_t i = vec_end; i < n; ++i) total += a[i];
  return total;
}

}  // namespace

namespace detail {
const Kernels* neon_kernels() {
  static const Kernels k{Backend::kNeon, &lif_step, &dot, &sum};
  return &k;
}
}  // namespace detail

}  // namespace gnsp::simd

#else

namespace gnsp::simd::detail {
const Kernels* neon_kernels() { return nullptr; }
}  // namespace gnsp::simd::detail

#endif
