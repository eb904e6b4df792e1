// Compiled with -mavx2 (no -mfma). Only reached after a runtime CPU check.
#include "gnsp/simd.hpp"

#if defined(__x86_64__) && defined(__AVX2__)

#include <immintrin.h>

namespace gnsp::simd {
namespace {

void lif_step(const LifStepConstants& c, const LifState& s, std::span<double> arrivals,
              std::span<const double> drive, std::span<double> release) {
  const std::size_t n = s.v.size();
  const std::size_t vec_end = n - n % 4;

  const __m256d dt_over_tau_mem = _mm256_set1_pd(c.dt_over_tau_mem);
  const __m256d e_leak = _mm256_set1_pd(c.e_leak);
  const __m256d e_syn = _mm256_set1_pd(c.e_syn);
  const __m256d e_adapt = _mm256_set1_pd(c.e_adapt);
  const __m256d r_in = _mm256_set1_pd(c.r_in);
  const __m256d v_threshold = _mm256_set1_pd(c.v_threshold);
  const __m256d v_reset = _mm256_set1_pd(c.v_reset);
  const __m256d g_decay = _mm256_set1_pd(c.g_decay);
  const __m256d adapt_decay = _mm256_set1_pd(c.adapt_decay);
  const __m256d dt_over_tau_r = _mm256_set1_pd(c.dt_over_tau_r);
  const __m256d beta = _mm256_set1_pd(c.beta);
  const __m256d adapt_increment = _mm256_set1_pd(c.adapt_increment);
  const __m256d refractory = _mm256_set1_pd(c.refractory);
  const __m256d dt = _mm256_set1_pd(c.dt);
  const __m256d half_dt = _mm256_set1_pd(0.5 * c.dt);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();

  for (std::size_t i = 0; i < vec_end; i += 4) {
    __m256d v = _mm256_loadu_pd(&s.v[i]);
    __m256d g = _mm256_add_pd(_mm256_loadu_pd(&s.g[i]), _mm256_loadu_pd(&arrivals[i]));
    _mm256_storeu_pd(&arrivals[i], zero);
    __m256d adapt = _mm256_loadu_pd(&s.adapt[i]);
    __m256d res = _mm256_loadu_pd(&s.resource[i]);
    __m256d refr = _mm256_loadu_pd(&s.refractory_left[i]);

    const __m256d active = _mm256_cmp_pd(refr, half_dt, _CMP_LE_OQ);
    const __m256d syn = _mm256_mul_pd(g, _mm256_sub_pd(e_syn, v));
    const __m256d adp = _mm256_mul_pd(adapt, _mm256_sub_pd(e_adapt, v));
    const __m256d input =
        _mm256_add_pd(_mm256_mul_pd(r_in, _mm256_add_pd(syn, adp)), _mm256_loadu_pd(&drive[i]));
    __m256d v_new = _mm256_add_pd(
        v, _mm256_mul_pd(dt_over_tau_mem, _mm256_add_pd(_mm256_sub_pd(e_leak, v), input)));
    v_new = _mm256_blendv_pd(v_reset, v_new, active);
    refr = _mm256_blendv_pd(_mm256_sub_pd(refr, dt), refr, active);

    g = _mm256_mul_pd(g, g_decay);
    adapt = _mm256_mul_pd(adapt, adapt_decay);
    res = _mm256_add_pd(res, _mm256_mul_pd(dt_over_tau_r, _mm256_sub_pd(one, res)));

    const __m256d spike = _mm256_and_pd(active, _mm256_cmp_pd(v_new, v_threshold, _CMP_GE_OQ));
    const __m256d out = _mm256_and_pd(spike, res);
    v_new = _mm256_blendv_pd(v_new, v_reset, spike);
    refr = _mm256_blendv_pd(refr, refractory, spike);
    res = _mm256_blendv_pd(res, _mm256_mul_pd(res, beta), spike);
    adapt = _mm256_blendv_pd(adapt, _mm256_add_pd(adapt, adapt_increment), spike);

    _mm256_storeu_pd(&s.v[i], v_new);
    _mm256_storeu_pd(&s.g[i], g);
    _mm256_storeu_pd(&s.adapt[i], adapt);
    _mm256_storeu_pd(&s.resource[i], res);
    _mm256_storeu_pd(&s.refractory_left[i], refr);
    _mm256_storeu_pd(&release[i], out);
  }
  detail::lif_step_scalar_range(c, s, arrivals, drive, release, vec_end, n);
}

double horizontal_sum(__m256d x) {
  const __m128d lo = _mm256_castpd256_pd128(x);
  const __m128d hi = _mm256_extractf128_pd(x, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const std::size_t vec_end = n - n % 8;
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  for (std::size_t i = 0; i < vec_end; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i])));
    acc1 = _mm256_add_pd(acc1,
                         _mm256_mul_pd(_mm256_loadu_pd(&a[i + 4]), _mm256_loadu_pd(&b[i + 4])));
  }
  double acc = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (std::size_t i = vec_end; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(std::span<const double> a) {
  const std::size_t n = a.size();
  const std::size_t vec_end = n - n % 4;
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < vec_end; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(&a[i]));
  double total = horizontal_sum(acc);
  for (std::size_t i = vec_end; i < n; ++i) total += a[i];
  return total;
}

}  // namespace

namespace detail {
const Kernels* avx2_kernels() {
  if (!__builtin_cpu_supports("avx2")) return nullptr;
  static const Kernels k{Backend::kAvx2, &lif_step, &dot, &sum};
  return &k;
}
}  // namespace detail

}  // namespace gnsp::simd

#else

namespace gnsp::simd::detail {
const Kernels* avx2_kernels() { return nullptr; }
}  // namespace gnsp::simd::detail

#endif
