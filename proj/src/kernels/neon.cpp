#if defined(__aarch64__) || defined(__ARM_NEON)

#include <arm_neon.h>

#include <cmath>

#include "extremctl/kernels/kernels.hpp"

namespace extremctl::kernels::neon {

double dot_f64(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

float sad_offset_f32(const float* a, const float* b, std::size_t n, float offset) {
  const float32x4_t off = vdupq_n_f32(offset);
  float32x4_t acc = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t d = vsubq_f32(vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i)), off);
    acc = vaddq_f32(acc, vabsq_f32(d));
  }
  float total = vaddvq_f32(acc);
  for (; i < n; ++i) total += std::fabs(a[i] - b[i] - offset);
  return total;
}

float sum_f32(const float* a, std::size_t n) {
  float32x4_t acc = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = vaddq_f32(acc, vld1q_f32(a + i));
  float total = vaddvq_f32(acc);
  for (; i < n; ++i) total += a[i];
  return total;
}

}  // namespace extremctl::kernels::neon

#endif
