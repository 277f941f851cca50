#include <cmath>

#include "extremctl/kernels/kernels.hpp"

namespace extremctl::kernels::scalar {

double dot_f64(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

float sad_offset_f32(const float* a, const float* b, std::size_t n, float offset) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += std::fabs(a[i] - b[i] - offset);
  return acc;
}

float sum_f32(const float* a, std::size_t n) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

}  // namespace extremctl::kernels::scalar
