#pragma once

// Data-parallel inner loops of the latency estimator: the correlation dot
// product and the block-matching cost. Each kernel has a scalar reference
// implementation and vectorized variants; the active table is chosen once
// at runtime from the CPU's capabilities.

#include <cstddef>
#include <string_view>

namespace extremctl::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view to_string(Isa isa) noexcept;

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot_f64)(const double* a, const double* b, std::size_t n);
  // sum_i |a[i] - b[i] - offset|
  float (*sad_offset_f32)(const float* a, const float* b, std::size_t n, float offset);
  // sum_i a[i]
  float (*sum_f32)(const float* a, std::size_t n);
};

// Table for a specific ISA, or nullptr when it is not compiled in or the CPU
// lacks it.
const KernelTable* table_for(Isa isa) noexcept;

// Best supported table. EXTREMCTL_SIMD=scalar in the environment forces the
// scalar reference.
const KernelTable& active() noexcept;

namespace scalar {
double dot_f64(const double* a, const double* b, std::size_t n);
float sad_offset_f32(const float* a, const float* b, std::size_t n, float offset);
float sum_f32(const float* a, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot_f64(const double* a, const double* b, std::size_t n);
float sad_offset_f32(const float* a, const float* b, std::size_t n, float offset);
float sum_f32(const float* a, std::size_t n);
}  // namespace avx2

namespace neon {
double dot_f64(const double* a, const double* b, std::size_t n);
float sad_offset_f32(const float* a, const float* b, std::size_t n, float offset);
float sum_f32(const float* a, std::size_t n);
}  // namespace neon

}  // namespace extremctl::kernels
