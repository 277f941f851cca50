#include <cstdlib>
#include <string_view>

#include "extremctl/kernels/kernels.hpp"

namespace extremctl::kernels {
namespace {

constexpr KernelTable kScalarTable{Isa::kScalar, &scalar::dot_f64, &scalar::sad_offset_f32,
                                   &scalar::sum_f32};

#if defined(EXTREMCTL_HAVE_AVX2)
constexpr KernelTable kAvx2Table{Isa::kAvx2, &avx2::dot_f64, &avx2::sad_offset_f32,
                                 &avx2::sum_f32};

bool cpu_has_avx2() noexcept {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

#if defined(EXTREMCTL_HAVE_NEON)
constexpr KernelTable kNeonTable{Isa::kNeon, &neon::dot_f64, &neon::sad_offset_f32,
                                 &neon::sum_f32};
#endif

const KernelTable& select() noexcept {
  if (const char* env = std::getenv("EXTREMCTL_SIMD"); env && std::string_view(env) == "scalar") {
    return kScalarTable;
  }
  if (const KernelTable* t = table_for(Isa::kAvx2)) return *t;
  if (const KernelTable* t = table_for(Isa::kNeon)) return *t;
  return kScalarTable;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "unknown";
}

const KernelTable* table_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return &kScalarTable;
    case Isa::kAvx2:
#if defined(EXTREMCTL_HAVE_AVX2)
      if (cpu_has_avx2()) return &kAvx2Table;
#endif
      return nullptr;
    case Isa::kNeon:
#if defined(EXTREMCTL_HAVE_NEON)
      return &kNeonTable;  // mandatory on AArch64
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

}  // namespace extremctl::kernels
