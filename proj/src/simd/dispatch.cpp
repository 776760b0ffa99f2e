#include "zonecast/simd/kernels.hpp"

#include <cstdlib>
#include <string>

namespace zonecast::simd {
namespace {

using Kernel = double (*)(std::span<const double>, std::span<const double>);

struct KernelTable {
  Isa isa;
  Kernel dot;
  Kernel squared_distance;
  Kernel sum_abs_diff;
  Kernel sum_squared_diff;
};

bool forced_scalar() {
  const char* env = std::getenv("ZONECAST_SIMD");
  return env != nullptr && std::string(env) == "scalar";
}

KernelTable select_table() {
  if (!forced_scalar()) {
#if defined(ZONECAST_HAVE_AVX2_KERNELS)
    if (isa_supported(Isa::avx2)) {
      return {Isa::avx2, &avx2::dot, &avx2::squared_distance, &avx2::sum_abs_diff,
              &avx2::sum_squared_diff};
    }
#endif
#if defined(ZONECAST_HAVE_NEON_KERNELS)
    return {Isa::neon, &neon::dot, &neon::squared_distance, &neon::sum_abs_diff,
            &neon::sum_squared_diff};
#endif
  }
  return {Isa::scalar, &scalar::dot, &scalar::squared_distance, &scalar::sum_abs_diff,
          &scalar::sum_squared_diff};
}

const KernelTable& table() {
  static const KernelTable t = select_table();
  return t;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(ZONECAST_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(ZONECAST_HAVE_NEON_KERNELS)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() { return table().isa; }

double dot(std::span<const double> a, std::span<const double> b) { return table().dot(a, b); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  return table().squared_distance(a, b);
}

double sum_abs_diff(std::span<const double> a, std::span<const double> b) {
  return table().sum_abs_diff(a, b);
}

double sum_squared_diff(std::span<const double> a, std::span<const double> b) {
  return table().sum_squared_diff(a, b);
}

}  // namespace zonecast::simd
