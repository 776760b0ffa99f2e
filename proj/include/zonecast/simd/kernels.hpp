#pragma once

// Reduction kernels shared by the GP solver and the error metrics.
//
// Every kernel has a scalar reference implementation plus vector variants
// (AVX2+FMA on x86-64, NEON on AArch64). The dispatching entry points pick the
// widest variant the running CPU supports, once per process. Setting
// ZONECAST_SIMD=scalar in the environment forces the reference path.
//
// Vector variants reassociate the sums, so results agree with the scalar path
// to rounding, not bit-for-bit. Within one process the choice is fixed, which
// keeps fitted models and reports deterministic.

#include <span>
#include <string_view>

namespace zonecast::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

/// ISA selected for the dispatching kernels below.
Isa active_isa();

/// True if the CPU can run the given variant.
bool isa_supported(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double sum_abs_diff(std::span<const double> a, std::span<const double> b);
double sum_squared_diff(std::span<const double> a, std::span<const double> b);

namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double sum_abs_diff(std::span<const double> a, std::span<const double> b);
double sum_squared_diff(std::span<const double> a, std::span<const double> b);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define ZONECAST_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double sum_abs_diff(std::span<const double> a, std::span<const double> b);
double sum_squared_diff(std::span<const double> a, std::span<const double> b);
}  // namespace avx2
#endif

#if defined(__aarch64__) && defined(__ARM_NEON)
#define ZONECAST_HAVE_NEON_KERNELS 1
namespace neon {
double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double sum_abs_diff(std::span<const double> a, std::span<const double> b);
double sum_squared_diff(std::span<const double> a, std::span<const double> b);
}  // namespace neon
#endif

}  // namespace zonecast::simd
