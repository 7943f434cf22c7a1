#pragma once

// Data-parallel inner loops used by the projection estimators, the noise
// generator and the Gram-Schmidt orthonormalization.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant compiled in a separate translation unit. The variant is
// chosen once at runtime from the CPU feature bits; PENMIN_SIMD=scalar|avx2
// in the environment or set_backend() overrides the choice. Variants agree
// with the reference up to floating-point reassociation of the reductions.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace penmin::simd {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  Backend backend;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*sum_sq)(const double* a, std::size_t n);
  double (*sq_dist)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = alpha * x
  void (*scale)(double alpha, const double* x, double* out, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in.
const KernelTable* avx2_table();

bool cpu_supports(Backend backend);
std::vector<Backend> available_backends();
std::string_view backend_name(Backend backend);

// Table used by the typed wrappers below.
const KernelTable& active();
Backend active_backend();
// Throws InvalidArgument if the backend is unavailable on this machine/build.
void set_backend(Backend backend);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }
inline double sum_sq(std::span<const double> a) { return active().sum_sq(a.data(), a.size()); }
inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  return active().sq_dist(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline void scale(double alpha, std::span<const double> x, std::span<double> out) {
  active().scale(alpha, x.data(), out.data(), x.size());
}

}  // namespace penmin::simd
