#include <atomic>
#include <cstdlib>
#include <string>

#include "penmin/error.hpp"
#include "penmin/kernels.hpp"

namespace penmin::simd {

#if !defined(PENMIN_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_supports(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(PENMIN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return avx2_table() != nullptr && __builtin_cpu_supports("avx2") &&
             __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out{Backend::Scalar};
  if (cpu_supports(Backend::Avx2)) out.push_back(Backend::Avx2);
  return out;
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

namespace {

const KernelTable* table_for(Backend backend) {
  if (!cpu_supports(backend)) return nullptr;
  return backend == Backend::Avx2 ? avx2_table() : &scalar_table();
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("PENMIN_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && cpu_supports(Backend::Avx2)) return avx2_table();
  }
  if (cpu_supports(Backend::Avx2)) return avx2_table();
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

Backend active_backend() { return active().backend; }

void set_backend(Backend backend) {
  const KernelTable* table = table_for(backend);
  if (table == nullptr) {
    throw InvalidArgument("kernel backend '" + std::string(backend_name(backend)) +
                          "' is not available on this machine");
  }
  slot().store(table, std::memory_order_release);
}

}  // namespace penmin::simd
