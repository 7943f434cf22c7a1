#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "penmin/error.hpp"
#include "penmin/kernels.hpp"

using namespace penmin;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(g);
  return v;
}

double abs_sum(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] * b[i]);
  return s;
}

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  const auto& t = simd::scalar_table();
  std::vector<double> a{1, 2, 3}, b{4, -5, 6};
  CHECK(t.dot(a.data(), b.data(), 3) == 12.0);
  CHECK(t.sum(a.data(), 3) == 6.0);
  CHECK(t.sum_sq(a.data(), 3) == 14.0);
  CHECK(t.sq_dist(a.data(), b.data(), 3) == 9.0 + 49.0 + 9.0);
  std::vector<double> y{1, 1, 1};
  t.axpy(2.0, a.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3, 5, 7});
  std::vector<double> out(3);
  t.scale(-1.0, a.data(), out.data(), 3);
  CHECK(out == std::vector<double>{-1, -2, -3});
  CHECK(t.dot(nullptr, nullptr, 0) == 0.0);
}

TEST_CASE("every available backend agrees with the scalar reference for lengths 0..67") {
  std::mt19937_64 g(42);
  const auto& ref = simd::scalar_table();
  for (const auto backend : simd::available_backends()) {
    CAPTURE(simd::backend_name(backend));
    const simd::KernelTable* t = backend == simd::Backend::Avx2 ? simd::avx2_table() : &ref;
    REQUIRE(t != nullptr);
    for (std::size_t n = 0; n <= 67; ++n) {
      CAPTURE(n);
      const auto a = random_vec(n, g);
      const auto b = random_vec(n, g);
      const double tol = 1e-14 * (1.0 + abs_sum(a, b) + abs_sum(a, a) + abs_sum(b, b));
      CHECK(std::abs(t->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= tol);
      CHECK(std::abs(t->sum(a.data(), n) - ref.sum(a.data(), n)) <= tol);
      CHECK(std::abs(t->sum_sq(a.data(), n) - ref.sum_sq(a.data(), n)) <= tol);
      CHECK(std::abs(t->sq_dist(a.data(), b.data(), n) - ref.sq_dist(a.data(), b.data(), n)) <= 4 * tol);

      auto y1 = b;
      auto y2 = b;
      t->axpy(0.7, a.data(), y1.data(), n);
      ref.axpy(0.7, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (1 + std::abs(y2[i])));

      std::vector<double> s1(n), s2(n);
      t->scale(-1.3, a.data(), s1.data(), n);
      ref.scale(-1.3, a.data(), s2.data(), n);
      CHECK(s1 == s2);
    }
  }
}

TEST_CASE("backend selection") {
  const auto before = simd::active_backend();
  simd::set_backend(simd::Backend::Scalar);
  CHECK(simd::active_backend() == simd::Backend::Scalar);
  CHECK(simd::backend_name(simd::Backend::Scalar) == "scalar");
  if (!simd::cpu_supports(simd::Backend::Avx2) || simd::avx2_table() == nullptr) {
    CHECK_THROWS_AS(simd::set_backend(simd::Backend::Avx2), InvalidArgument);
  }
  simd::set_backend(before);
}
