#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "kgqp/kernels.hpp"

namespace k = kgqp::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Lengths straddling the 4- and 8-wide loop boundaries.
const std::size_t kLengths[] = {0, 1, 3, 4, 5, 7, 8, 9, 15, 16, 17, 100, 1023};

bool have_avx2() { return k::isa_available(k::Isa::avx2); }

}  // namespace

TEST_CASE("dispatch honours the environment override") {
  const char* env = std::getenv("KGQP_ISA");
  if (env && std::string(env) == "scalar") CHECK(k::active_isa() == k::Isa::scalar);
  CHECK(k::force_isa(k::Isa::scalar));
  CHECK(k::active_isa() == k::Isa::scalar);
  if (have_avx2()) {
    CHECK(k::force_isa(k::Isa::avx2));
    CHECK(k::active_isa() == k::Isa::avx2);
  }
  k::force_isa(k::Isa::scalar);
}

TEST_CASE("reductions agree between scalar and avx2") {
  if (!have_avx2()) return;
  std::mt19937_64 rng(11);
  for (std::size_t n : kLengths) {
    auto x = random_vec(n, rng), y = random_vec(n, rng);
    double s = k::scalar::dot(x.data(), y.data(), n), v = k::avx2::dot(x.data(), y.data(), n);
    double scale = 1;
    for (std::size_t i = 0; i < n; ++i) scale += std::fabs(x[i] * y[i]);
    CHECK(std::fabs(s - v) <= 4e-16 * scale * std::sqrt(double(n) + 1));
    CHECK(std::fabs(k::scalar::sum_sq(x.data(), n) - k::avx2::sum_sq(x.data(), n)) <= 1e-14 * (n + 1));
    CHECK(k::scalar::max_abs(x.data(), n) == k::avx2::max_abs(x.data(), n));
  }
}

TEST_CASE("axpy and jacobi update agree") {
  if (!have_avx2()) return;
  std::mt19937_64 rng(12);
  for (std::size_t n : kLengths) {
    auto x = random_vec(n, rng), y1 = random_vec(n, rng);
    auto y2 = y1;
    k::scalar::axpy(0.37, x.data(), y1.data(), n);
    k::avx2::axpy(0.37, x.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(y1[i] - y2[i]) <= 1e-15);

    auto rhs = random_vec(n, rng), off = random_vec(n, rng), inv = random_vec(n, rng, 0.5, 2);
    auto x1 = random_vec(n, rng);
    auto x2 = x1;
    double c1 = k::scalar::jacobi_update(rhs.data(), off.data(), inv.data(), x1.data(), n);
    double c2 = k::avx2::jacobi_update(rhs.data(), off.data(), inv.data(), x2.data(), n);
    CHECK(c1 == doctest::Approx(c2).epsilon(1e-14));
    for (std::size_t i = 0; i < n; ++i) CHECK(x1[i] == x2[i]);
  }
}

TEST_CASE("symbol kernels agree up to the fused rounding") {
  if (!have_avx2()) return;
  std::mt19937_64 rng(13);
  for (std::size_t n : kLengths) {
    auto nw = random_vec(n, rng, -50, 50), jj = random_vec(n, rng, 1, 2500);
    std::vector<double> o1(n), o2(n);
    k::scalar::symbol(nw.data(), jj.data(), 0.123, o1.data(), n);
    k::avx2::symbol(nw.data(), jj.data(), 0.123, o2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(o1[i] - o2[i]) <= 1e-12 * (jj[i] + 2500));
    double m1 = k::scalar::symbol_min_abs(nw.data(), jj.data(), 0.123, n);
    double m2 = k::avx2::symbol_min_abs(nw.data(), jj.data(), 0.123, n);
    if (n) CHECK(std::fabs(m1 - m2) <= 1e-9);
  }
}

TEST_CASE("csr matvec agrees") {
  if (!have_avx2()) return;
  std::mt19937_64 rng(14);
  const std::size_t rows = 57, cols = 91;
  std::vector<std::int64_t> rowptr{0};
  std::vector<std::int32_t> col;
  std::vector<double> val;
  std::uniform_int_distribution<int> len(0, 13), c(0, cols - 1);
  for (std::size_t r = 0; r < rows; ++r) {
    int l = len(rng);
    for (int i = 0; i < l; ++i) {
      col.push_back(c(rng));
      val.push_back(std::uniform_real_distribution<double>(-1, 1)(rng));
    }
    rowptr.push_back(static_cast<std::int64_t>(col.size()));
  }
  auto x = random_vec(cols, rng);
  std::vector<double> y1(rows), y2(rows);
  k::scalar::csr_matvec(rowptr.data(), col.data(), val.data(), x.data(), y1.data(), rows);
  k::avx2::csr_matvec(rowptr.data(), col.data(), val.data(), x.data(), y2.data(), rows);
  for (std::size_t r = 0; r < rows; ++r) CHECK(std::fabs(y1[r] - y2[r]) <= 1e-14);
}
