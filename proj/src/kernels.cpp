#include "kgqp/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace kgqp::kernels {

namespace scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_sq(const double* x, std::size_t n) { return dot(x, x, n); }

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double max_abs(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::fmax(m, std::fabs(x[i]));
  return m;
}

void symbol(const double* nw, const double* jj, double theta, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double w = nw[i] + theta;
    out[i] = jj[i] - w * w;
  }
}

double symbol_min_abs(const double* nw, const double* jj, double theta, std::size_t n) {
  double m = INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    double w = nw[i] + theta;
    m = std::fmin(m, std::fabs(jj[i] - w * w));
  }
  return m;
}

void csr_matvec(const std::int64_t* rowptr, const std::int32_t* col, const double* val,
                const double* x, double* y, std::size_t nrows) {
  for (std::size_t r = 0; r < nrows; ++r) {
    double s = 0.0;
    for (std::int64_t k = rowptr[r]; k < rowptr[r + 1]; ++k) s += val[k] * x[col[k]];
    y[r] = s;
  }
}

double jacobi_update(const double* rhs, const double* off, const double* inv_diag,
                     double* x, std::size_t n) {
  double change = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = inv_diag[i] * (rhs[i] - off[i]);
    change = std::fmax(change, std::fabs(v - x[i]));
    x[i] = v;
  }
  return change;
}

}  // namespace scalar

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum_sq)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*max_abs)(const double*, std::size_t);
  void (*symbol)(const double*, const double*, double, double*, std::size_t);
  double (*symbol_min_abs)(const double*, const double*, double, std::size_t);
  void (*csr_matvec)(const std::int64_t*, const std::int32_t*, const double*, const double*,
                     double*, std::size_t);
  double (*jacobi_update)(const double*, const double*, const double*, double*, std::size_t);
};

constexpr Table kScalar{scalar::dot,    scalar::sum_sq,         scalar::axpy,
                        scalar::max_abs, scalar::symbol,        scalar::symbol_min_abs,
                        scalar::csr_matvec, scalar::jacobi_update};

#ifdef KGQP_HAVE_AVX2_TU
constexpr Table kAvx2{avx2::dot,    avx2::sum_sq,         avx2::axpy,
                      avx2::max_abs, avx2::symbol,        avx2::symbol_min_abs,
                      avx2::csr_matvec, avx2::jacobi_update};
#endif

bool cpu_has_avx2() {
#if defined(KGQP_HAVE_AVX2_TU) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa pick_default() {
  const char* env = std::getenv("KGQP_ISA");
  if (env && std::strcmp(env, "scalar") == 0) return Isa::scalar;
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

Isa g_isa = pick_default();

const Table& table() {
#ifdef KGQP_HAVE_AVX2_TU
  if (g_isa == Isa::avx2) return kAvx2;
#endif
  return kScalar;
}

}  // namespace

Isa active_isa() { return g_isa; }

bool isa_available(Isa isa) { return isa == Isa::scalar || cpu_has_avx2(); }

bool force_isa(Isa isa) {
  if (!isa_available(isa)) return false;
  g_isa = isa;
  return true;
}

const char* isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

double dot(const double* x, const double* y, std::size_t n) { return table().dot(x, y, n); }
double sum_sq(const double* x, std::size_t n) { return table().sum_sq(x, n); }
void axpy(double a, const double* x, double* y, std::size_t n) { table().axpy(a, x, y, n); }
double max_abs(const double* x, std::size_t n) { return table().max_abs(x, n); }
void symbol(const double* nw, const double* jj, double theta, double* out, std::size_t n) {
  table().symbol(nw, jj, theta, out, n);
}
double symbol_min_abs(const double* nw, const double* jj, double theta, std::size_t n) {
  return table().symbol_min_abs(nw, jj, theta, n);
}
void csr_matvec(const std::int64_t* rowptr, const std::int32_t* col, const double* val,
                const double* x, double* y, std::size_t nrows) {
  table().csr_matvec(rowptr, col, val, x, y, nrows);
}
double jacobi_update(const double* rhs, const double* off, const double* inv_diag,
                     double* x, std::size_t n) {
  return table().jacobi_update(rhs, off, inv_diag, x, n);
}

}  // namespace kgqp::kernels
