#include "kgqp/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace kgqp::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, sh));
}

inline double hmin(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_min_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_min_sd(lo, sh));
}

const __m256d kAbsMask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));

}  // namespace

double dot(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
  }
  for (; i + 4 <= n; i += 4)
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  double s = hsum(_mm256_add_pd(a0, a1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double sum_sq(const double* x, std::size_t n) { return dot(x, x, n); }

void axpy(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

double max_abs(const double* x, std::size_t n) {
  __m256d m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, _mm256_and_pd(_mm256_loadu_pd(x + i), kAbsMask));
  double r = hmax(m);
  for (; i < n; ++i) r = std::fmax(r, std::fabs(x[i]));
  return r;
}

void symbol(const double* nw, const double* jj, double theta, double* out, std::size_t n) {
  const __m256d th = _mm256_set1_pd(theta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d w = _mm256_add_pd(_mm256_loadu_pd(nw + i), th);
    // jj - w*w with a single rounding
    _mm256_storeu_pd(out + i, _mm256_fnmadd_pd(w, w, _mm256_loadu_pd(jj + i)));
  }
  for (; i < n; ++i) {
    double w = nw[i] + theta;
    out[i] = std::fma(-w, w, jj[i]);
  }
}

double symbol_min_abs(const double* nw, const double* jj, double theta, std::size_t n) {
  const __m256d th = _mm256_set1_pd(theta);
  __m256d m = _mm256_set1_pd(INFINITY);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d w = _mm256_add_pd(_mm256_loadu_pd(nw + i), th);
    __m256d v = _mm256_fnmadd_pd(w, w, _mm256_loadu_pd(jj + i));
    m = _mm256_min_pd(m, _mm256_and_pd(v, kAbsMask));
  }
  double r = hmin(m);
  for (; i < n; ++i) {
    double w = nw[i] + theta;
    r = std::fmin(r, std::fabs(std::fma(-w, w, jj[i])));
  }
  return r;
}

void csr_matvec(const std::int64_t* rowptr, const std::int32_t* col, const double* val,
                const double* x, double* y, std::size_t nrows) {
  for (std::size_t r = 0; r < nrows; ++r) {
    std::int64_t k = rowptr[r];
    const std::int64_t end = rowptr[r + 1];
    __m256d acc = _mm256_setzero_pd();
    for (; k + 4 <= end; k += 4) {
      __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(col + k));
      __m256d xv = _mm256_i32gather_pd(x, idx, 8);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(val + k), xv, acc);
    }
    double s = hsum(acc);
    for (; k < end; ++k) s += val[k] * x[col[k]];
    y[r] = s;
  }
}

double jacobi_update(const double* rhs, const double* off, const double* inv_diag,
                     double* x, std::size_t n) {
  __m256d ch = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_mul_pd(_mm256_loadu_pd(inv_diag + i),
                              _mm256_sub_pd(_mm256_loadu_pd(rhs + i), _mm256_loadu_pd(off + i)));
    __m256d d = _mm256_and_pd(_mm256_sub_pd(v, _mm256_loadu_pd(x + i)), kAbsMask);
    ch = _mm256_max_pd(ch, d);
    _mm256_storeu_pd(x + i, v);
  }
  double change = hmax(ch);
  for (; i < n; ++i) {
    double v = inv_diag[i] * (rhs[i] - off[i]);
    change = std::fmax(change, std::fabs(v - x[i]));
    x[i] = v;
  }
  return change;
}

}  // namespace kgqp::kernels::avx2

#endif
