#pragma once

#include <cstddef>
#include <cstdint>

// Dense vector kernels used by the operator and sweep code. Every routine has
// a portable scalar reference and an AVX2/FMA variant; the variant is picked
// once at startup from cpuid and can be pinned with KGQP_ISA=scalar|avx2.

namespace kgqp::kernels {

enum class Isa { scalar, avx2 };

Isa active_isa();
bool isa_available(Isa isa);
// Pins the dispatch table (tests use this to run both paths). Returns false
// when the requested variant is not supported by the running CPU.
bool force_isa(Isa isa);
const char* isa_name(Isa isa);

double dot(const double* x, const double* y, std::size_t n);
double sum_sq(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
double max_abs(const double* x, std::size_t n);

// out[i] = jj[i] - (nw[i] + theta)^2, the diagonal symbol over a point list
// where nw = n.omega and jj = |j|^2 + 1 are precomputed per point.
void symbol(const double* nw, const double* jj, double theta, double* out, std::size_t n);

// Smallest |jj[i] - (nw[i] + theta)^2| over the list.
double symbol_min_abs(const double* nw, const double* jj, double theta, std::size_t n);

// y = A x for a CSR matrix with 32-bit column indices.
void csr_matvec(const std::int64_t* rowptr, const std::int32_t* col, const double* val,
                const double* x, double* y, std::size_t nrows);

// One damped Jacobi sweep: x_new[i] = inv_diag[i] * (rhs[i] - off[i]) where
// off = (T - diag) x_old. Returns max |x_new - x_old|.
double jacobi_update(const double* rhs, const double* off, const double* inv_diag,
                     double* x, std::size_t n);

namespace scalar {
double dot(const double* x, const double* y, std::size_t n);
double sum_sq(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
double max_abs(const double* x, std::size_t n);
void symbol(const double* nw, const double* jj, double theta, double* out, std::size_t n);
double symbol_min_abs(const double* nw, const double* jj, double theta, std::size_t n);
void csr_matvec(const std::int64_t* rowptr, const std::int32_t* col, const double* val,
                const double* x, double* y, std::size_t nrows);
double jacobi_update(const double* rhs, const double* off, const double* inv_diag,
                     double* x, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* x, const double* y, std::size_t n);
double sum_sq(const double* x, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
double max_abs(const double* x, std::size_t n);
void symbol(const double* nw, const double* jj, double theta, double* out, std::size_t n);
double symbol_min_abs(const double* nw, const double* jj, double theta, std::size_t n);
void csr_matvec(const std::int64_t* rowptr, const std::int32_t* col, const double* val,
                const double* x, double* y, std::size_t nrows);
double jacobi_update(const double* rhs, const double* off, const double* inv_diag,
                     double* x, std::size_t n);
}  // namespace avx2

}  // namespace kgqp::kernels
