#include "kgqp/lattice.hpp"

#include <cstring>
#include <limits>

namespace kgqp {

namespace {

std::int16_t narrow(long v) {
  if (v < std::numeric_limits<std::int16_t>::min() || v > std::numeric_limits<std::int16_t>::max())
    throw std::overflow_error("lattice coordinate out of 16-bit range: " + std::to_string(v));
  return static_cast<std::int16_t>(v);
}

}  // namespace

Point Point::make(const IVec& n, const IVec& j, Dims dims) {
  if (static_cast<int>(n.size()) != dims.b || static_cast<int>(j.size()) != dims.d)
    throw std::invalid_argument("Point::make: dimension mismatch");
  if (dims.total() > kMaxDim) throw std::invalid_argument("Point::make: b+d exceeds " + std::to_string(kMaxDim));
  Point p;
  for (int i = 0; i < dims.b; ++i) p.c[i] = narrow(n[i]);
  for (int i = 0; i < dims.d; ++i) p.c[dims.b + i] = narrow(j[i]);
  return p;
}

IVec Point::n(Dims dims) const { return IVec(c.begin(), c.begin() + dims.b); }
IVec Point::j(Dims dims) const { return IVec(c.begin() + dims.b, c.begin() + dims.b + dims.d); }

bool Point::is_zero() const {
  for (auto v : c)
    if (v) return false;
  return true;
}

long Point::inf_norm() const {
  long m = 0;
  for (auto v : c) m = std::max<long>(m, std::abs(v));
  return m;
}

long Point::l1_norm() const {
  long m = 0;
  for (auto v : c) m += std::abs(v);
  return m;
}

Point operator+(const Point& a, const Point& b) {
  Point r;
  for (int i = 0; i < kMaxDim; ++i) r.c[i] = narrow(long(a.c[i]) + b.c[i]);
  return r;
}

Point operator-(const Point& a, const Point& b) {
  Point r;
  for (int i = 0; i < kMaxDim; ++i) r.c[i] = narrow(long(a.c[i]) - b.c[i]);
  return r;
}

Point Point::operator-() const {
  Point r;
  for (int i = 0; i < kMaxDim; ++i) r.c[i] = narrow(-long(c[i]));
  return r;
}

std::size_t PointHash::operator()(const Point& p) const noexcept {
  std::uint64_t w[2];
  std::memcpy(w, p.c.data(), sizeof(w));
  std::uint64_t h = w[0] * 0x9E3779B97F4A7C15ull ^ (w[1] + 0x632BE59BD9B4E019ull + (w[0] << 6));
  h ^= h >> 31;
  h *= 0xBF58476D1CE4E5B9ull;
  h ^= h >> 29;
  return static_cast<std::size_t>(h);
}

bool is_canonical(const Point& x) {
  for (auto v : x.c)
    if (v) return v > 0;
  return true;
}

Point canonical(const Point& x) { return is_canonical(x) ? x : -x; }

// ---- nonlinearity ----------------------------------------------------

void Nonlinearity::validate(Dims dims) const {
  if (p < 2 || p % 2) throw std::invalid_argument("nonlinearity: p must be even and positive");
  for (auto& [m, alpha] : higher) {
    if (m < p + 2) throw std::invalid_argument("nonlinearity: higher power must be >= p+2");
    if (!(alpha.dims() == dims)) throw std::invalid_argument("nonlinearity: coefficient dimension mismatch");
    for (auto& [x, v] : alpha.terms())
      for (int i = 0; i < dims.b; ++i)
        if (x.c[i]) throw std::invalid_argument("nonlinearity: coefficient must not depend on time");
  }
}

double symbol(const Point& x, Dims dims, const std::vector<double>& omega, double theta) {
  double nw = theta, jj = 1.0;
  for (int i = 0; i < dims.b; ++i) nw += x.c[i] * omega[i];
  for (int i = 0; i < dims.d; ++i) jj += double(x.c[dims.b + i]) * x.c[dims.b + i];
  return jj - nw * nw;
}

long double symbol_l(const Point& x, Dims dims, const std::vector<long double>& omega, long double theta) {
  long double nw = theta, jj = 1.0L;
  for (int i = 0; i < dims.b; ++i) nw += x.c[i] * omega[i];
  for (int i = 0; i < dims.d; ++i) jj += (long double)x.c[dims.b + i] * x.c[dims.b + i];
  return jj - nw * nw;
}

QuadField symbol_exact(const Point& x, Dims dims, const std::vector<QuadField>& omega) {
  QuadField nw;
  long jj = 1;
  for (int i = 0; i < dims.b; ++i)
    if (x.c[i]) nw += omega[i] * mpq_class(x.c[i]);
  for (int i = 0; i < dims.d; ++i) jj += long(x.c[dims.b + i]) * x.c[dims.b + i];
  return QuadField(jj) - nw * nw;
}

FieldSeries residual_exact(const ExactSeries& u, const std::vector<QuadField>& omega, const Nonlinearity& nl) {
  ExactSeries nlin = nonlinear_part(u, nl);
  FieldSeries::Accumulator acc;
  for (auto& [x, v] : nlin.terms()) acc[x] += QuadField(v);
  for (auto& [x, v] : u.terms()) acc[x] += symbol_exact(x, u.dims(), omega) * v;
  return FieldSeries::from_accumulator(u.dims(), std::move(acc));
}

// ---- norms ------------------------------------------------------------

double Weight::operator()(const Point& x) const {
  double r = static_cast<double>(x.inf_norm());
  if (r <= 1.0 / (beta * beta)) return 1.0;
  return std::exp(beta * std::fabs(std::log(delta)) * r);
}

double weighted_norm(const CosineSeries& u, const Weight& w) {
  long double s = 0;
  for (auto& [x, v] : u.terms()) {
    long double t = static_cast<long double>(v) * w(x);
    s += t * t;
  }
  return static_cast<double>(std::sqrt(s));
}

DecayExponent sup_decay_exponent(const CosineSeries& u) {
  DecayExponent out;
  for (auto& [x, v] : u.terms()) {
    long r = x.inf_norm();
    if (r <= 1) continue;
    double a = std::fabs(v);
    double c = a >= 1.0 ? -INFINITY : std::log(-std::log(a)) / std::log(double(r));
    if (c < out.c_hat) {
      out.c_hat = c;
      out.argmin = x;
    }
  }
  return out;
}

// ---- u0 ---------------------------------------------------------------

Point basis_point(const FrequencyBasis& basis, int k, int sign) {
  Dims dims{basis.b, basis.d};
  IVec n(basis.b, 0), j = basis.modes[k];
  n[k] = -sign;
  for (auto& v : j) v *= sign;
  return Point::make(n, j, dims);
}

std::vector<Point> exceptional_set(const FrequencyBasis& basis) {
  std::vector<Point> s;
  for (int k = 0; k < basis.b; ++k) s.push_back(canonical(basis_point(basis, k)));
  return s;
}

CosineSeries initial_series(const FrequencyBasis& basis, const std::vector<double>& a) {
  if (static_cast<int>(a.size()) != basis.b) throw std::invalid_argument("initial_series: need b amplitudes");
  CosineSeries::Accumulator acc;
  for (int k = 0; k < basis.b; ++k) acc[canonical(basis_point(basis, k))] += 0.5 * a[k];
  return CosineSeries::from_accumulator({basis.b, basis.d}, std::move(acc));
}

ExactSeries initial_series_exact(const FrequencyBasis& basis, const std::vector<mpq_class>& a) {
  if (static_cast<int>(a.size()) != basis.b) throw std::invalid_argument("initial_series: need b amplitudes");
  ExactSeries::Accumulator acc;
  for (int k = 0; k < basis.b; ++k) acc[canonical(basis_point(basis, k))] += a[k] / 2;
  return ExactSeries::from_accumulator({basis.b, basis.d}, std::move(acc));
}

}  // namespace kgqp
