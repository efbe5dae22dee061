#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "kgqp/basis.hpp"
#include "kgqp/exactfield.hpp"

namespace kgqp {

constexpr int kMaxDim = 8;

struct Dims {
  int b = 1;
  int d = 1;
  int total() const { return b + d; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

// (n, j) in Z^{b+d}: lanes [0, b) hold n, lanes [b, b+d) hold j, the rest are
// zero. Coordinates are 16-bit; arithmetic throws on overflow.
struct Point {
  std::array<std::int16_t, kMaxDim> c{};

  static Point make(const IVec& n, const IVec& j, Dims dims);
  IVec n(Dims dims) const;
  IVec j(Dims dims) const;
  bool is_zero() const;
  long inf_norm() const;
  long l1_norm() const;

  friend Point operator+(const Point& a, const Point& b);
  friend Point operator-(const Point& a, const Point& b);
  Point operator-() const;
  friend auto operator<=>(const Point&, const Point&) = default;
};

struct PointHash {
  std::size_t operator()(const Point& p) const noexcept;
};

// Canonical representative of {x, -x}: first nonzero coordinate positive.
bool is_canonical(const Point& x);
Point canonical(const Point& x);

// ---- coefficient traits -------------------------------------------------

inline bool coeff_is_zero(double v) { return v == 0.0; }
inline bool coeff_is_zero(long double v) { return v == 0.0L; }
inline bool coeff_is_zero(const mpq_class& v) { return v == 0; }
inline bool coeff_is_zero(const QuadField& v) { return v.is_zero(); }

inline double coeff_abs(double v) { return std::fabs(v); }
inline double coeff_abs(long double v) { return static_cast<double>(std::fabs(v)); }
inline double coeff_abs(const mpq_class& v) { return std::fabs(v.get_d()); }
inline double coeff_abs(const QuadField& v) { return std::fabs(v.to_double()); }

template <class T>
constexpr bool kFloating = std::is_floating_point_v<T>;

// ---- series ---------------------------------------------------------------

// Even series u(x) = u(-x) on Z^{b+d}, stored on canonical representatives in
// sorted order with no zero coefficients.
template <class T>
class BasicCosineSeries {
 public:
  using Term = std::pair<Point, T>;
  using Accumulator = std::unordered_map<Point, T, PointHash>;

  BasicCosineSeries() = default;
  explicit BasicCosineSeries(Dims dims) : dims_(dims) {}

  Dims dims() const { return dims_; }
  const std::vector<Term>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  T at(const Point& x) const {
    Point c = canonical(x);
    auto it = std::lower_bound(terms_.begin(), terms_.end(), c,
                               [](const Term& t, const Point& p) { return t.first < p; });
    if (it != terms_.end() && it->first == c) return it->second;
    return T(0);
  }

  void set(const Point& x, const T& v) {
    Point c = canonical(x);
    auto it = std::lower_bound(terms_.begin(), terms_.end(), c,
                               [](const Term& t, const Point& p) { return t.first < p; });
    bool present = it != terms_.end() && it->first == c;
    if (coeff_is_zero(v)) {
      if (present) terms_.erase(it);
    } else if (present) {
      it->second = v;
    } else {
      terms_.insert(it, Term{c, v});
    }
  }

  // Keys of acc must be canonical. Entries with |v| <= prune are dropped.
  static BasicCosineSeries from_accumulator(Dims dims, Accumulator&& acc, double prune = 0.0) {
    BasicCosineSeries s(dims);
    s.terms_.reserve(acc.size());
    for (auto& kv : acc) {
      if (coeff_is_zero(kv.second)) continue;
      if constexpr (kFloating<T>) {
        if (prune > 0 && coeff_abs(kv.second) <= prune) continue;
      }
      s.terms_.emplace_back(kv.first, std::move(kv.second));
    }
    std::sort(s.terms_.begin(), s.terms_.end(),
              [](const Term& a, const Term& b) { return a.first < b.first; });
    return s;
  }

  static BasicCosineSeries from_terms(Dims dims, const std::vector<Term>& terms) {
    Accumulator acc;
    for (auto& [x, v] : terms) acc[canonical(x)] += v;
    return from_accumulator(dims, std::move(acc));
  }

  // Both x and -x for every stored x (origin once).
  std::vector<Term> full_terms() const {
    std::vector<Term> out;
    out.reserve(2 * terms_.size());
    for (auto& [x, v] : terms_) {
      out.emplace_back(x, v);
      if (!x.is_zero()) out.emplace_back(-x, v);
    }
    return out;
  }

  template <class U>
  BasicCosineSeries<U> cast() const {
    typename BasicCosineSeries<U>::Accumulator acc;
    for (auto& [x, v] : terms_) {
      if constexpr (std::is_same_v<T, mpq_class>) acc[x] = U(v.get_d());
      else acc[x] = U(v);
    }
    return BasicCosineSeries<U>::from_accumulator(dims_, std::move(acc));
  }

  BasicCosineSeries& operator+=(const BasicCosineSeries& o) { return axpy(T(1), o); }
  BasicCosineSeries& operator-=(const BasicCosineSeries& o) { return axpy(T(-1), o); }

  // this += alpha * o
  BasicCosineSeries& axpy(const T& alpha, const BasicCosineSeries& o) {
    check_dims(o);
    std::vector<Term> out;
    out.reserve(terms_.size() + o.terms_.size());
    auto i = terms_.begin();
    auto k = o.terms_.begin();
    while (i != terms_.end() || k != o.terms_.end()) {
      if (k == o.terms_.end() || (i != terms_.end() && i->first < k->first)) {
        out.push_back(std::move(*i++));
      } else if (i == terms_.end() || k->first < i->first) {
        T v = alpha * k->second;
        if (!coeff_is_zero(v)) out.emplace_back(k->first, v);
        ++k;
      } else {
        T v = i->second + alpha * k->second;
        if (!coeff_is_zero(v)) out.emplace_back(i->first, v);
        ++i;
        ++k;
      }
    }
    terms_ = std::move(out);
    return *this;
  }

  BasicCosineSeries scaled(const T& alpha) const {
    BasicCosineSeries s(dims_);
    if (coeff_is_zero(alpha)) return s;
    s.terms_ = terms_;
    for (auto& t : s.terms_) t.second = t.second * alpha;
    return s;
  }

  void check_dims(const BasicCosineSeries& o) const {
    if (!(dims_ == o.dims_)) throw std::invalid_argument("series dimension mismatch");
  }

  friend bool operator==(const BasicCosineSeries& a, const BasicCosineSeries& b) {
    return a.dims_ == b.dims_ && a.terms_ == b.terms_;
  }

 private:
  Dims dims_;
  std::vector<Term> terms_;
};

using CosineSeries = BasicCosineSeries<double>;
using CosineSeriesL = BasicCosineSeries<long double>;
using ExactSeries = BasicCosineSeries<mpq_class>;
using FieldSeries = BasicCosineSeries<QuadField>;

// ---- convolution ------------------------------------------------------------

struct ConvolveOptions {
  double drop_tol = 0.0;  // skip products with |A(x)B(y)| < drop_tol (floating only)
  double prune = 0.0;     // drop result coefficients with |v| <= prune (floating only)
};

struct ConvolveStats {
  double dropped_l1 = 0.0;  // l1 mass (full lattice) of skipped products plus pruned entries
};

// [A*B](x) = 1/2 sum_y [A(x-y) + A(x+y)] B(y); for even A this is the plain
// lattice convolution, which is what is evaluated.
template <class T>
BasicCosineSeries<T> convolve(const BasicCosineSeries<T>& A, const BasicCosineSeries<T>& B,
                              const ConvolveOptions& opt = {}, ConvolveStats* stats = nullptr) {
  A.check_dims(B);
  using Term = typename BasicCosineSeries<T>::Term;
  typename BasicCosineSeries<T>::Accumulator acc;
  auto fa = A.full_terms();
  auto fb = B.full_terms();
  if (fa.size() < fb.size()) std::swap(fa, fb);
  acc.reserve(std::min<std::size_t>(fa.size() * fb.size() / 2 + 16, 1u << 22));
  double dropped = 0.0;
  bool done = false;
  if constexpr (kFloating<T>) {
    if (opt.drop_tol > 0) {
      done = true;
      std::sort(fb.begin(), fb.end(),
                [](const Term& x, const Term& y) { return coeff_abs(x.second) > coeff_abs(y.second); });
      std::vector<double> suffix(fb.size() + 1, 0.0);
      for (std::size_t i = fb.size(); i-- > 0;) suffix[i] = suffix[i + 1] + coeff_abs(fb[i].second);
      for (auto& [xa, va] : fa) {
        const double ma = coeff_abs(va);
        std::size_t i = 0;
        for (; i < fb.size(); ++i) {
          if (ma * coeff_abs(fb[i].second) < opt.drop_tol) break;
          Point s = xa + fb[i].first;
          if (is_canonical(s)) acc[s] += va * fb[i].second;
        }
        dropped += ma * suffix[i];
      }
    }
  }
  if (!done) {
    for (auto& [xa, va] : fa)
      for (auto& [xb, vb] : fb) {
        Point s = xa + xb;
        if (is_canonical(s)) acc[s] += va * vb;
      }
  }
  if constexpr (kFloating<T>) {
    if (opt.prune > 0)
      for (auto& kv : acc)
        if (coeff_abs(kv.second) <= opt.prune) dropped += 2 * coeff_abs(kv.second);
  }
  if (stats) stats->dropped_l1 += dropped;
  return BasicCosineSeries<T>::from_accumulator(A.dims(), std::move(acc), opt.prune);
}

template <class T>
double l1_norm_full(const BasicCosineSeries<T>& u) {
  double s = 0;
  for (auto& [x, v] : u.terms()) s += (x.is_zero() ? 1.0 : 2.0) * coeff_abs(v);
  return s;
}

// m-fold convolution power. stats->dropped_l1 bounds the l1 error of the
// result when dropping is enabled.
template <class T>
BasicCosineSeries<T> power(const BasicCosineSeries<T>& u, int m, const ConvolveOptions& opt = {},
                           ConvolveStats* stats = nullptr) {
  if (m < 1) throw std::invalid_argument("power: exponent must be >= 1");
  BasicCosineSeries<T> r = u;
  double err = 0.0;
  const double un = kFloating<T> ? l1_norm_full(u) : 0.0;
  for (int k = 1; k < m; ++k) {
    ConvolveStats st;
    r = convolve(r, u, opt, &st);
    err = err * un + st.dropped_l1;
  }
  if (stats) stats->dropped_l1 += err;
  return r;
}

// ---- nonlinearity and residual --------------------------------------------

// u^{p+1} + sum_m alpha_m(x) u^m with alpha_m even in x.
struct Nonlinearity {
  int p = 2;
  std::vector<std::pair<int, CosineSeries>> higher;  // (power m >= p+2, alpha_m)
  void validate(Dims dims) const;
};

// N(u) = u^{*(p+1)} + sum alpha_m * u^{*m}
template <class T>
BasicCosineSeries<T> nonlinear_part(const BasicCosineSeries<T>& u, const Nonlinearity& nl,
                                    const ConvolveOptions& opt = {}, ConvolveStats* stats = nullptr) {
  nl.validate(u.dims());
  if (u.empty()) return BasicCosineSeries<T>(u.dims());
  BasicCosineSeries<T> r = power(u, nl.p + 1, opt, stats);
  for (auto& [m, alpha] : nl.higher) {
    BasicCosineSeries<T> a;
    if constexpr (std::is_same_v<T, mpq_class>) {
      typename BasicCosineSeries<T>::Accumulator acc;
      for (auto& [x, v] : alpha.terms()) acc[x] = mpq_class(v);
      a = BasicCosineSeries<T>::from_accumulator(alpha.dims(), std::move(acc));
    } else {
      a = alpha.template cast<T>();
    }
    ConvolveStats st;
    auto um = power(u, m, opt, &st);
    if (stats) stats->dropped_l1 += st.dropped_l1 * l1_norm_full(a);
    r += convolve(a, um, opt, stats);
  }
  return r;
}

// -(n.w + theta)^2 + |j|^2 + 1
double symbol(const Point& x, Dims dims, const std::vector<double>& omega, double theta = 0.0);
long double symbol_l(const Point& x, Dims dims, const std::vector<long double>& omega,
                     long double theta = 0.0L);
QuadField symbol_exact(const Point& x, Dims dims, const std::vector<QuadField>& omega);

// F(u) = diag[-(n.w)^2 + j^2 + 1] u + N(u)
template <class T>
BasicCosineSeries<T> residual(const BasicCosineSeries<T>& u, const std::vector<T>& omega,
                              const Nonlinearity& nl, const ConvolveOptions& opt = {},
                              ConvolveStats* stats = nullptr) {
  BasicCosineSeries<T> r = nonlinear_part(u, nl, opt, stats);
  BasicCosineSeries<T> lin(u.dims());
  std::vector<typename BasicCosineSeries<T>::Term> terms;
  for (auto& [x, v] : u.terms()) {
    static_assert(kFloating<T>, "use residual_exact for exact coefficients");
    T s;
    if constexpr (std::is_same_v<T, long double>) s = symbol_l(x, u.dims(), omega);
    else s = symbol(x, u.dims(), omega);
    terms.emplace_back(x, s * v);
  }
  r += BasicCosineSeries<T>::from_terms(u.dims(), terms);
  return r;
}

// Exact residual at rational coefficients and field-valued frequencies.
FieldSeries residual_exact(const ExactSeries& u, const std::vector<QuadField>& omega, const Nonlinearity& nl);

// ---- norms --------------------------------------------------------------

struct Weight {
  double beta = 0.5;
  double delta = 1e-2;
  double operator()(const Point& x) const;
};

template <class T>
double l2_norm(const BasicCosineSeries<T>& u) {
  long double s = 0;
  for (auto& [x, v] : u.terms()) s += static_cast<long double>(coeff_abs(v)) * coeff_abs(v);
  return static_cast<double>(std::sqrt(s));
}

template <class T>
double l1_norm(const BasicCosineSeries<T>& u) {
  double s = 0;
  for (auto& [x, v] : u.terms()) s += coeff_abs(v);
  return s;
}

template <class T>
double sup_norm(const BasicCosineSeries<T>& u) {
  double s = 0;
  for (auto& [x, v] : u.terms()) s = std::max(s, coeff_abs(v));
  return s;
}

double weighted_norm(const CosineSeries& u, const Weight& w);

struct DecayExponent {
  double c_hat = INFINITY;  // +inf when no stored point has |x| > 1
  Point argmin{};
  bool meets(double c) const { return c_hat >= c; }
};
// Largest c' with |u(x)| <= exp(-|x|^c') for every stored x with |x|_inf > 1.
DecayExponent sup_decay_exponent(const CosineSeries& u);

// u0 = sum_k a_k cos(-w_k t + j_k.x): coefficients a_k/2 at (-e_k, j_k).
CosineSeries initial_series(const FrequencyBasis& basis, const std::vector<double>& a);
ExactSeries initial_series_exact(const FrequencyBasis& basis, const std::vector<mpq_class>& a);
// S = supp u0 on canonical representatives.
std::vector<Point> exceptional_set(const FrequencyBasis& basis);
Point basis_point(const FrequencyBasis& basis, int k, int sign = 1);  // sign*(-e_k, j_k)

}  // namespace kgqp
