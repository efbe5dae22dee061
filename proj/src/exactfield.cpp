#include "kgqp/exactfield.hpp"

#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "kgqp/basis.hpp"

namespace kgqp {

namespace {

struct PrimeTable {
  std::uint64_t bound = 1000000;
  std::vector<std::uint32_t> primes;
  void build() {
    std::vector<bool> composite(bound + 1, false);
    primes.clear();
    for (std::uint64_t i = 2; i <= bound; ++i) {
      if (composite[i]) continue;
      primes.push_back(static_cast<std::uint32_t>(i));
      for (std::uint64_t k = i * i; k <= bound; k += i) composite[k] = true;
    }
  }
};

std::mutex g_table_mu;

PrimeTable& table() {
  static PrimeTable t = [] {
    PrimeTable x;
    x.build();
    return x;
  }();
  return t;
}

bool probably_prime(std::uint64_t c) {
  mpz_class z(std::to_string(c));
  return mpz_probab_prime_p(z.get_mpz_t(), 40) > 0;
}

std::uint64_t isqrt_u64(std::uint64_t c) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(c)));
  while (static_cast<unsigned __int128>(r) * r > c) --r;
  while (static_cast<unsigned __int128>(r + 1) * (r + 1) <= c) ++r;
  return r;
}

// Trial division; returns the cofactor with no prime factor below the bound.
std::uint64_t strip_small(std::uint64_t n, std::vector<std::pair<std::uint64_t, int>>* out) {
  std::lock_guard<std::mutex> lock(g_table_mu);
  for (std::uint32_t p : table().primes) {
    if (static_cast<std::uint64_t>(p) * p > n) break;
    int e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    if (e && out) out->emplace_back(p, e);
  }
  return n;
}

mpz_class mpz_from_u64(std::uint64_t v) { return mpz_class(std::to_string(v)); }

}  // namespace

void set_prime_table_bound(std::uint64_t bound) {
  if (bound < 2) throw std::invalid_argument("prime table bound must be >= 2");
  std::lock_guard<std::mutex> lock(g_table_mu);
  table().bound = bound;
  table().build();
}

std::uint64_t prime_table_bound() { return table().bound; }

IntegerFactorization factorize(std::uint64_t n) {
  if (n == 0) throw std::domain_error("factorize: n must be positive");
  IntegerFactorization f;
  f.n = n;
  std::uint64_t c = strip_small(n, &f.factors);
  if (c == 1) return f;
  const unsigned __int128 b = table().bound;
  if (static_cast<unsigned __int128>(c) <= b * b || probably_prime(c)) {
    f.factors.emplace_back(c, 1);
    return f;
  }
  std::uint64_t r = isqrt_u64(c);
  if (r * r == c && probably_prime(r)) {
    f.factors.emplace_back(r, 2);
    return f;
  }
  throw std::domain_error("factorize: cofactor " + std::to_string(c) + " beyond prime table");
}

bool is_square_free(std::uint64_t n) {
  if (n == 0) throw std::domain_error("is_square_free: n must be positive");
  std::vector<std::pair<std::uint64_t, int>> fs;
  std::uint64_t c = strip_small(n, &fs);
  for (auto& [p, e] : fs)
    if (e > 1) return false;
  if (c == 1) return true;
  const unsigned __int128 b = table().bound;
  if (static_cast<unsigned __int128>(c) <= b * b) return true;
  std::uint64_t r = isqrt_u64(c);
  if (r * r == c) return false;
  // c has at most two prime factors above the bound when c < bound^3.
  if (static_cast<unsigned __int128>(c) < b * b * b || probably_prime(c)) return true;
  throw std::domain_error("is_square_free: cofactor " + std::to_string(c) + " beyond prime table");
}

std::pair<std::uint64_t, std::uint64_t> square_part(std::uint64_t n) {
  auto f = factorize(n);
  std::uint64_t sq = 1, m = 1;
  for (auto& [p, e] : f.factors) {
    for (int i = 0; i < e / 2; ++i) sq *= p;
    if (e % 2) m *= p;
  }
  return {sq, m};
}

// ---- QuadField ----------------------------------------------------------

QuadField::QuadField(long v) {
  if (v != 0) terms_.emplace(1, mpq_class(v));
}

// Callers may pass unreduced fractions (mpq_class(2, 4)); reduce on entry so
// that map equality stays exact equality.
QuadField::QuadField(const mpq_class& q) {
  mpq_class c = q;
  c.canonicalize();
  if (c != 0) terms_.emplace(1, c);
}

QuadField QuadField::sqrt_of(std::uint64_t n) {
  QuadField r;
  if (n == 0) return r;
  auto [f, m] = square_part(n);
  r.terms_.emplace(m, mpq_class(mpz_from_u64(f)));
  return r;
}

QuadField QuadField::term(const mpq_class& q, std::uint64_t m) {
  if (m == 0 || !is_square_free(m)) throw std::invalid_argument("QuadField::term: radicand not square-free");
  QuadField r;
  mpq_class c = q;
  c.canonicalize();
  if (c != 0) r.terms_.emplace(m, c);
  return r;
}

bool QuadField::is_rational() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first == 1);
}

mpq_class QuadField::rational_part() const { return coefficient(1); }

mpq_class QuadField::coefficient(std::uint64_t m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? mpq_class(0) : it->second;
}

void QuadField::add_term(std::uint64_t m, const mpq_class& q) {
  if (q == 0) return;
  auto [it, fresh] = terms_.emplace(m, q);
  if (fresh) return;
  it->second += q;
  if (it->second == 0) terms_.erase(it);
}

QuadField& QuadField::operator+=(const QuadField& o) {
  for (auto& [m, q] : o.terms_) add_term(m, q);
  return *this;
}

QuadField& QuadField::operator-=(const QuadField& o) {
  for (auto& [m, q] : o.terms_) add_term(m, -q);
  return *this;
}

QuadField& QuadField::operator*=(const mpq_class& q) {
  if (q == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& kv : terms_) kv.second *= q;
  return *this;
}

QuadField QuadField::operator-() const {
  QuadField r = *this;
  for (auto& kv : r.terms_) kv.second = -kv.second;
  return r;
}

QuadField operator*(const QuadField& a, const QuadField& b) {
  QuadField r;
  for (auto& [m1, q1] : a.terms_) {
    for (auto& [m2, q2] : b.terms_) {
      // both radicands square-free: sqrt(m1 m2) = g sqrt((m1/g)(m2/g))
      std::uint64_t g = std::gcd(m1, m2);
      unsigned __int128 rad = static_cast<unsigned __int128>(m1 / g) * (m2 / g);
      if (rad > UINT64_MAX) throw std::overflow_error("QuadField: radicand product overflows 64 bits");
      mpq_class c = q1 * q2;
      c *= mpq_class(mpz_from_u64(g));
      r.add_term(static_cast<std::uint64_t>(rad), c);
    }
  }
  return r;
}

QuadField& QuadField::operator*=(const QuadField& o) { return *this = *this * o; }

double QuadField::to_double() const { return static_cast<double>(to_long_double()); }

long double QuadField::to_long_double() const {
  long double s = 0;
  for (auto& [m, q] : terms_) s += static_cast<long double>(q.get_d()) * std::sqrt(static_cast<long double>(m));
  return s;
}

std::string QuadField::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (auto& [m, q] : terms_) {
    if (!first) os << (q < 0 ? " - " : " + ");
    else if (q < 0) os << "-";
    first = false;
    mpq_class a = abs(q);
    if (m == 1) {
      os << a.get_str();
    } else {
      if (a != 1) os << a.get_str() << "*";
      os << "sqrt(" << m << ")";
    }
  }
  return os.str();
}

// ---- intervals ----------------------------------------------------------

namespace {

// [lo, hi] enclosing sqrt(m) with k fractional bits.
void sqrt_enclosure(std::uint64_t m, unsigned long k, mpq_class& lo, mpq_class& hi) {
  mpz_class scaled = mpz_from_u64(m);
  scaled <<= 2 * k;
  mpz_class s;
  mpz_sqrt(s.get_mpz_t(), scaled.get_mpz_t());
  mpz_class den = 1;
  den <<= k;
  lo = mpq_class(s, den);
  lo.canonicalize();
  if (s * s == scaled) {
    hi = lo;
  } else {
    hi = mpq_class(s + 1, den);
    hi.canonicalize();
  }
}

void enclose(const QuadField& a, unsigned long k, mpq_class& lo, mpq_class& hi) {
  lo = 0;
  hi = 0;
  mpq_class l, h;
  for (auto& [m, q] : a.terms()) {
    if (m == 1) {
      lo += q;
      hi += q;
      continue;
    }
    sqrt_enclosure(m, k, l, h);
    if (q > 0) {
      lo += q * l;
      hi += q * h;
    } else {
      lo += q * h;
      hi += q * l;
    }
  }
}

}  // namespace

SignInterval sign_and_interval(const QuadField& a, int bits) {
  if (bits < 16) throw std::invalid_argument("sign_and_interval: bits must be >= 16");
  SignInterval out;
  if (a.is_zero()) return out;
  if (a.is_rational()) {
    out.lo = out.hi = a.rational_part();
    out.sign = sgn(out.lo);
    return out;
  }
  mpq_class mag = 1;
  for (auto& [m, q] : a.terms()) mag += abs(q);
  unsigned long k = static_cast<unsigned long>(bits) + mpz_sizeinbase(mag.get_num().get_mpz_t(), 2) + 2;
  for (;;) {
    enclose(a, k, out.lo, out.hi);
    mpq_class width = out.hi - out.lo;
    mpq_class alo = abs(out.lo), ahi = abs(out.hi);
    mpq_class scale = std::max(mpq_class(1), std::max(alo, ahi));
    mpq_class tol = scale;
    tol /= mpq_class(mpz_class(1) << bits);
    bool sign_known = out.lo > 0 || out.hi < 0;
    if (sign_known && width <= tol) break;
    k *= 2;  // a is nonzero, so this terminates
  }
  out.sign = out.lo > 0 ? 1 : -1;
  return out;
}

int sign(const QuadField& a) { return sign_and_interval(a, 16).sign; }

mpq_class distance_to_integers_lower(const QuadField& a, int bits) {
  if (a.is_rational()) {
    mpq_class q = a.rational_part();
    mpz_class fl;
    mpz_fdiv_q(fl.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    mpq_class frac = q - mpq_class(fl);
    mpq_class other = 1 - frac;
    return std::min(frac, other);
  }
  for (int b = bits;; b *= 2) {
    SignInterval iv = sign_and_interval(a, b);
    mpz_class fl, fh;
    mpz_fdiv_q(fl.get_mpz_t(), iv.lo.get_num_mpz_t(), iv.lo.get_den_mpz_t());
    mpz_fdiv_q(fh.get_mpz_t(), iv.hi.get_num_mpz_t(), iv.hi.get_den_mpz_t());
    if (fl != fh || mpq_class(fl) == iv.lo) continue;  // an integer may lie inside
    mpq_class below = iv.lo - fl, above = fl + 1 - iv.hi;
    return std::min(below, above);
  }
}

// ---- conditions ---------------------------------------------------------

QuadField dot(const std::vector<long>& n, const std::vector<QuadField>& omega) {
  if (n.size() != omega.size()) throw std::invalid_argument("dot: size mismatch");
  QuadField s;
  for (std::size_t k = 0; k < n.size(); ++k)
    if (n[k]) s += omega[k] * mpq_class(n[k]);
  return s;
}

namespace {
bool integral(const QuadField& a) { return a.is_rational() && a.rational_part().get_den() == 1; }
}  // namespace

bool check_linear_nonvanishing(const std::vector<long>& n, const FrequencyBasis& basis) {
  bool any = false;
  for (long v : n) any = any || v != 0;
  if (!any) throw std::invalid_argument("check_linear_nonvanishing: n must be nonzero");
  return !integral(dot(n, basis.omega0));
}

bool check_quadratic_nonequality(const std::vector<long>& n, const FrequencyBasis& basis) {
  if (n.size() != basis.omega0.size()) throw std::invalid_argument("check_quadratic_nonequality: size mismatch");
  QuadField s;
  bool any = false;
  for (std::size_t k = 0; k < n.size(); ++k)
    for (std::size_t l = k + 1; l < n.size(); ++l) {
      if (!n[k] || !n[l]) continue;
      any = true;
      s += basis.omega0[k] * basis.omega0[l] * mpq_class(n[k] * n[l]);
    }
  if (!any) throw std::invalid_argument("check_quadratic_nonequality: n has no cross terms");
  return !integral(s);
}

RationalSquareReport classify_rational_square(const std::vector<long>& n, const FrequencyBasis& basis) {
  QuadField v = dot(n, basis.omega0);
  RationalSquareReport r;
  r.rational = (v * v).is_rational();
  if (r.rational) {
    int nz = 0, idx = -1;
    for (std::size_t k = 0; k < n.size(); ++k)
      if (n[k]) {
        ++nz;
        idx = static_cast<int>(k);
      }
    if (nz == 1) r.singleton = idx;
  }
  return r;
}

}  // namespace kgqp
