#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kgqp {

struct FrequencyBasis;

// ---- square-free utilities ----------------------------------------------

struct IntegerFactorization {
  std::uint64_t n = 1;
  std::vector<std::pair<std::uint64_t, int>> factors;  // primes strictly increasing
};

// Bound of the trial-division prime table. Changing it rebuilds the table.
void set_prime_table_bound(std::uint64_t bound);
std::uint64_t prime_table_bound();

// Throws std::domain_error for n == 0 and when a cofactor above bound^2 cannot
// be classified (not prime and not the square of a prime).
IntegerFactorization factorize(std::uint64_t n);
bool is_square_free(std::uint64_t n);
// n = f^2 * m with m square-free.
std::pair<std::uint64_t, std::uint64_t> square_part(std::uint64_t n);

// ---- multi-quadratic field ----------------------------------------------

// Exact element sum_m q_m sqrt(m). Radicand 1 holds the rational part. The
// map never stores zero coefficients or non-square-free radicands, so two
// elements are equal iff their maps are equal.
class QuadField {
 public:
  using Terms = std::map<std::uint64_t, mpq_class>;

  QuadField() = default;
  QuadField(long v);  // NOLINT: implicit from integers is convenient
  explicit QuadField(const mpq_class& q);

  static QuadField sqrt_of(std::uint64_t n);  // sqrt(n), reduced
  // q * sqrt(m) with m already square-free (checked).
  static QuadField term(const mpq_class& q, std::uint64_t m);

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_rational() const;
  mpq_class rational_part() const;
  mpq_class coefficient(std::uint64_t m) const;

  QuadField& operator+=(const QuadField& o);
  QuadField& operator-=(const QuadField& o);
  QuadField& operator*=(const QuadField& o);
  QuadField& operator*=(const mpq_class& q);
  QuadField operator-() const;

  friend QuadField operator+(QuadField a, const QuadField& b) { return a += b; }
  friend QuadField operator-(QuadField a, const QuadField& b) { return a -= b; }
  friend QuadField operator*(const QuadField& a, const QuadField& b);
  friend QuadField operator*(QuadField a, const mpq_class& q) { return a *= q; }
  friend bool operator==(const QuadField& a, const QuadField& b) { return a.terms_ == b.terms_; }

  double to_double() const;
  long double to_long_double() const;
  std::string to_string() const;

 private:
  void add_term(std::uint64_t m, const mpq_class& q);
  Terms terms_;
};

inline bool is_zero(const QuadField& a) { return a.is_zero(); }

struct SignInterval {
  int sign = 0;
  mpq_class lo, hi;
};

// Rigorous enclosure of the real value with width below 2^-bits (relative to
// max(1, |value|)), refined further until the sign is certain.
SignInterval sign_and_interval(const QuadField& a, int bits = 64);
int sign(const QuadField& a);
inline int compare(const QuadField& a, const QuadField& b) { return sign(a - b); }

// Lower bound (rigorous) of the distance from a to the nearest integer;
// exactly 0 only when a is an integer.
mpq_class distance_to_integers_lower(const QuadField& a, int bits = 64);

// ---- the two arithmetic conditions on a basis ---------------------------

QuadField dot(const std::vector<long>& n, const std::vector<QuadField>& omega);

// ||sum n_k w_k||_T != 0. Throws std::invalid_argument for n == 0.
bool check_linear_nonvanishing(const std::vector<long>& n, const FrequencyBasis& basis);
// ||sum_{k<l} n_k n_l w_k w_l||_T != 0. Throws when no cross term is present.
bool check_quadratic_nonequality(const std::vector<long>& n, const FrequencyBasis& basis);

struct RationalSquareReport {
  bool rational = false;
  std::optional<int> singleton;  // index k when n = n_k e_k
};
// Reports whether (n.w)^2 is rational and, if so, which index carries n.
RationalSquareReport classify_rational_square(const std::vector<long>& n,
                                              const FrequencyBasis& basis);

}  // namespace kgqp
