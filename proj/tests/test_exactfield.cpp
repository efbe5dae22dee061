#include <doctest.h>

#include <cmath>
#include <random>

#include "kgqp/basis.hpp"
#include "kgqp/exactfield.hpp"

using namespace kgqp;

namespace {

QuadField random_element(std::mt19937_64& rng) {
  static const std::uint64_t rad[] = {1, 2, 3, 5, 6, 7, 10};
  std::uniform_int_distribution<int> num(-9, 9), den(1, 5), pick(0, 6), count(1, 4);
  QuadField a;
  int c = count(rng);
  for (int i = 0; i < c; ++i) a += QuadField::term(mpq_class(num(rng), den(rng)), rad[pick(rng)]);
  return a;
}

}  // namespace

TEST_CASE("square-free classification") {
  CHECK(is_square_free(10));
  CHECK_FALSE(is_square_free(50));
  CHECK(is_square_free(1));
  CHECK(square_part(50) == std::pair<std::uint64_t, std::uint64_t>{5, 2});
  CHECK_THROWS_AS(factorize(0), std::domain_error);
  auto f = factorize(2ULL * 2 * 3 * 999983);
  REQUIRE(f.factors.size() == 3);
  CHECK(f.factors[0] == std::pair<std::uint64_t, int>{2, 2});
  CHECK(f.factors[2].first == 999983);
  CHECK(is_square_free(999983ULL * 999979ULL));
  CHECK_FALSE(is_square_free(999983ULL * 999983ULL));
}

TEST_CASE("square-free oracle agrees with brute force") {
  for (std::uint64_t n = 1; n < 5000; ++n) {
    bool sf = true;
    for (std::uint64_t q = 2; q * q <= n; ++q)
      if (n % (q * q) == 0) sf = false;
    CHECK_MESSAGE(is_square_free(n) == sf, n);
  }
}

TEST_CASE("field arithmetic reduces radicands") {
  const auto s2 = QuadField::sqrt_of(2), s5 = QuadField::sqrt_of(5), s10 = QuadField::sqrt_of(10);
  CHECK(s2 * s2 == QuadField(2));
  CHECK(s2 * s10 == QuadField::term(2, 5));
  CHECK((s2 + s5) * (s2 + s5) == QuadField(7) + QuadField::term(2, 10));
  CHECK(((s2 + s5) - (s5 + s2)).is_zero());
  CHECK((QuadField(3) + QuadField::term(0, 2)).is_rational());
  CHECK_FALSE((s2 + s5).is_rational());
  CHECK(QuadField::sqrt_of(50) == QuadField::term(5, 2));
}

TEST_CASE("field laws hold exactly on random elements") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 300; ++t) {
    QuadField a = random_element(rng), b = random_element(rng), c = random_element(rng);
    CHECK((a + b) + c == a + (b + c));
    CHECK(a * b == b * a);
    CHECK((a * b) * c == a * (b * c));
    CHECK(a * (b + c) == a * b + a * c);
    CHECK((a - a).is_zero());
  }
}

TEST_CASE("square roots square back for sampled square-free m") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::uint64_t> pick(2, 1000000);
  int checked = 0;
  while (checked < 300) {
    std::uint64_t m = pick(rng);
    if (!is_square_free(m)) continue;
    QuadField r = QuadField::sqrt_of(m);
    CHECK(r * r == QuadField(static_cast<long>(m)));
    ++checked;
  }
}

TEST_CASE("sign and enclosure") {
  SignInterval s = sign_and_interval(QuadField::sqrt_of(10), 64);
  CHECK(s.sign == 1);
  CHECK(s.lo >= mpq_class(316227, 100000));
  CHECK(s.hi <= mpq_class(316228, 100000));
  CHECK(sign_and_interval(QuadField::sqrt_of(2) - QuadField::sqrt_of(2)).sign == 0);
  SignInterval neg = sign_and_interval(QuadField::sqrt_of(2) - QuadField::sqrt_of(5));
  CHECK(neg.sign == -1);
  CHECK(neg.hi < 0);

  // nearly cancelling: sqrt(2) - 99/70 ~ -7.2e-5, sqrt(2) - 140/99 ~ 7.2e-5 and the Pell unit 1/(3+2sqrt2)^8
  CHECK(sign(QuadField::sqrt_of(2) - QuadField(mpq_class(99, 70))) == -1);
  CHECK(sign(QuadField::sqrt_of(2) - QuadField(mpq_class(140, 99))) == 1);
  QuadField u = QuadField(3) + QuadField::term(2, 2), v = QuadField(3) - QuadField::term(2, 2);
  QuadField p = u, q = v;
  for (int i = 0; i < 7; ++i) {
    p *= u;
    q *= v;
  }
  CHECK(sign(q) == 1);  // (3 - 2 sqrt2)^8 ~ 7.7e-7
  CHECK(sign(-q) == -1);

  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    QuadField a = random_element(rng);
    SignInterval iv = sign_and_interval(a, 64);
    if (a.is_zero()) {
      CHECK(iv.sign == 0);
      continue;
    }
    CHECK(iv.sign != 0);
    const long double x = a.to_long_double();
    CHECK(iv.lo.get_d() <= static_cast<double>(x) + 1e-12);
    CHECK(iv.hi.get_d() >= static_cast<double>(x) - 1e-12);
    if (std::fabs(x) > 1e-9) CHECK(iv.sign == (x > 0 ? 1 : -1));
  }
}

TEST_CASE("distance to the integers") {
  CHECK(distance_to_integers_lower(QuadField(3)) == 0);
  CHECK(distance_to_integers_lower(QuadField(mpq_class(7, 2))) == mpq_class(1, 2));
  mpq_class d = distance_to_integers_lower(QuadField::sqrt_of(2));
  CHECK(d.get_d() == doctest::Approx(std::sqrt(2.0) - 1).epsilon(1e-12));
  CHECK(d.get_d() <= std::sqrt(2.0) - 1 + 1e-15);
}

TEST_CASE("linear and quadratic arithmetic conditions") {
  auto fb = FrequencyBasis::from_modes(1, 2, {{1}, {2}});
  CHECK(check_linear_nonvanishing({1, -1}, fb));
  CHECK(check_linear_nonvanishing({2, 0}, fb));
  CHECK_THROWS_AS(check_linear_nonvanishing({0, 0}, fb), std::invalid_argument);
  CHECK(check_quadratic_nonequality({1, 1}, fb));
  CHECK_THROWS_AS(check_quadratic_nonequality({1, 0}, fb), std::invalid_argument);

  auto r = classify_rational_square({3, 0}, fb);
  CHECK(r.rational);
  REQUIRE(r.singleton.has_value());
  CHECK(*r.singleton == 0);
  CHECK_FALSE(classify_rational_square({1, 1}, fb).rational);
}

TEST_CASE("arithmetic conditions on random n over a square-free basis") {
  auto fb = FrequencyBasis::from_modes(1, 2, {{1}, {2}, {4}});
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<long> c(-20, 20);
  for (int t = 0; t < 1000; ++t) {
    IVec n(3);
    int nz = 0;
    while (nz < 2) {
      nz = 0;
      for (auto& v : n) nz += (v = c(rng)) != 0;
    }
    CHECK(check_linear_nonvanishing(n, fb));
    CHECK(check_quadratic_nonequality(n, fb));
  }
}
