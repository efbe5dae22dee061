#include <doctest.h>

#include <cmath>
#include <random>

#include "kgqp/lattice.hpp"
#include "oracles.hpp"

using namespace kgqp;

namespace {

const Dims k11{1, 1};

Point P(long n, long j) { return Point::make({n}, {j}, k11); }

CosineSeries cos_phi() {
  std::vector<CosineSeries::Term> t{{P(-1, 1), 0.5}};
  return CosineSeries::from_terms(k11, t);
}

CosineSeries delta0(Dims dims) {
  std::vector<CosineSeries::Term> t{{Point::make(IVec(dims.b, 0), IVec(dims.d, 0), dims), 1.0}};
  return CosineSeries::from_terms(dims, t);
}

}  // namespace

TEST_CASE("canonical representatives") {
  CHECK(is_canonical(P(1, -3)));
  CHECK_FALSE(is_canonical(P(-1, 3)));
  CHECK(canonical(P(-1, 3)) == P(1, -3));
  CHECK(canonical(P(0, -2)) == P(0, 2));
  CHECK(P(0, 0).is_zero());
}

TEST_CASE("convolution against trigonometric identities") {
  const CosineSeries u = cos_phi();
  CHECK(convolve(delta0(k11), u) == u);
  CosineSeries u2 = convolve(u, u);
  CHECK(u2.size() == 2);
  CHECK(u2.at(P(0, 0)) == doctest::Approx(0.5));
  CHECK(u2.at(P(2, -2)) == doctest::Approx(0.25));
  CosineSeries u3 = power(u, 3);
  CHECK(u3.size() == 2);
  CHECK(u3.at(P(-1, 1)) == doctest::Approx(0.375));
  CHECK(u3.at(P(3, -3)) == doctest::Approx(0.125));
  CHECK(power(u, 1) == u);
  CHECK(power(delta0(k11), 5) == delta0(k11));
  CHECK_THROWS_AS(power(u, 0), std::invalid_argument);
  CHECK_THROWS_AS(convolve(u, delta0({2, 1})), std::invalid_argument);
}

TEST_CASE("convolution matches the sampling oracle") {
  std::mt19937_64 rng(21);
  const Dims shapes[] = {{1, 1}, {2, 1}, {1, 2}};
  for (int t = 0; t < 30; ++t) {
    const Dims dims = shapes[t % 3];
    CosineSeries A = oracle::random_series(dims, 5, 6, rng), B = oracle::random_series(dims, 5, 6, rng);
    CosineSeries C = convolve(A, B);
    auto ref = oracle::product_by_sampling(A, B, 5);
    double err = 0;
    for (auto& [x, v] : ref) err = std::max(err, std::fabs(v - C.at(x)));
    for (auto& [x, v] : C.terms()) CHECK(ref.count(x));
    CHECK(err < 1e-10);
  }
}

TEST_CASE("convolution is commutative, bilinear and exact on rationals") {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<long> c(-3, 3), q(-5, 5);
  const Dims dims{2, 1};
  auto rnd = [&] {
    ExactSeries::Accumulator acc;
    for (int i = 0; i < 5; ++i) {
      Point x = canonical(Point::make({c(rng), c(rng)}, {c(rng)}, dims));
      acc[x] += mpq_class(q(rng), 7);
    }
    return ExactSeries::from_accumulator(dims, std::move(acc));
  };
  for (int t = 0; t < 20; ++t) {
    ExactSeries A = rnd(), B = rnd(), C = rnd();
    CHECK(convolve(A, B) == convolve(B, A));
    ExactSeries BC = B;
    BC += C;
    ExactSeries lhs = convolve(A, BC), rhs = convolve(A, B);
    rhs += convolve(A, C);
    CHECK(lhs == rhs);
    CHECK(convolve(convolve(A, B), C) == convolve(A, convolve(B, C)));
  }
}

TEST_CASE("power support lies in the scaled hull") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 10; ++t) {
    CosineSeries u = oracle::random_series({2, 1}, 2, 4, rng);
    long r = 0;
    for (auto& [x, v] : u.terms()) r = std::max(r, x.inf_norm());
    for (int m = 1; m <= 3; ++m) {
      CosineSeries um = power(u, m);
      for (auto& [x, v] : um.terms()) {
        CHECK(x.inf_norm() <= m * r);
        CHECK((is_canonical(x) || x.is_zero()));
      }
    }
  }
}

TEST_CASE("drop tolerance reports a bound on the discarded mass") {
  std::mt19937_64 rng(24);
  CosineSeries u = oracle::random_series({1, 1}, 5, 12, rng);
  CosineSeries exact = power(u, 3);
  ConvolveOptions opt;
  opt.drop_tol = 1e-2;
  ConvolveStats st;
  CosineSeries approx = power(u, 3, opt, &st);
  CosineSeries diff = exact;
  diff -= approx;
  CHECK(l1_norm_full(diff) <= st.dropped_l1 + 1e-12);
}

TEST_CASE("residual of the unperturbed solution") {
  const auto pell = FrequencyBasis::from_modes(1, 2, {{1}});
  Nonlinearity nl;
  const double a = 0.1;
  CosineSeries u0 = initial_series(pell, {a});
  CHECK(u0.at(P(-1, 1)) == doctest::Approx(a / 2));
  CHECK(exceptional_set(pell) == std::vector<Point>{P(1, -1)});
  CHECK(basis_point(pell, 0) == P(-1, 1));

  // the diagonal vanishes on the support: F(u0) = u0^{*3}
  CosineSeries F = residual(u0, pell.omega0_double(), nl);
  CosineSeries N3 = power(u0, 3);
  CHECK(F.size() == N3.size());
  for (auto& [x, v] : N3.terms()) CHECK(F.at(x) == doctest::Approx(v).epsilon(1e-12));
  // independent dense check: cos^3 = 3/4 cos + 1/4 cos 3
  CHECK(F.at(P(-1, 1)) == doctest::Approx(3 * a * a * a / 8));
  CHECK(F.at(P(-3, 3)) == doctest::Approx(a * a * a / 8));
  CHECK(l2_norm(F) == doctest::Approx(std::sqrt(10.0) * a * a * a / 8));

  // exact residual on the field
  ExactSeries u0e = initial_series_exact(pell, {mpq_class(1, 10)});
  FieldSeries Fe = residual_exact(u0e, pell.omega0, nl);
  CHECK(Fe.at(P(-1, 1)) == QuadField(mpq_class(3, 8000)));

  CHECK(residual(CosineSeries(k11), pell.omega0_double(), nl).empty());
}

TEST_CASE("nonlinearity validation") {
  Nonlinearity nl;
  nl.p = 3;
  CHECK_THROWS_AS(nl.validate(k11), std::invalid_argument);
  nl.p = 2;
  nl.higher.emplace_back(3, delta0(k11));
  CHECK_THROWS_AS(nl.validate(k11), std::invalid_argument);
  nl.higher.clear();
  nl.higher.emplace_back(4, cos_phi());  // time dependent coefficient
  CHECK_THROWS_AS(nl.validate(k11), std::invalid_argument);
}

TEST_CASE("weighted norm and decay exponent") {
  const Weight w{0.5, 1e-2};
  CHECK(weighted_norm(delta0(k11), w) == doctest::Approx(1.0));
  std::vector<CosineSeries::Term> t{{P(3, 5), -0.25}};
  CosineSeries s = CosineSeries::from_terms(k11, t);
  // |x| = 5 > 1/beta^2 = 4: weight exp(beta |log delta| 5)
  CHECK(weighted_norm(s, w) == doctest::Approx(0.25 * std::exp(0.5 * std::log(100.0) * 5)));
  CHECK(weighted_norm(s, Weight{0.4, 1e-2}) == doctest::Approx(0.25));

  std::mt19937_64 rng(25);
  CosineSeries r = oracle::random_series({2, 1}, 5, 20, rng);
  long double direct = 0;
  for (auto& [x, v] : r.terms()) direct += std::pow(static_cast<long double>(v) * w(x), 2);
  CHECK(weighted_norm(r, w) == doctest::Approx(static_cast<double>(std::sqrt(direct))).epsilon(1e-12));

  std::vector<CosineSeries::Term> d{{P(2, 0), std::exp(-std::pow(2.0, 1.5))}, {P(4, 0), std::exp(-std::pow(4.0, 1.4))}};
  DecayExponent e = sup_decay_exponent(CosineSeries::from_terms(k11, d));
  CHECK(e.c_hat == doctest::Approx(1.4));
  CHECK(e.argmin == P(4, 0));
}
