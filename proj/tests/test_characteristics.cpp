#include <doctest.h>

#include <algorithm>
#include <set>

#include "kgqp/characteristics.hpp"
#include "oracles.hpp"

using namespace kgqp;

namespace {

const Dims k11{1, 1};
Point P(long n, long j) { return Point::make({n}, {j}, k11); }
const FrequencyBasis& pell() {
  static const auto fb = FrequencyBasis::from_modes(1, 2, {{1}});
  return fb;
}
const FrequencyBasis& desk() {
  static const auto fb = FrequencyBasis::from_modes(1, 2, {{1}, {3}, {4}});
  return fb;
}

}  // namespace

TEST_CASE("Pell characteristics match brute force") {
  auto pts = enumerate_characteristics(pell(), QuadField(), 50);
  std::set<Point> got(pts.begin(), pts.end());
  std::set<Point> want;
  for (auto [n, j] : oracle::pell_points(50)) want.insert(P(n, j));
  CHECK(want.size() == 12);
  CHECK(got == want);
}

TEST_CASE("zero-theta characteristics are singletons in n") {
  const auto& fb = desk();
  auto pts = enumerate_characteristics(fb, QuadField(), 12);
  std::set<Point> got(pts.begin(), pts.end());
  Dims dims{3, 1};
  for (int k = 0; k < 3; ++k) {
    CHECK(got.count(basis_point(fb, k)));
    CHECK(got.count(basis_point(fb, k, -1)));
  }
  for (auto& x : pts) {
    int nz = 0;
    for (long v : x.n(dims)) nz += v != 0;
    CHECK(nz == 1);
  }
  // brute force over the box with the floating symbol as a screen, exact confirmation
  std::size_t count = 0;
  const auto w = fb.omega0_double();
  for (long a = -12; a <= 12; ++a)
    for (long b = -12; b <= 12; ++b)
      for (long c = -12; c <= 12; ++c)
        for (long j = -12; j <= 12; ++j) {
          Point x = Point::make({a, b, c}, {j}, dims);
          if (std::fabs(symbol(x, dims, w)) < 1e-9 && symbol_exact(x, dims, fb.omega0).is_zero()) ++count;
        }
  CHECK(count == pts.size());
}

TEST_CASE("adjacency set") {
  auto g = adjacency_set(pell());
  std::set<Point> pts(g.points.begin(), g.points.end());
  CHECK(pts == std::set<Point>{P(2, -2), P(-2, 2)});
  // every member satisfies eta = -sum nu_i j_i
  auto gt = adjacency_set(desk(), 3);
  Dims dims{3, 1};
  for (auto& x : gt.points) {
    IVec nu = x.n(dims);
    long eta = x.j(dims)[0];
    CHECK(eta == -(nu[0] * 1 + nu[1] * 3 + nu[2] * 4));
    CHECK_FALSE(x.is_zero());
    CHECK(gt.contains(-x));
  }
}

TEST_CASE("cluster decomposition") {
  auto g = adjacency_set(pell());
  CHECK(cluster_decomposition({}, g).empty());
  auto pts = enumerate_characteristics(pell(), QuadField(), 50);
  auto cl = cluster_decomposition(pts, g, &pell());
  CHECK(cl.size() == 11);
  CHECK(cl[0].members.size() == 2);
  CHECK(cl[0].is_exceptional_S);
  for (std::size_t i = 1; i < cl.size(); ++i) CHECK(cl[i].members.size() == 1);

  const auto& fb = desk();
  std::vector<Point> S;
  for (int k = 0; k < 3; ++k) {
    S.push_back(basis_point(fb, k));
    S.push_back(basis_point(fb, k, -1));
  }
  auto cs = cluster_decomposition(S, adjacency_set(fb), &fb);
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].members.size() == 6);
  CHECK(cs[0].is_exceptional_S);
}

TEST_CASE("cluster bounds at small boxes") {
  for (long N : {6L, 10L}) {
    auto r = verify_cluster_bounds(desk(), N);
    CHECK(r.ok());
    CHECK(r.s_unique);
    CHECK(r.c0_max <= 6);
    CHECK(r.theta_max <= 12);
    CHECK(r.levels > 0);
  }
  auto r = verify_cluster_bounds(pell(), 50, {QuadField()});
  CHECK(r.ok());
  CHECK(r.c0_points == 12);
  // theta = -w1 + sqrt2 collapses to zero
  auto z = enumerate_characteristics(pell(), -pell().omega0[0] + QuadField::sqrt_of(2), 50);
  CHECK(z.size() == 12);
}

TEST_CASE("spacing dichotomy") {
  auto fb = FrequencyBasis::from_modes(1, 2, {{1}, {2}});
  auto r0 = spacing_dichotomy({0, 0}, {3}, {3}, fb);
  CHECK(r0.any_zero);
  auto r1 = spacing_dichotomy({1, 1}, {0}, {0}, fb);
  CHECK_FALSE(r1.any_zero);
  for (auto& c : r1.choices) {
    CHECK(c.abs_lower > 0);
    double v = std::sqrt(2.0) + std::sqrt(5.0) + c.s1 + c.s2;
    CHECK(c.abs_lower.get_d() <= std::fabs(v) + 1e-12);
    CHECK(c.abs_lower.get_d() >= std::fabs(v) * 0.999);
  }
  CHECK_FALSE(r1.I.is_zero());

  const auto& fb3 = desk();
  for (long a = -2; a <= 2; ++a)
    for (long b = -2; b <= 2; ++b)
      for (long c = -2; c <= 2; ++c) {
        if (!a || !b || !c) continue;
        for (long j = 0; j <= 3; ++j)
          for (long jp = 0; jp <= 3; ++jp) {
            auto r = spacing_dichotomy({a, b, c}, {j}, {jp}, fb3);
            CHECK_FALSE(r.any_zero);
            CHECK(r.d1_consistent);
          }
      }
}

TEST_CASE("chain probe") {
  ChainProbeParams prm;
  prm.B = 3;
  prm.W = 2;
  prm.N = 50;
  auto r = chain_probe(prm, pell(), pell().omega0_double());
  // the four points (+-1, +-1) are pairwise within distance 2; larger Pell points are isolated
  CHECK(r.singular_points == 12);
  CHECK(r.l_max == 4);
  prm.B = 2;
  prm.W = 1.5;
  CHECK(chain_probe(prm, pell(), pell().omega0_double()).l_max == 1);

  ChainProbeParams deg;
  deg.B = 2e9;
  deg.W = 1e9;
  deg.delta = 1;
  deg.N = 3;
  auto rd = chain_probe(deg, pell(), pell().omega0_double());
  CHECK(rd.components == 1);
  CHECK(rd.singular_points == 49);

  prm.B = 1;
  CHECK_THROWS_AS(chain_probe(prm, pell(), pell().omega0_double()), std::invalid_argument);
}
