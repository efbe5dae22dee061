#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "kgqp/exactfield.hpp"
#include "kgqp/nondegen.hpp"

using namespace kgqp;

namespace {

// Gauss-Jordan rank over doubles, fine for small integer matrices
int small_rank(std::vector<std::vector<double>> m) {
  int r = 0;
  const int cols = m.empty() ? 0 : static_cast<int>(m[0].size());
  for (int c = 0; c < cols && r < static_cast<int>(m.size()); ++c) {
    int piv = -1;
    for (int i = r; i < static_cast<int>(m.size()); ++i)
      if (std::fabs(m[i][c]) > 1e-9) piv = i;
    if (piv < 0) continue;
    std::swap(m[piv], m[r]);
    for (int i = 0; i < static_cast<int>(m.size()); ++i) {
      if (i == r) continue;
      double f = m[i][c] / m[r][c];
      for (int k = 0; k < cols; ++k) m[i][k] -= f * m[r][k];
    }
    ++r;
  }
  return r;
}

}  // namespace

TEST_CASE("exact rational rank") {
  std::vector<std::vector<mpq_class>> a{{1, 2}, {2, 4}};
  CHECK(rational_rank(a) == 1);
  a = {{1, 0}, {0, 1}, {1, 1}};
  CHECK(rational_rank(a) == 2);
  a = {{mpq_class(1, 3), 1, 0}, {1, 3, 0}, {0, 0, 5}};
  CHECK(rational_rank(a) == 2);
  for (long x = -3; x <= 3; ++x)
    for (long y = -3; y <= 3; ++y) {
      std::vector<std::vector<mpq_class>> m{{1, 2, x}, {x, y, 1}, {y, 1, 2}};
      std::vector<std::vector<double>> md{{1, 2, double(x)}, {double(x), double(y), 1}, {double(y), 1, 2}};
      CHECK(rational_rank(m) == small_rank(md));
    }
}

TEST_CASE("condition (i)") {
  CHECK(check_condition_i(FrequencyBasis::from_modes(1, 2, {{1}, {2}, {4}})).ok());
  auto r = check_condition_i(FrequencyBasis::from_modes(2, 2, {{1, 0}, {2, 0}}));
  CHECK_FALSE(r.ok());
  CHECK(r.witness.find("(1,0)") != std::string::npos);
  CHECK(r.witness.find("(2,0)") != std::string::npos);
  // pairwise 2x2 determinants over the deduplicated J_k decide the d = 2 case
  auto fb = FrequencyBasis::from_modes(2, 2, {{1, 0}, {0, 1}, {1, 1}});
  auto ri = check_condition_i(fb);
  bool dependent = false;
  for (int k = 0; k < 3; ++k) {
    std::vector<IVec> J;
    for (int l = 0; l < 3; ++l)
      for (int s : {1, -1}) {
        IVec v{fb.modes[l][0] + s * fb.modes[k][0], fb.modes[l][1] + s * fb.modes[k][1]};
        if ((v[0] || v[1]) && std::find(J.begin(), J.end(), v) == J.end()) J.push_back(v);
      }
    for (std::size_t a = 0; a < J.size(); ++a)
      for (std::size_t b = a + 1; b < J.size(); ++b)
        if (J[a][0] * J[b][1] - J[a][1] * J[b][0] == 0) dependent = true;
  }
  CHECK(ri.ok() == !dependent);
}

TEST_CASE("condition (ii)") {
  CHECK(check_condition_ii(FrequencyBasis::from_modes(1, 2, {{1}, {2}, {4}, {6}})).ok());
  auto r = check_condition_ii(FrequencyBasis::from_modes(1, 2, {{1}, {7}}));
  CHECK_FALSE(r.ok());
  CHECK(r.witness.find("50") != std::string::npos);
  CHECK_FALSE(check_condition_ii(FrequencyBasis::from_modes(1, 2, {{1}, {1}})).ok());
  CHECK_FALSE(check_condition_ii(FrequencyBasis::from_modes(1, 2, {{2}, {1}})).ok());
}

TEST_CASE("condition (iii)") {
  auto good = FrequencyBasis::from_modes(1, 2, {{1}, {3}, {4}});
  auto r = check_condition_iii(good);
  CHECK(r.ok());
  CHECK(r.shortcut_hits > 0);
  // (1,2,4): a common point of 2d planes exists
  CHECK_FALSE(check_condition_iii(FrequencyBasis::from_modes(1, 2, {{1}, {2}, {4}})).ok());
  CHECK(check_condition_iii(good, 10).status == CheckStatus::cap);

  // every plane carries a nonzero normal and the stated offset
  for (int m : {-2, -1, 1, 2})
    for (auto& h : condition_iii_planes(good, 0, m)) {
      CHECK(h.eta[0] != 0);
      long expect_eta = m * good.modes[h.k][0] - h.ml * good.modes[h.l][0];
      CHECK(h.eta[0] == expect_eta);
      CHECK(h.L == 2 * m * h.eta[0] * good.modes[h.k][0] + (long(m) * m - long(h.ml) * h.ml));
    }
}

TEST_CASE("basis selection") {
  SelectOptions o;
  o.b = 1;
  auto one = select_basis(o);
  CHECK(one.modes == std::vector<IVec>{{1}});
  CHECK(one.radicands == std::vector<std::uint64_t>{2});

  o.b = 3;
  auto three = select_basis(o);
  CHECK(three.verified());
  CHECK(three.modes == std::vector<IVec>{{1}, {3}, {4}});
  CHECK(three.radicands == std::vector<std::uint64_t>{2, 10, 17});
  // independent re-verification
  auto copy = FrequencyBasis::from_modes(1, 2, three.modes);
  CHECK(verify_basis(copy));

  o.b = 2;
  o.bound = 1;
  CHECK_THROWS_AS(select_basis(o), ExhaustionError);
}

TEST_CASE("verify_basis names the failing condition") {
  auto fb = FrequencyBasis::from_modes(1, 2, {{1}, {7}});
  std::string why;
  CHECK_FALSE(verify_basis(fb, 1000000, &why));
  CHECK(fb.cond_ii == "fail");
  CHECK(why.find("(ii)") != std::string::npos);
}
