#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "kgqp/amplitude.hpp"

using namespace kgqp;

namespace {

const FrequencyBasis& pell() {
  static const auto fb = FrequencyBasis::from_modes(1, 2, {{1}});
  return fb;
}
const FrequencyBasis& desk() {
  static const auto fb = FrequencyBasis::from_modes(1, 2, {{1}, {3}, {4}});
  return fb;
}

}  // namespace

TEST_CASE("frequency of a single mode") {
  Nonlinearity nl;
  for (double a : {0.3, 0.1, 0.01}) {
    auto w = q_solve(initial_series(pell(), {a}), {a}, pell(), nl);
    // cos^3 = 3/4 cos + 1/4 cos 3 gives w^2 = 2 + 3 a^2 / 4
    CHECK(w[0] == doctest::Approx(std::sqrt(2 + 0.75 * a * a)).epsilon(1e-14));
    auto shift = q_shift(initial_series(pell(), {a}).cast<long double>(), {(long double)a}, pell(), nl);
    CHECK(double(shift[0]) == doctest::Approx(0.75 * a * a).epsilon(1e-14));
    auto dw = frequency_shift(pell(), shift);
    CHECK(double(dw[0]) == doctest::Approx(std::sqrt(2 + 0.75 * a * a) - std::sqrt(2.0)).epsilon(1e-12));
  }
  const double a = 1e-3;
  auto w = q_solve(initial_series(pell(), {a}), {a}, pell(), nl);
  CHECK((w[0] - std::sqrt(2.0)) == doctest::Approx(3 * a * a / (8 * std::sqrt(2.0))).epsilon(1e-5));
  auto tiny = q_solve(initial_series(desk(), {1e-8, 2e-8, 3e-8}), {1e-8, 2e-8, 3e-8}, desk(), nl);
  for (int k = 0; k < 3; ++k) CHECK(tiny[k] == doctest::Approx(std::sqrt(double(desk().radicands[k]))));
}

TEST_CASE("closed forms of the B coefficients") {
  std::vector<double> a{0.3, -0.2, 0.5};
  auto B = b_coefficients(2, a);
  Eigen::MatrixXd M = m_matrix(a);
  for (int k = 0; k < 3; ++k) {
    double s = 0;
    for (int i = 0; i < 3; ++i)
      if (i != k) s += a[i] * a[i];
    CHECK(B[k] == doctest::Approx(3 * a[k] * a[k] + 6 * s));
    double via_m = M(k, k);
    for (int i = 0; i < 3; ++i)
      if (i != k) via_m += M(k, i) * a[i] / a[k];
    CHECK(B[k] == doctest::Approx(3 * via_m));
    CHECK(M(k, k) == doctest::Approx(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]));
  }
  CHECK(M(0, 1) == doctest::Approx(a[0] * a[1]));

  for (int b : {1, 2, 3, 5}) {
    Eigen::MatrixXd J = b_jacobian(2, std::vector<double>(b, 1.0));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    auto ev = es.eigenvalues();
    CHECK(ev(b - 1) == doctest::Approx(6 + 12.0 * (b - 1)).epsilon(1e-10));
    for (int i = 0; i + 1 < b; ++i) CHECK(ev(i) == doctest::Approx(-6.0).epsilon(1e-10));
  }
}

TEST_CASE("leading diagonal coefficient vanishes only at unit n") {
  for (long n = -5; n <= 5; ++n) {
    double R = leading_diagonal_coefficient(2, n);
    CHECK(R == doctest::Approx(12.0 * (1 - n * n)));
    CHECK((std::fabs(R) < 1e-12) == (std::labs(n) == 1));
  }
}

TEST_CASE("frequency Jacobian") {
  Nonlinearity nl;
  for (double a : {0.05, 0.01}) {
    auto fj = frequency_jacobian({a}, pell(), nl);
    CHECK(fj.J(0, 0) == doctest::Approx(0.75 * a / std::sqrt(2 + 0.75 * a * a)).epsilon(1e-8));
  }
  // |det| scales like delta^{(p-1) b}
  std::vector<double> xs, ys;
  for (double delta : {1e-2, 3e-3, 1e-3}) {
    auto fj = frequency_jacobian({delta * 0.9, delta * 0.7, delta * 0.5}, desk(), nl);
    xs.push_back(std::log(delta));
    ys.push_back(std::log(std::fabs(fj.det)));
    CHECK(fj.inv_norm > 0);
  }
  double mx = (xs[0] + xs[1] + xs[2]) / 3, my = (ys[0] + ys[1] + ys[2]) / 3, sxy = 0, sxx = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  CHECK(sxy / sxx == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("cluster blocks off the exceptional set") {
  Nonlinearity nl;
  auto rep = block_decomposition(desk(), {1e-2, 1e-2, 1e-2}, 8, nl);
  CHECK_FALSE(rep.blocks.empty());
  CHECK(rep.all_det_nonzero);
  CHECK(rep.max_size <= 6);
  for (auto& blk : rep.blocks) {
    for (double e : blk.diag_ones_check) CHECK(e < 1e-9);
    bool far = std::all_of(blk.n_k.begin(), blk.n_k.end(), [](long n) { return std::labs(n) > 1; });
    if (far) CHECK(blk.members.size() <= 2);
    for (std::size_t i = 0; i < blk.members.size(); ++i)
      CHECK(blk.R[i] == doctest::Approx(12.0 * (1 - blk.n_k[i] * blk.n_k[i])));
  }
}
