#include <doctest.h>

#include <cmath>

#include "kgqp/newton.hpp"

using namespace kgqp;

namespace {

const FrequencyBasis& desk() {
  static const auto fb = FrequencyBasis::from_modes(1, 2, {{1}, {3}, {4}});
  return fb;
}

std::vector<long double> to_ld(const std::vector<double>& v) { return {v.begin(), v.end()}; }

void check_pinned(const SolutionState& st, const FrequencyBasis& basis) {
  for (int k = 0; k < basis.b; ++k) CHECK(st.u.at(basis_point(basis, k)) == st.a[k] / 2);
}

}  // namespace

TEST_CASE("parameter validation") {
  SolverParameters p;
  CHECK_NOTHROW(p.validate(3));
  CHECK(p.initial_scale() == 10);
  CHECK(p.amplitudes(3).size() == 3);
  for (double v : p.amplitudes(3)) CHECK((v > 0 && v < p.delta));
  auto bad = p;
  bad.kappa = 0.85;  // kappa > sigma
  CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);
  bad = p;
  bad.tau = 0.7;  // tau > 1/s
  CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);
  bad = p;
  bad.a = {0.5, 0.001, 0.001};
  CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);
  bad = p;
  bad.M = 1;
  CHECK_THROWS_AS(bad.validate(3), std::invalid_argument);
}

TEST_CASE("Diophantine gate") {
  auto g = diophantine_gate({std::sqrt(2.0L), std::sqrt(5.0L)}, 50, 1e-2, 5);
  CHECK(g.pass);
  CHECK(g.worst >= 1.0);
  CHECK(g.worst_n.size() == 2);
  auto r = diophantine_gate({1.0L, 0.5L}, 10, 1e-2, 5);
  CHECK_FALSE(r.pass);
  CHECK(r.worst == 0.0);

  auto fit = small_divisor_fit(desk(), 10);
  CHECK_FALSE(fit.shell_min.empty());
  for (auto& [n1, v] : fit.shell_min) CHECK(v > 0);
  CHECK(std::isfinite(fit.q));
}

TEST_CASE("quadratic gate") {
  std::vector<QuadField> w0{QuadField::sqrt_of(2), QuadField::sqrt_of(5)};
  // chi_k^2 - s_k vanishes at the unperturbed frequencies
  CHECK_FALSE(quadratic_gate_exact(w0, 2, 4, 1e-2, 2, 1, 50, 1).pass);
  std::vector<QuadField> res{QuadField::sqrt_of(2), QuadField::term(2, 2)};
  CHECK_FALSE(quadratic_gate_exact(res, 2, 4, 1e-2, 2, 1, 50, 1).pass);
  // a shifted frequency vector clears the bound
  SolutionState st = initial_state(desk(), {9e-3, 8e-3, 7e-3}, Nonlinearity{});
  auto g = quadratic_gate(st.omega, 2, 4, 1e-2, 2, 1, 500, 3);
  CHECK(g.pass);
  CHECK(g.worst > 1.0);
}

TEST_CASE("zero steps returns the initial state") {
  SolverParameters p;
  p.r_max = 0;
  Nonlinearity nl;
  auto res = run_newton(p, desk(), nl);
  REQUIRE(res.trace.size() == 1);
  CHECK(res.status == "r_max");
  SolutionState st = initial_state(desk(), res.a_used, nl);
  CHECK(res.trace[0].residual == doctest::Approx(l2_norm(residual_accurate(st, desk(), nl))));
  for (int k = 0; k < 3; ++k) CHECK(res.state.omega[k] == st.omega[k]);
}

TEST_CASE("one Newton step") {
  SolverParameters p;
  p.r_max = 1;
  Nonlinearity nl;
  auto res = run_newton(p, desk(), nl);
  REQUIRE(res.trace.size() == 2);
  const auto& t = res.trace;
  CHECK(t[1].accepted);
  CHECK(t[1].N == 12);
  CHECK(t[1].residual / t[0].residual <= std::pow(p.delta, 1.5));
  CHECK(t[1].du_l2 <= std::pow(p.delta, 1.75));
  CHECK(t[1].residual <= std::pow(p.delta, 4.5));
  CHECK(t[1].gate_diophantine);
  CHECK(t[1].gate_quadratic);
  check_pinned(res.state, desk());

  // the frequencies solve the equations on S
  auto F = residual_accurate(res.state, desk(), nl);
  for (int k = 0; k < 3; ++k) CHECK(std::fabs(double(F.at(basis_point(desk(), k)))) <= 1e-10 * t[1].residual);
  for (auto& [x, v] : res.state.u.terms()) CHECK(x.inf_norm() <= 12);

  auto pc = pde_check(res.state, desk(), nl);
  CHECK(pc.ok());
  CHECK(pc.max_residual > 0);
}

TEST_CASE("repeated steps on one box converge to its fixed point") {
  Nonlinearity nl;
  SolverParameters p;
  SolutionState st = initial_state(desk(), {9e-3, 9e-3, 9e-3}, nl);
  auto r1 = newton_step(st, 12, desk(), nl, p);
  auto r2 = newton_step(st, 12, desk(), nl, p);
  auto r3 = newton_step(st, 12, desk(), nl, p);
  CHECK(r2.du_l2 <= p.delta * r1.du_l2);
  CHECK(r3.du_l2 <= 1e-3 * r2.du_l2 + 1e-20);
  check_pinned(st, desk());
}

TEST_CASE("higher order term") {
  SolverParameters p;
  p.r_max = 2;
  Nonlinearity nl;
  std::vector<CosineSeries::Term> t{{Point::make({0, 0, 0}, {0}, {3, 1}), p.delta}};
  nl.higher.emplace_back(4, CosineSeries::from_terms({3, 1}, t));
  auto res = run_newton(p, desk(), nl);
  REQUIRE(res.trace.size() >= 3);
  CHECK(res.trace[1].N == 16);
  CHECK(res.trace[1].residual / res.trace[0].residual <= std::pow(p.delta, 1.5));
  CHECK(res.trace[2].residual / res.trace[1].residual <= p.delta);
  check_pinned(res.state, desk());
  CHECK(pde_check(res.state, desk(), nl).ok());
}
