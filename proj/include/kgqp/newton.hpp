#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kgqp/amplitude.hpp"
#include "kgqp/linop.hpp"

namespace kgqp {

struct SolverParameters {
  double delta = 1e-2;
  std::vector<double> a;  // empty: all components equal to delta
  double epsilon = 0.25, epsilon_prime = 0.5;
  double s = 1.5, sigma = 0.8, kappa = 0.7, tau = 0.4, c = 0.9;
  double beta = 0.1;  // weight exponent of l2(rho)
  double xi = 1e-2;   // Diophantine constant
  double gamma = 0;   // 0: 2b + 1
  long M = 2;
  int r_max = 3;
  double W = 2.0;
  long B = 2;
  double Cprime = 4.0;
  int quadratic_samples = 2000;
  unsigned seed = 1;
  int excision_budget = 5;
  // Stop once ||F|| falls below max(target, roundoff floor); 0 means floor only.
  double target = 0;
  double kernel_rel_tol = 1e-10;
  double drop_rel = 1e-22;  // relative product drop in residual convolutions

  // 0 < tau < 1/s < kappa < sigma < c < 1; throws std::invalid_argument.
  void validate(int b) const;
  std::vector<double> amplitudes(int b) const;
  long initial_scale() const;  // ceil(|log delta|^s)
};

struct GateResult {
  bool pass = true;
  double worst = 0;  // smallest observed value / bound ratio
  std::vector<long> worst_n;
  std::string detail;
};

// ||n.w||_T >= xi / |n|_inf^gamma for 0 < |n|_inf <= N, scanned shell by
// shell in long double; an exact integer hit fails regardless of xi.
GateResult diophantine_gate(const std::vector<long double>& omega, long N, double xi, double gamma);

// min over the box of |n.w0 +- sqrt(j^2+1)| off the characteristics, per l1
// shell of n, with the fitted lower envelope c' |n|_1^{-q}.
struct SmallDivisorFit {
  std::vector<std::pair<long, double>> shell_min;  // (|n|_1, min value)
  double q = 0, c_prime = 0;
};
SmallDivisorFit small_divisor_fit(const FrequencyBasis& basis, long N);

// |P(w)| > delta^p B^{-C'} for nonzero even quadratic P with integer
// coefficients in [-B^{2d+1}, B^{2d+1}]: all P with at most two monomials, then
// random dense ones. With exact frequencies every value is decided exactly.
GateResult quadratic_gate(const std::vector<long double>& omega, long B, double Cprime, double delta, int p, int d,
                          int samples, unsigned seed);
GateResult quadratic_gate_exact(const std::vector<QuadField>& omega, long B, double Cprime, double delta, int p,
                                int d, int samples, unsigned seed);

struct SolutionState {
  CosineSeriesL u;
  std::vector<long double> omega;
  std::vector<long double> a;
  int r = 0;
};

// u0(a) with the frequencies refit to it.
SolutionState initial_state(const FrequencyBasis& basis, const std::vector<double>& a, const Nonlinearity& nl);

// F(u) in long double. The diagonal is E(x) - D(2 n.w0 + D) with D = n.(w - w0)
// and E = j^2 + 1 - (n.w0)^2 exact on the characteristics.
CosineSeriesL residual_accurate(const SolutionState& st, const FrequencyBasis& basis, const Nonlinearity& nl,
                                double drop_rel = 0, double* dropped = nullptr);

struct StepReport {
  int r = 0;
  long N = 0;
  std::size_t points = 0, near = 0;
  double du_l2 = 0, du_weighted = 0;
  double residual_before = 0, residual_after = 0;
  double residual_after_weighted = 0;
  double dropped_mass = 0;
  double schur_contraction = 0, h_rcond = 0;
  int jacobi_sweeps = 0;
  bool accepted = true;
};

// The operator a Newton step inverts: even sector on the box minus S,
// restricted to the component reached from supp F, with the accurate symbol.
TruncatedOperator step_operator(const SolutionState& st, const CosineSeriesL& F, long N, const FrequencyBasis& basis,
                                const Nonlinearity& nl, const SolverParameters& prm);

// One Newton step on the box minus S: du = -T^{-1} F, S pinned, w refit.
// Throws ExcisionSignal when the reduced block is singular.
StepReport newton_step(SolutionState& st, long N, const FrequencyBasis& basis, const Nonlinearity& nl,
                       const SolverParameters& prm);

struct TraceRecord {
  int r = 0;
  long N = 0;
  double du_l2 = 0, du_weighted = 0;
  double residual = 0, residual_weighted = 0;
  std::vector<double> omega;
  double jacobian_det = 0;
  bool gate_diophantine = true, gate_quadratic = true;
  std::vector<std::string> excisions;
  double wall_seconds = 0;
  std::size_t points = 0, near = 0;
  bool accepted = true;
};

struct NewtonResult {
  std::vector<TraceRecord> trace;
  SolutionState state;
  std::string status;  // "target", "floor", "r_max", "excision_budget"
  double floor = 0;    // roundoff floor used for termination
  std::vector<double> a_used;
};

NewtonResult run_newton(const SolverParameters& prm, const FrequencyBasis& basis, const Nonlinearity& nl);

struct PdeCheck {
  double max_residual = 0;  // max over the grid of |u_tt - lap u + u + u^{p+1} + H|
  double residual_l1 = 0;   // l1 norm (full lattice) of F, a bound on the above
  int nt = 32, nx = 32;
  bool ok() const { return max_residual <= residual_l1 * (1 + 1e-6) + 1e-15; }
};

// Spectral evaluation of the ansatz and its derivatives on an nt x nx grid
// over one period in t (of the slowest frequency) and x in [0, 2pi); for d > 1
// the remaining space coordinates are fixed at pseudo-random values.
PdeCheck pde_check(const SolutionState& st, const FrequencyBasis& basis, const Nonlinearity& nl, int nt = 32,
                   int nx = 32);

}  // namespace kgqp
