#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "kgqp/linop.hpp"

namespace kgqp {

// The cube violates |n.w +- sqrt(j^2+1)| > |J|_inf / 2 somewhere, or a
// branch weight lost its sign during the fixed-point iteration.
struct NotPerturbative : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ZeroFamilyOptions {
  double tol = 1e-12;   // on the rescaled zero
  int max_iter = 100;   // divergence guard
  std::size_t dense_limit = 4000;
};

// Zeros theta_i(a, w) of a perturbative cube, one per point and branch.
// Branch s = +1 collects theta ~ -(n.w + sqrt(j^2+1)), s = -1 collects
// theta ~ -n.w + sqrt(j^2+1). Each zero solves t = -s E_i(t) for the rescaled
// t = theta / |J|_inf, where E_i(t) is the i-th eigenvalue (ascending) of
//   diag((s n.w + sqrt(j^2+1)) / |J|) + W^{-1/2} (A / |J|^2) W^{-1/2},
//   W = diag((-s (n.w + theta) + sqrt(j^2+1)) / |J|).
struct LipschitzZeroFamily {
  Box cube;
  long J_inf = 0;
  std::vector<double> zeros_plus, zeros_minus;  // theta, ascending
  int max_iterations = 0;
  bool approximate = false;  // first-order path for components above dense_limit
  std::vector<double> all() const;
};

LipschitzZeroFamily lipschitz_zero_family(const Box& cube, const CosineSeries& u, const std::vector<double>& omega,
                                          const Nonlinearity& nl, const ZeroFamilyOptions& opt = {});

// Real theta with det T(theta) = 0 from the companion linearization
// [[0, I], [K, -2N]] with K = diag(j^2+1-(n.w)^2) + A - mu I, N = diag(n.w).
std::vector<double> quadratic_eigen_zeros(const TruncatedOperator& T, double mu = 0.0, double imag_tol = 1e-7);

// ||T(theta)^{-1}|| (spectral) by a dense symmetric eigensolve.
double dense_inverse_norm(const TruncatedOperator& T);

struct ZeroFamilyCheck {
  std::size_t samples = 0, norm_violations = 0;
  double worst_norm_ratio = 0;  // ||T^{-1}|| * |J| min|theta - theta_i| / 4
  double lip_a = 0, lip_a_bound = 0;  // measured and 2C/|J|
  double lip_w = 0, lip_w_bound = 0;  // measured and C N
  std::size_t lip_violations = 0;
  double C = 1;
  bool ok() const { return norm_violations == 0 && lip_violations == 0; }
};

// Samples theta in +-1.5 max|theta_i| and perturbs (a, w) to measure the
// Lipschitz ratios (l2 in a, l1 in w). C = max(1, ||du/da||, ||du/dw||) with
// u = u0(a), for which ||du/da_k|| = 1/2 and du/dw = 0.
ZeroFamilyCheck check_zero_family(const Box& cube, const FrequencyBasis& basis, const std::vector<double>& a,
                                  const std::vector<double>& omega, const Nonlinearity& nl, int theta_samples,
                                  int lipschitz_pairs, unsigned seed);

}  // namespace kgqp
