#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

#include "kgqp/basis.hpp"
#include "kgqp/lattice.hpp"

namespace kgqp {

// Radicand of the frequency equation is not positive: amplitudes are outside
// the perturbative regime.
struct AmplitudeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Solves the equations on S for the frequencies: the residual vanishes at
// (-e_k, j_k) iff w_k^2 = s_k + c_k with c_k = 2 N(u)(-e_k, j_k) / a_k.
std::vector<double> q_solve(const CosineSeries& u, const std::vector<double>& a, const FrequencyBasis& basis,
                            const Nonlinearity& nl);
std::vector<long double> q_solve(const CosineSeriesL& u, const std::vector<long double>& a,
                                 const FrequencyBasis& basis, const Nonlinearity& nl);
// c_k above, and w_k - sqrt(s_k) computed without cancellation.
std::vector<long double> q_shift(const CosineSeriesL& u, const std::vector<long double>& a,
                                 const FrequencyBasis& basis, const Nonlinearity& nl);
// Same, from a precomputed nonlinear part N(u).
std::vector<long double> q_shift_from(const CosineSeriesL& N, const std::vector<long double>& a,
                                      const FrequencyBasis& basis);
std::vector<long double> q_solve_from(const CosineSeriesL& N, const std::vector<long double>& a,
                                      const FrequencyBasis& basis);
std::vector<long double> frequency_shift(const FrequencyBasis& basis, const std::vector<long double>& c);

// B_k = 2^{p+1} (u0^{*(p+1)})(-e_k) / a_k on the generic frequency lattice
// (only the n-coordinates matter). For p = 2, B_k = 3 a_k^2 + 6 sum_{i!=k} a_i^2.
std::vector<double> b_coefficients(int p, const std::vector<double>& a);
// M_ki = a_k a_i for i != k, M_kk = sum_i a_i^2 (p = 2 closed form).
Eigen::MatrixXd m_matrix(const std::vector<double>& a);
// dB_k/da_i by central differences with one Richardson step (exact for degree <= 4).
Eigen::MatrixXd b_jacobian(int p, const std::vector<double>& a);

// Leading coefficient R in b^{p/2} of 2^{p+1} times the diagonal of the
// cluster block at (n_k e_k, j) on C \ S, all amplitudes equal to one.
double leading_diagonal_coefficient(int p, long n_k);

struct FrequencyJacobian {
  Eigen::MatrixXd J;  // d omega / d a
  double det = 0;
  double norm = 0;      // spectral norm
  double inv_norm = 0;  // spectral norm of the inverse (inf when singular)
  double richardson_error = 0;
};

// d omega^{(1)} / d a at u = u0(a) by central differences, step h_rel * max|a|.
FrequencyJacobian frequency_jacobian(const std::vector<double>& a, const FrequencyBasis& basis,
                                     const Nonlinearity& nl, double h_rel = 1e-4);

struct ClusterBlock {
  std::vector<Point> members;  // canonical representatives
  Eigen::MatrixXd F_scaled;    // block at w = a / delta
  Eigen::MatrixXd F_ones;      // block at w = (1, ..., 1)
  double det_scaled = 0, det_ones = 0;
  std::vector<long> n_k;            // per member: the single nonzero n-component
  std::vector<double> R;            // leading diagonal coefficient per member
  std::vector<double> diag_ones_check;  // |F_ones(x,x) - closed form| per member
};

struct BlockReport {
  std::vector<ClusterBlock> blocks;
  std::size_t max_size = 0;
  bool all_det_nonzero = true;  // at w = (1, ..., 1)
};

// Cluster blocks of the linearized operator on C(0) \ S inside [-N,N]^{b+d}.
// Entries follow the even sector: D(x) delta_xy + a(x-y) + a(x+y), with D the
// frequency shift term and a the linearization kernel at u0.
BlockReport block_decomposition(const FrequencyBasis& basis, const std::vector<double>& a, long N,
                                const Nonlinearity& nl);

}  // namespace kgqp
