#pragma once

#include <vector>

#include "kgqp/linop.hpp"

namespace kgqp {

struct ThetaGrid {
  double lo = -1.0, hi = 1.0;
  double step = 5e-7;
  std::size_t size() const;
};

// eta = delta^{p+eps}: a grid theta is bad when ||T_N(theta)^{-1}|| > 1/eta.
double eta_delta_power(double delta, int p, double eps);
// eta = exp(-N^sigma), the scale-dependent threshold.
double eta_exp_scale(long N, double sigma);

struct BadInterval {
  double lo = 0, hi = 0;
  double nearest_root = 0;  // closest -n.w +- sqrt(j^2+1) over the box
  double root_distance = 0;
};

struct SweepReport {
  long N = 0;
  double eta = 0;
  ThetaGrid grid;
  std::size_t grid_points = 0, bad_points = 0;
  double fraction = 0;
  double measure = 0;           // fraction * grid span
  double interval_measure = 0;  // exact length of the bad set inside the span
  std::vector<BadInterval> intervals;
  double max_root_distance = 0;
  std::size_t components = 0, largest_component = 0;
  std::size_t verified = 0, verify_mismatch = 0;  // direct checks at random grid points
};

// Bad set {theta : min |eig T_N(theta)| < eta} inside [lo, hi] as a union of
// intervals. T splits into connected blocks; on each, the boundary points are
// real roots of det(T(theta) -+ eta) = 0 and every gap is classified at its midpoint.
std::vector<std::pair<double, double>> bad_theta_intervals(const TruncatedOperator& T, double eta, double lo,
                                                           double hi);

// Full sector on [-N,N]^{b+d}.
SweepReport theta_bad_sweep(const CosineSeries& u, const std::vector<double>& omega, long N, const ThetaGrid& grid,
                            double eta, const Nonlinearity& nl, int verify_samples = 0, unsigned seed = 1);

}  // namespace kgqp
