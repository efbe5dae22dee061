#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgqp/basis.hpp"
#include "kgqp/lattice.hpp"

namespace kgqp {

// [-N,N]^b x ([-N,N]^d + J) minus the excluded points.
struct Box {
  long N = 1;
  IVec J;  // empty means zero offset
  std::vector<Point> excluded;
};

std::vector<Point> box_points(const Box& box, Dims dims);
// Points of the box on the lattice {(n, -sum n_k j_k)} that carries u0 and all
// its convolution powers.
std::vector<Point> sublattice_points(const Box& box, const FrequencyBasis& basis, bool canonical_only);

// Linearization kernel a = (p+1) u^{*p} + sum m alpha_m * u^{*(m-1)}.
CosineSeries linearization_kernel(const CosineSeries& u, const Nonlinearity& nl, const ConvolveOptions& opt = {});

// Sparse row storage with 32-bit columns (the layout the SIMD kernels take).
struct Csr {
  std::size_t nrows = 0, ncols = 0;
  std::vector<std::int64_t> rowptr{0};
  std::vector<std::int32_t> col;
  std::vector<double> val;
  void matvec(const double* x, double* y) const;
  Csr extract(const std::vector<int>& rows, const std::vector<int>& cols) const;
  double row_abs_sum(std::size_t r) const;
};

// full: index set is the box, T(x,y) = D(x) 1_{x=y} + 1/2 [a(x-y) + a(x+y)],
//       real symmetric.
// even: index set is canonical representatives, acting on even functions:
//       T(x,y) = D(x) 1_{x=y} + a(x-y) + a(x+y) (y != 0), T(x,0) = a(x).
enum class Sector { full, even };

class TruncatedOperator {
 public:
  TruncatedOperator() = default;

  static TruncatedOperator from_kernel(const CosineSeries& kernel, const std::vector<double>& omega, double theta,
                                       std::vector<Point> points, Sector sector, double kernel_rel_tol = 0.0);
  static TruncatedOperator build(const CosineSeries& u, const std::vector<double>& omega, double theta,
                                 std::vector<Point> points, const Nonlinearity& nl, Sector sector,
                                 double kernel_rel_tol = 0.0);

  std::size_t size() const { return points_.size(); }
  Dims dims() const { return dims_; }
  Sector sector() const { return sector_; }
  const std::vector<Point>& points() const { return points_; }
  int index_of(const Point& x) const;  // -1 when absent

  double theta() const { return theta_; }
  const std::vector<double>& omega() const { return omega_; }
  // D(x) = -(n.w + theta)^2 + |j|^2 + 1
  const std::vector<double>& symbol_diag() const { return sym_; }
  void set_theta(double theta);
  void set_symbol_diag(std::vector<double> d);  // caller supplies an accurate D
  const Csr& conv() const { return conv_; }     // kernel part, including its diagonal
  std::vector<double> diagonal() const;         // D + kernel diagonal
  double entry(int r, int c) const;

  void apply(const double* x, double* y) const;
  Eigen::MatrixXd dense() const;

  // Connected components of the sparsity graph, each a sorted index list.
  std::vector<std::vector<int>> components() const;
  std::vector<int> component_of(const std::vector<int>& seeds) const;
  TruncatedOperator restrict_to(const std::vector<int>& idx) const;

 private:
  Dims dims_;
  Sector sector_ = Sector::full;
  std::vector<Point> points_;
  std::unordered_map<Point, int, PointHash> index_;
  std::vector<double> omega_;
  double theta_ = 0;
  std::vector<double> sym_;
  Csr conv_;
};

// ---- Schur complement solver --------------------------------------------

struct SchurOptions {
  double jacobi_tol = 1e-12;  // certified relative residual on the complement
  int max_sweeps = 2000;
  double lambda = 0.0;
};

// Complement block is not diagonally dominant enough for the iteration.
struct SchurError : std::runtime_error {
  std::vector<std::pair<Point, double>> offending;  // (point, diagonal)
  SchurError(const std::string& msg, std::vector<std::pair<Point, double>> off)
      : std::runtime_error(msg), offending(std::move(off)) {}
};

// Singular reduced block: the parameter should be excised.
struct ExcisionSignal : std::runtime_error {
  double log_abs_det = 0;
  std::vector<Point> block;
  ExcisionSignal(const std::string& msg, double ld, std::vector<Point> b)
      : std::runtime_error(msg), log_abs_det(ld), block(std::move(b)) {}
};

// |D(x)| < W delta^p, closed under rows whose diagonal fails |T(x,x)| > 2 sum_{y!=x} |T(x,y)|.
std::vector<int> default_near_set(const TruncatedOperator& T, double W, double delta, int p);

struct SchurDiagnostics {
  std::size_t near = 0, complement = 0;
  int max_sweeps_used = 0;
  double complement_contraction = 0;  // max_x sum_y |O(x,y)| / |D(x)|
  double h_log_abs_det = 0;
  double h_rcond = 0;  // reciprocal condition estimate of H
  double h_inv_norm = 0;
};

class SchurSolver {
 public:
  SchurSolver(const TruncatedOperator& T, std::vector<int> near, const SchurOptions& opt = {});

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;  // T^{-1} rhs
  Eigen::VectorXd column(int y) const;                       // T^{-1} e_y
  Eigen::MatrixXd inverse() const;                           // all columns
  // Power iteration on T^{-1}; exact for symmetric T in the limit.
  double inverse_norm_estimate(int iterations = 30) const;
  const SchurDiagnostics& diagnostics() const { return diag_; }
  const std::vector<int>& near() const { return near_; }

 private:
  Eigen::VectorXd complement_solve(const Eigen::VectorXd& rhs, int* sweeps) const;

  const TruncatedOperator* T_;
  SchurOptions opt_;
  std::vector<int> near_, comp_;
  std::vector<int> pos_;  // global index -> position in near_ or comp_
  Csr cc_off_, cp_, pc_;
  std::vector<double> cc_inv_diag_;
  Eigen::MatrixXd H_;
  Eigen::PartialPivLU<Eigen::MatrixXd> H_lu_;
  SchurDiagnostics diag_;
};

// ---- Green's function decay ----------------------------------------------

struct GreenPair {
  Point x, y;
  double g = 0;
  long dist = 0;  // |x - y|_inf
};

struct GreenDecayReport {
  bool vacuous = true;  // no qualifying off-diagonal pair
  // min of -log|G| / (|log delta| |x-y|) over qualifying pairs: those with
  // |x-y| > 1/candidate^2, or every off-diagonal pair when candidate <= 0
  double beta_hat = 0;
  std::size_t qualifying_pairs = 0;
  GreenPair argmin;
  double candidate = 0;
  bool candidate_pass = false;  // beta_hat >= candidate
  // largest beta whose own range |x-y| > 1/beta^2 holds a pair and obeys the
  // bound; 0 when the box is too small for any such beta
  double beta_self_consistent = 0;
  std::size_t pairs = 0;
  long max_dist = 0;
};

GreenDecayReport measure_green_decay(const std::vector<GreenPair>& entries, double beta_candidate, double delta);
// Collects |G(x,y)| for x != y from an inverse restricted to the given indices.
std::vector<GreenPair> green_pairs(const TruncatedOperator& T, const Eigen::MatrixXd& G,
                                   const std::vector<int>& cols);

}  // namespace kgqp
