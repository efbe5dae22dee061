#include "kgqp/zerofamily.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>


namespace kgqp {

std::vector<double> LipschitzZeroFamily::all() const {
  std::vector<double> z = zeros_plus;
  z.insert(z.end(), zeros_minus.begin(), zeros_minus.end());
  std::sort(z.begin(), z.end());
  return z;
}

namespace {

// The bounds hold for every C > 1; the limit C = 1 is compared up to rounding.
constexpr double kLipTol = 1e-9;

struct CubeData {
  long J = 0;
  std::vector<double> nw, sq;
  Eigen::MatrixXd A;  // kernel part, unscaled
};

CubeData cube_data(const TruncatedOperator& T, const Box& cube) {
  CubeData c;
  for (long v : cube.J) c.J = std::max(c.J, std::labs(v));
  if (c.J == 0) throw NotPerturbative("cube offset J must be nonzero");
  const Dims dims = T.dims();
  for (auto& x : T.points()) {
    const IVec n = x.n(dims), j = x.j(dims);
    double nw = 0, jj = 1;
    for (int k = 0; k < dims.b; ++k) nw += n[k] * T.omega()[k];
    for (long v : j) jj += double(v) * v;
    c.nw.push_back(nw);
    c.sq.push_back(std::sqrt(jj));
    if (std::fabs(nw + std::sqrt(jj)) <= 0.5 * c.J || std::fabs(nw - std::sqrt(jj)) <= 0.5 * c.J)
      throw NotPerturbative("cube is not in the perturbative region");
  }
  const auto n = static_cast<Eigen::Index>(T.size());
  c.A = Eigen::MatrixXd::Zero(n, n);
  const Csr& K = T.conv();
  for (Eigen::Index r = 0; r < n; ++r)
    for (std::int64_t k = K.rowptr[r]; k < K.rowptr[r + 1]; ++k) c.A(r, K.col[k]) += K.val[k];
  return c;
}

}  // namespace

LipschitzZeroFamily lipschitz_zero_family(const Box& cube, const CosineSeries& u, const std::vector<double>& omega,
                                          const Nonlinearity& nl, const ZeroFamilyOptions& opt) {
  const Dims dims = u.dims();
  CosineSeries kern = u.empty() ? CosineSeries(dims) : linearization_kernel(u, nl);
  auto T = TruncatedOperator::from_kernel(kern, omega, 0.0, box_points(cube, dims), Sector::full);
  const CubeData c = cube_data(T, cube);
  const double J = double(c.J);
  const Eigen::MatrixXd Abar = c.A / (J * J);

  LipschitzZeroFamily fam;
  fam.cube = cube;
  fam.J_inf = c.J;

  // det T factorizes over connected components, so each block carries its own zeros
  const auto comps = T.components();
  for (const auto& comp : comps) fam.approximate = fam.approximate || comp.size() > opt.dense_limit;
  for (int s : {1, -1}) {
    std::vector<double> zeros;
    int max_it = 0;
    for (const auto& comp : comps) {
      const auto m = static_cast<Eigen::Index>(comp.size());
      Eigen::VectorXd base(m);
      Eigen::MatrixXd Ab(m, m);
      for (Eigen::Index i = 0; i < m; ++i) {
        base[i] = (s * c.nw[comp[i]] + c.sq[comp[i]]) / J;
        for (Eigen::Index k = 0; k < m; ++k) Ab(i, k) = Abar(comp[i], comp[k]);
      }
      auto spectrum = [&](double t) {
        Eigen::VectorXd is(m);
        for (Eigen::Index i = 0; i < m; ++i) {
          const double w = (-s * (c.nw[comp[i]] + J * t) + c.sq[comp[i]]) / J;
          if (!(w > 0)) throw NotPerturbative("branch weight is not positive at a zero");
          is[i] = 1.0 / std::sqrt(w);
        }
        if (fam.approximate) {
          Eigen::VectorXd e(m);
          for (Eigen::Index i = 0; i < m; ++i) e[i] = base[i] + Ab(i, i) * is[i] * is[i];
          std::sort(e.data(), e.data() + m);
          return e;
        }
        Eigen::MatrixXd B = is.asDiagonal() * Ab * is.asDiagonal();
        B.diagonal() += base;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B, Eigen::EigenvaluesOnly);
        return Eigen::VectorXd(es.eigenvalues());
      };
      Eigen::VectorXd start = base;
      std::sort(start.data(), start.data() + m);
      for (Eigen::Index i = 0; i < m; ++i) {
        double t = -s * start[i];
        bool done = false;
        for (int it = 1; it <= opt.max_iter && !done; ++it) {
          const double next = -s * spectrum(t)[i];
          max_it = std::max(max_it, it);
          done = std::fabs(next - t) <= opt.tol * std::max(1.0, std::fabs(t));
          t = next;
        }
        if (!done) throw NotPerturbative("zero fixed-point iteration did not converge");
        zeros.push_back(J * t);
      }
    }
    std::sort(zeros.begin(), zeros.end());
    (s == 1 ? fam.zeros_plus : fam.zeros_minus) = zeros;
    fam.max_iterations = std::max(fam.max_iterations, max_it);
  }
  return fam;
}

std::vector<double> quadratic_eigen_zeros(const TruncatedOperator& T, double mu, double imag_tol) {
  const auto n = static_cast<Eigen::Index>(T.size());
  if (n == 0) return {};
  Eigen::MatrixXd K = T.dense();
  Eigen::VectorXd nw(n);
  const Dims dims = T.dims();
  for (Eigen::Index i = 0; i < n; ++i) {
    const IVec nn = T.points()[i].n(dims), j = T.points()[i].j(dims);
    double v = 0, jj = 1;
    for (int k = 0; k < dims.b; ++k) v += nn[k] * T.omega()[k];
    for (long x : j) jj += double(x) * x;
    nw[i] = v;
    K(i, i) += -T.symbol_diag()[i] + jj - v * v - mu;
  }
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  C.topRightCorner(n, n).setIdentity();
  C.bottomLeftCorner(n, n) = K;
  C.bottomRightCorner(n, n).diagonal() = -2 * nw;
  Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    auto z = es.eigenvalues()[i];
    if (std::fabs(z.imag()) <= imag_tol * (1 + std::fabs(z.real()))) out.push_back(z.real());
  }
  std::sort(out.begin(), out.end());
  return out;
}

double dense_inverse_norm(const TruncatedOperator& T) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T.dense(), Eigen::EigenvaluesOnly);
  double m = es.eigenvalues().cwiseAbs().minCoeff();
  return m > 0 ? 1.0 / m : INFINITY;
}

ZeroFamilyCheck check_zero_family(const Box& cube, const FrequencyBasis& basis, const std::vector<double>& a,
                                  const std::vector<double>& omega, const Nonlinearity& nl, int theta_samples,
                                  int lipschitz_pairs, unsigned seed) {
  ZeroFamilyCheck out;
  const Dims dims{basis.b, basis.d};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto family = [&](const std::vector<double>& amp, const std::vector<double>& w) {
    return lipschitz_zero_family(cube, initial_series(basis, amp), w, nl);
  };
  const auto fam = family(a, omega);
  const double J = double(fam.J_inf);
  out.C = 1.0;  // max(1, 1/2, 0)
  out.lip_a_bound = 2 * out.C / J;
  out.lip_w_bound = out.C * double(cube.N);

  const auto zeros = fam.all();
  double zmax = 0;
  for (double z : zeros) zmax = std::max(zmax, std::fabs(z));
  auto T = TruncatedOperator::build(initial_series(basis, a), omega, 0.0, box_points(cube, dims), nl, Sector::full);
  for (int i = 0; i < theta_samples; ++i) {
    const double theta = 1.5 * zmax * uni(rng);
    T.set_theta(theta);
    double eta = INFINITY;
    for (double z : zeros) eta = std::min(eta, std::fabs(theta - z));
    const double ratio = dense_inverse_norm(T) * J * eta / 4.0;
    out.worst_norm_ratio = std::max(out.worst_norm_ratio, ratio);
    ++out.samples;
    if (!(ratio < 1.0)) ++out.norm_violations;
  }

  double amax = 0;
  for (double v : a) amax = std::max(amax, std::fabs(v));
  auto max_shift = [](const LipschitzZeroFamily& f, const LipschitzZeroFamily& g) {
    double m = 0;
    for (std::size_t i = 0; i < f.zeros_plus.size(); ++i) m = std::max(m, std::fabs(f.zeros_plus[i] - g.zeros_plus[i]));
    for (std::size_t i = 0; i < f.zeros_minus.size(); ++i)
      m = std::max(m, std::fabs(f.zeros_minus[i] - g.zeros_minus[i]));
    return m;
  };
  for (int k = 0; k < lipschitz_pairs; ++k) {
    std::vector<double> da(a.size());
    double n2 = 0;
    for (auto& v : da) {
      v = uni(rng);
      n2 += v * v;
    }
    const double scale = 0.1 * amax / std::sqrt(n2);
    std::vector<double> a2 = a;
    for (std::size_t i = 0; i < a.size(); ++i) a2[i] += scale * da[i];
    const double ra = max_shift(fam, family(a2, omega)) / (0.1 * amax);
    out.lip_a = std::max(out.lip_a, ra);
    if (ra > out.lip_a_bound * (1 + kLipTol)) ++out.lip_violations;

    std::vector<double> w2 = omega;
    double n1 = 0;
    std::vector<double> dw(omega.size());
    for (auto& v : dw) {
      v = uni(rng);
      n1 += std::fabs(v);
    }
    const double step = 1e-4;
    for (std::size_t i = 0; i < omega.size(); ++i) w2[i] += step * dw[i] / n1;
    const double rw = max_shift(fam, family(a, w2)) / step;
    out.lip_w = std::max(out.lip_w, rw);
    if (rw > out.lip_w_bound * (1 + kLipTol)) ++out.lip_violations;
  }
  return out;
}

}  // namespace kgqp
