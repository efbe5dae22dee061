#include "kgqp/amplitude.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kgqp/characteristics.hpp"
#include "kgqp/linop.hpp"

namespace kgqp {

namespace {

// u0 on the generic lattice: coefficient a_k/2 at (-e_k, 0), with d = 1.
CosineSeries generic_u0(const std::vector<double>& a) {
  const Dims dims{static_cast<int>(a.size()), 1};
  CosineSeries::Accumulator acc;
  for (int k = 0; k < dims.b; ++k) {
    IVec n(dims.b, 0);
    n[k] = -1;
    acc[canonical(Point::make(n, {0}, dims))] += 0.5 * a[k];
  }
  return CosineSeries::from_accumulator(dims, std::move(acc));
}

Point generic_point(int b, int k) {
  IVec n(b, 0);
  n[k] = -1;
  return canonical(Point::make(n, {0}, {b, 1}));
}

double u0_power_at_origin(int p, const std::vector<double>& a) {
  CosineSeries u = generic_u0(a);
  return power(u, p).at(Point{});
}

}  // namespace

std::vector<long double> q_shift(const CosineSeriesL& u, const std::vector<long double>& a,
                                 const FrequencyBasis& basis, const Nonlinearity& nl) {
  return q_shift_from(nonlinear_part(u, nl), a, basis);
}

std::vector<long double> q_shift_from(const CosineSeriesL& N, const std::vector<long double>& a,
                                      const FrequencyBasis& basis) {
  if (static_cast<int>(a.size()) != basis.b) throw std::invalid_argument("q_solve: need b amplitudes");
  std::vector<long double> c(basis.b);
  for (int k = 0; k < basis.b; ++k) {
    if (a[k] == 0.0L) throw std::invalid_argument("q_solve: amplitudes must be nonzero");
    c[k] = 2.0L * N.at(canonical(basis_point(basis, k))) / a[k];
  }
  return c;
}

std::vector<long double> frequency_shift(const FrequencyBasis& basis, const std::vector<long double>& c) {
  std::vector<long double> dw(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) {
    const long double s = static_cast<long double>(basis.radicands[k]);
    if (s + c[k] <= 0) throw AmplitudeError("amplitude too large: frequency radicand is not positive");
    dw[k] = c[k] / (std::sqrt(s + c[k]) + std::sqrt(s));
  }
  return dw;
}

std::vector<long double> q_solve(const CosineSeriesL& u, const std::vector<long double>& a,
                                 const FrequencyBasis& basis, const Nonlinearity& nl) {
  auto dw = frequency_shift(basis, q_shift(u, a, basis, nl));
  for (int k = 0; k < basis.b; ++k) dw[k] += std::sqrt(static_cast<long double>(basis.radicands[k]));
  return dw;
}

std::vector<long double> q_solve_from(const CosineSeriesL& N, const std::vector<long double>& a,
                                      const FrequencyBasis& basis) {
  auto dw = frequency_shift(basis, q_shift_from(N, a, basis));
  for (int k = 0; k < basis.b; ++k) dw[k] += std::sqrt(static_cast<long double>(basis.radicands[k]));
  return dw;
}

std::vector<double> q_solve(const CosineSeries& u, const std::vector<double>& a, const FrequencyBasis& basis,
                            const Nonlinearity& nl) {
  std::vector<long double> al(a.begin(), a.end());
  auto w = q_solve(u.cast<long double>(), al, basis, nl);
  return std::vector<double>(w.begin(), w.end());
}

std::vector<double> b_coefficients(int p, const std::vector<double>& a) {
  const int b = static_cast<int>(a.size());
  CosineSeries N = power(generic_u0(a), p + 1);
  std::vector<double> B(b);
  for (int k = 0; k < b; ++k) B[k] = std::ldexp(N.at(generic_point(b, k)), p + 1) / a[k];
  return B;
}

Eigen::MatrixXd m_matrix(const std::vector<double>& a) {
  const auto b = static_cast<Eigen::Index>(a.size());
  double s = 0;
  for (double v : a) s += v * v;
  Eigen::MatrixXd M(b, b);
  for (Eigen::Index k = 0; k < b; ++k)
    for (Eigen::Index i = 0; i < b; ++i) M(k, i) = k == i ? s : a[k] * a[i];
  return M;
}

Eigen::MatrixXd b_jacobian(int p, const std::vector<double>& a) {
  const auto b = static_cast<Eigen::Index>(a.size());
  double scale = 0;
  for (double v : a) scale = std::max(scale, std::fabs(v));
  const double h = 1e-2 * scale;
  Eigen::MatrixXd J(b, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    auto diff = [&](double step) {
      auto ap = a, am = a;
      ap[i] += step;
      am[i] -= step;
      auto Bp = b_coefficients(p, ap), Bm = b_coefficients(p, am);
      Eigen::VectorXd d(b);
      for (Eigen::Index k = 0; k < b; ++k) d[k] = (Bp[k] - Bm[k]) / (2 * step);
      return d;
    };
    J.col(i) = (4 * diff(h / 2) - diff(h)) / 3;
  }
  return J;
}

double leading_diagonal_coefficient(int p, long n_k) {
  // 2^{p+1} F(x,x) = -2 n_k^2 B_k + 2^{p+1} (p+1) u0^{*p}(0) is a polynomial of
  // degree p/2 in b; its leading coefficient is the (p/2)-th difference / (p/2)!.
  const int m = p / 2;
  std::vector<double> f;
  for (int b = 1; b <= m + 1; ++b) {
    std::vector<double> ones(b, 1.0);
    double B = b_coefficients(p, ones)[0];
    f.push_back(-2.0 * double(n_k * n_k) * B + std::ldexp((p + 1) * u0_power_at_origin(p, ones), p + 1));
  }
  for (int level = 0; level < m; ++level)
    for (int i = 0; i + 1 < static_cast<int>(f.size()) - level; ++i) f[i] = f[i + 1] - f[i];
  return f[0] / std::tgamma(m + 1.0);
}

FrequencyJacobian frequency_jacobian(const std::vector<double>& a, const FrequencyBasis& basis,
                                     const Nonlinearity& nl, double h_rel) {
  const auto b = static_cast<Eigen::Index>(a.size());
  double scale = 0;
  for (double v : a) scale = std::max(scale, std::fabs(v));
  const long double h = h_rel * scale;
  auto omega_at = [&](const std::vector<long double>& al) {
    std::vector<double> ad(al.begin(), al.end());
    CosineSeriesL u(Dims{basis.b, basis.d});
    {
      CosineSeriesL::Accumulator acc;
      for (int k = 0; k < basis.b; ++k) acc[canonical(basis_point(basis, k))] += al[k] / 2;
      u = CosineSeriesL::from_accumulator({basis.b, basis.d}, std::move(acc));
    }
    // differences of the shift avoid subtracting sqrt(s_k)
    return frequency_shift(basis, q_shift(u, al, basis, nl));
  };
  auto diff = [&](long double step) {
    Eigen::MatrixXd D(b, b);
    for (Eigen::Index i = 0; i < b; ++i) {
      std::vector<long double> ap(a.begin(), a.end()), am(a.begin(), a.end());
      ap[i] += step;
      am[i] -= step;
      auto wp = omega_at(ap), wm = omega_at(am);
      for (Eigen::Index k = 0; k < b; ++k) D(k, i) = static_cast<double>((wp[k] - wm[k]) / (2 * step));
    }
    return D;
  };
  Eigen::MatrixXd J1 = diff(h), J2 = diff(h / 2);
  FrequencyJacobian out;
  out.J = (4 * J2 - J1) / 3;
  out.richardson_error = (out.J - J2).cwiseAbs().maxCoeff();
  out.det = out.J.determinant();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.J);
  const auto& sv = svd.singularValues();
  out.norm = sv[0];
  out.inv_norm = sv[sv.size() - 1] > 0 ? 1.0 / sv[sv.size() - 1] : INFINITY;
  return out;
}

BlockReport block_decomposition(const FrequencyBasis& basis, const std::vector<double>& a, long N,
                                const Nonlinearity& nl) {
  const Dims dims{basis.b, basis.d};
  double delta = 0;
  for (double v : a) delta = std::max(delta, std::fabs(v));
  if (delta == 0) throw std::invalid_argument("block_decomposition: amplitudes must not all vanish");
  std::vector<double> w(a.size()), ones(a.size(), 1.0);
  for (std::size_t k = 0; k < a.size(); ++k) w[k] = a[k] / delta;

  auto pts = enumerate_characteristics(basis, QuadField(), N);
  std::set<Point> S;
  for (int k = 0; k < basis.b; ++k) {
    S.insert(basis_point(basis, k, 1));
    S.insert(basis_point(basis, k, -1));
  }
  std::vector<Point> rest;
  for (auto& x : pts)
    if (!S.count(x)) rest.push_back(x);
  auto clusters = cluster_decomposition(rest, adjacency_set(basis), &basis);

  auto make_block = [&](const std::vector<Point>& members, const std::vector<double>& amp) {
    CosineSeries u = initial_series(basis, amp);
    CosineSeries kern = linearization_kernel(u, nl);
    std::vector<long double> al(amp.begin(), amp.end());
    auto c = q_shift(u.cast<long double>(), al, basis, nl);
    const auto m = static_cast<Eigen::Index>(members.size());
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(m, m);
    const auto w0 = basis.omega0_double();
    for (Eigen::Index r = 0; r < m; ++r) {
      const IVec n = members[r].n(dims);
      // (n.w0)^2 - (n.w)^2 with w_k^2 = s_k + c_k, to first order in c
      double nw0 = 0, ndw = 0;
      for (int k = 0; k < basis.b; ++k) {
        nw0 += n[k] * w0[k];
        ndw += n[k] * double(c[k]) / (2 * w0[k]);
      }
      F(r, r) = -2 * nw0 * ndw;
      for (Eigen::Index q = 0; q < m; ++q) {
        F(r, q) += kern.at(canonical(members[r] - members[q]));
        const Point s = members[r] + members[q];
        F(r, q) += kern.at(canonical(s));
      }
    }
    return F;
  };

  BlockReport rep;
  std::set<std::vector<Point>> seen;
  const bool p2 = nl.p == 2;
  const std::vector<double> B1 = b_coefficients(nl.p, ones);
  const double a0 = std::ldexp((nl.p + 1) * u0_power_at_origin(nl.p, ones), nl.p + 1);
  for (auto& cl : clusters) {
    std::vector<Point> members;
    for (auto& x : cl.members) members.push_back(canonical(x));
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    if (!seen.insert(members).second) continue;
    ClusterBlock blk;
    blk.members = members;
    blk.F_scaled = make_block(members, w);
    blk.F_ones = make_block(members, ones);
    blk.det_scaled = blk.F_scaled.determinant();
    blk.det_ones = blk.F_ones.determinant();
    CosineSeries kern1 = linearization_kernel(initial_series(basis, ones), nl);
    for (std::size_t r = 0; r < members.size(); ++r) {
      const IVec n = members[r].n(dims);
      long nk = 0;
      int kk = -1;
      for (int k = 0; k < basis.b; ++k)
        if (n[k]) {
          nk = n[k];
          kk = k;
        }
      blk.n_k.push_back(nk);
      blk.R.push_back(p2 ? leading_diagonal_coefficient(nl.p, nk) : NAN);
      double closed = kk < 0 ? NAN
                             : (-2.0 * double(nk * nk) * B1[kk] + a0) / std::ldexp(1.0, nl.p + 1) +
                                   kern1.at(canonical(members[r] + members[r]));
      blk.diag_ones_check.push_back(std::fabs(blk.F_ones(r, r) - closed));
    }
    rep.max_size = std::max(rep.max_size, members.size());
    if (blk.det_ones == 0) rep.all_det_nonzero = false;
    rep.blocks.push_back(std::move(blk));
  }
  return rep;
}

}  // namespace kgqp
