#include "kgqp/linop.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <sstream>

#include "kgqp/kernels.hpp"
#include "kgqp/parallel.hpp"

namespace kgqp {

namespace {

bool next_in_box(IVec& v, long lo, long hi) {
  int i = static_cast<int>(v.size()) - 1;
  while (i >= 0 && v[i] == hi) v[i--] = lo;
  if (i < 0) return false;
  ++v[i];
  return true;
}

}  // namespace

std::vector<Point> box_points(const Box& box, Dims dims) {
  IVec J = box.J.empty() ? IVec(dims.d, 0) : box.J;
  std::vector<Point> excl = box.excluded;
  std::sort(excl.begin(), excl.end());
  std::vector<Point> out;
  IVec n(dims.b, -box.N);
  do {
    IVec j(dims.d, -box.N);
    do {
      IVec jj = j;
      for (int i = 0; i < dims.d; ++i) jj[i] += J[i];
      Point x = Point::make(n, jj, dims);
      if (!std::binary_search(excl.begin(), excl.end(), x)) out.push_back(x);
    } while (next_in_box(j, -box.N, box.N));
  } while (next_in_box(n, -box.N, box.N));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Point> sublattice_points(const Box& box, const FrequencyBasis& basis, bool canonical_only) {
  const Dims dims{basis.b, basis.d};
  IVec J = box.J.empty() ? IVec(dims.d, 0) : box.J;
  std::vector<Point> excl = box.excluded;
  std::sort(excl.begin(), excl.end());
  std::vector<Point> out;
  IVec n(dims.b, -box.N);
  do {
    IVec j(dims.d, 0);
    bool inside = true;
    for (int i = 0; i < dims.d; ++i) {
      for (int k = 0; k < dims.b; ++k) j[i] -= n[k] * basis.modes[k][i];
      inside = inside && std::abs(j[i] - J[i]) <= box.N;
    }
    if (!inside) continue;
    Point x = Point::make(n, j, dims);
    if (canonical_only && !is_canonical(x)) continue;
    if (!std::binary_search(excl.begin(), excl.end(), x)) out.push_back(x);
  } while (next_in_box(n, -box.N, box.N));
  std::sort(out.begin(), out.end());
  return out;
}

CosineSeries linearization_kernel(const CosineSeries& u, const Nonlinearity& nl, const ConvolveOptions& opt) {
  nl.validate(u.dims());
  if (u.empty()) return CosineSeries(u.dims());
  CosineSeries a = power(u, nl.p, opt).scaled(nl.p + 1.0);
  for (auto& [m, alpha] : nl.higher) a += convolve(alpha, power(u, m - 1, opt), opt).scaled(double(m));
  return a;
}

// ---- Csr ---------------------------------------------------------------

void Csr::matvec(const double* x, double* y) const {
  kernels::csr_matvec(rowptr.data(), col.data(), val.data(), x, y, nrows);
}

Csr Csr::extract(const std::vector<int>& rows, const std::vector<int>& cols) const {
  std::vector<int> map(ncols, -1);
  for (std::size_t i = 0; i < cols.size(); ++i) map[cols[i]] = static_cast<int>(i);
  Csr out;
  out.nrows = rows.size();
  out.ncols = cols.size();
  out.rowptr.assign(1, 0);
  for (int r : rows) {
    for (std::int64_t k = rowptr[r]; k < rowptr[r + 1]; ++k)
      if (map[col[k]] >= 0) {
        out.col.push_back(map[col[k]]);
        out.val.push_back(val[k]);
      }
    out.rowptr.push_back(static_cast<std::int64_t>(out.col.size()));
  }
  return out;
}

double Csr::row_abs_sum(std::size_t r) const {
  double s = 0;
  for (std::int64_t k = rowptr[r]; k < rowptr[r + 1]; ++k) s += std::fabs(val[k]);
  return s;
}

// ---- TruncatedOperator -----------------------------------------------------

TruncatedOperator TruncatedOperator::from_kernel(const CosineSeries& kernel, const std::vector<double>& omega,
                                                 double theta, std::vector<Point> points, Sector sector,
                                                 double kernel_rel_tol) {
  TruncatedOperator T;
  T.dims_ = kernel.dims();
  T.sector_ = sector;
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (sector == Sector::even)
    for (auto& x : points)
      if (!is_canonical(x)) throw std::invalid_argument("even sector needs canonical points");
  T.points_ = std::move(points);
  for (std::size_t i = 0; i < T.points_.size(); ++i) T.index_.emplace(T.points_[i], static_cast<int>(i));
  T.omega_ = omega;
  T.set_theta(theta);

  const double amax = sup_norm(kernel);
  std::vector<std::pair<Point, double>> kz;
  for (auto& [z, v] : kernel.full_terms())
    if (std::fabs(v) > kernel_rel_tol * amax) kz.emplace_back(z, v);

  const std::size_t n = T.points_.size();
  std::vector<std::vector<std::pair<int, double>>> rows(n);
  parallel_for(0, n, [&](std::size_t r) {
    const Point& x = T.points_[r];
    auto& row = rows[r];
    for (auto& [z, v] : kz) {
      Point w = x - z;
      if (sector == Sector::even) {
        auto it = T.index_.find(canonical(w));
        if (it != T.index_.end()) row.emplace_back(it->second, v);
      } else {
        auto it = T.index_.find(w);
        if (it != T.index_.end()) row.emplace_back(it->second, 0.5 * v);
        it = T.index_.find(-w);
        if (it != T.index_.end()) row.emplace_back(it->second, 0.5 * v);
      }
    }
    std::sort(row.begin(), row.end());
    std::vector<std::pair<int, double>> merged;
    for (auto& e : row) {
      if (!merged.empty() && merged.back().first == e.first) merged.back().second += e.second;
      else merged.push_back(e);
    }
    row.swap(merged);
  });
  T.conv_.nrows = T.conv_.ncols = n;
  for (auto& row : rows) {
    for (auto& [c, v] : row) {
      T.conv_.col.push_back(c);
      T.conv_.val.push_back(v);
    }
    T.conv_.rowptr.push_back(static_cast<std::int64_t>(T.conv_.col.size()));
  }
  return T;
}

TruncatedOperator TruncatedOperator::build(const CosineSeries& u, const std::vector<double>& omega, double theta,
                                           std::vector<Point> points, const Nonlinearity& nl, Sector sector,
                                           double kernel_rel_tol) {
  CosineSeries a = u.empty() ? CosineSeries(u.dims()) : linearization_kernel(u, nl);
  return from_kernel(a, omega, theta, std::move(points), sector, kernel_rel_tol);
}

int TruncatedOperator::index_of(const Point& x) const {
  auto it = index_.find(x);
  return it == index_.end() ? -1 : it->second;
}

void TruncatedOperator::set_theta(double theta) {
  theta_ = theta;
  sym_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) sym_[i] = symbol(points_[i], dims_, omega_, theta);
}

void TruncatedOperator::set_symbol_diag(std::vector<double> d) {
  if (d.size() != points_.size()) throw std::invalid_argument("set_symbol_diag: size mismatch");
  sym_ = std::move(d);
}

double TruncatedOperator::entry(int r, int c) const {
  double v = r == c ? sym_[r] : 0.0;
  for (std::int64_t k = conv_.rowptr[r]; k < conv_.rowptr[r + 1]; ++k)
    if (conv_.col[k] == c) v += conv_.val[k];
  return v;
}

std::vector<double> TruncatedOperator::diagonal() const {
  std::vector<double> d = sym_;
  for (std::size_t r = 0; r < size(); ++r)
    for (std::int64_t k = conv_.rowptr[r]; k < conv_.rowptr[r + 1]; ++k)
      if (conv_.col[k] == static_cast<int>(r)) d[r] += conv_.val[k];
  return d;
}

void TruncatedOperator::apply(const double* x, double* y) const {
  conv_.matvec(x, y);
  for (std::size_t i = 0; i < size(); ++i) y[i] += sym_[i] * x[i];
}

Eigen::MatrixXd TruncatedOperator::dense() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    M(r, r) = sym_[r];
    for (std::int64_t k = conv_.rowptr[r]; k < conv_.rowptr[r + 1]; ++k) M(r, conv_.col[k]) += conv_.val[k];
  }
  return M;
}

std::vector<int> TruncatedOperator::component_of(const std::vector<int>& seeds) const {
  std::vector<char> seen(size(), 0);
  std::deque<int> q;
  for (int s : seeds)
    if (!seen[s]) {
      seen[s] = 1;
      q.push_back(s);
    }
  std::vector<int> out;
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    out.push_back(v);
    for (std::int64_t k = conv_.rowptr[v]; k < conv_.rowptr[v + 1]; ++k) {
      int w = conv_.col[k];
      if (!seen[w]) {
        seen[w] = 1;
        q.push_back(w);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<int>> TruncatedOperator::components() const {
  std::vector<char> seen(size(), 0);
  std::vector<std::vector<int>> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (seen[i]) continue;
    auto c = component_of({static_cast<int>(i)});
    for (int v : c) seen[v] = 1;
    out.push_back(std::move(c));
  }
  return out;
}

TruncatedOperator TruncatedOperator::restrict_to(const std::vector<int>& idx) const {
  TruncatedOperator T;
  T.dims_ = dims_;
  T.sector_ = sector_;
  T.omega_ = omega_;
  T.theta_ = theta_;
  for (int i : idx) {
    T.index_.emplace(points_[i], static_cast<int>(T.points_.size()));
    T.points_.push_back(points_[i]);
    T.sym_.push_back(sym_[i]);
  }
  T.conv_ = conv_.extract(idx, idx);
  return T;
}

// ---- Schur ------------------------------------------------------------------

std::vector<int> default_near_set(const TruncatedOperator& T, double W, double delta, int p) {
  const double thr = W * std::pow(delta, p);
  const auto diag = T.diagonal();
  std::vector<int> near;
  for (std::size_t i = 0; i < T.size(); ++i) {
    double off = T.conv().row_abs_sum(i);
    double dd = 0;
    for (std::int64_t k = T.conv().rowptr[i]; k < T.conv().rowptr[i + 1]; ++k)
      if (T.conv().col[k] == static_cast<int>(i)) dd = std::fabs(T.conv().val[k]);
    off -= dd;
    if (std::fabs(T.symbol_diag()[i]) < thr || std::fabs(diag[i]) <= 2 * off) near.push_back(static_cast<int>(i));
  }
  return near;
}

SchurSolver::SchurSolver(const TruncatedOperator& T, std::vector<int> near, const SchurOptions& opt)
    : T_(&T), opt_(opt), near_(std::move(near)) {
  std::sort(near_.begin(), near_.end());
  near_.erase(std::unique(near_.begin(), near_.end()), near_.end());
  const std::size_t n = T.size();
  std::vector<char> is_near(n, 0);
  for (int i : near_) is_near[i] = 1;
  pos_.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_near[i]) continue;
    pos_[i] = static_cast<int>(comp_.size());
    comp_.push_back(static_cast<int>(i));
  }
  for (std::size_t i = 0; i < near_.size(); ++i) pos_[near_[i]] = static_cast<int>(i);
  diag_.near = near_.size();
  diag_.complement = comp_.size();

  const auto full_diag = T.diagonal();
  Csr cc = T.conv().extract(comp_, comp_);
  cc_off_.nrows = cc_off_.ncols = comp_.size();
  cc_inv_diag_.resize(comp_.size());
  std::vector<std::pair<Point, double>> offending;
  for (std::size_t r = 0; r < comp_.size(); ++r) {
    double d = full_diag[comp_[r]] - opt.lambda;
    double off = 0;
    for (std::int64_t k = cc.rowptr[r]; k < cc.rowptr[r + 1]; ++k) {
      if (cc.col[k] == static_cast<int>(r)) continue;
      cc_off_.col.push_back(cc.col[k]);
      cc_off_.val.push_back(cc.val[k]);
      off += std::fabs(cc.val[k]);
    }
    cc_off_.rowptr.push_back(static_cast<std::int64_t>(cc_off_.col.size()));
    if (d == 0.0) offending.emplace_back(T.points()[comp_[r]], d);
    cc_inv_diag_[r] = d == 0.0 ? 0.0 : 1.0 / d;
    if (d != 0.0) diag_.complement_contraction = std::max(diag_.complement_contraction, off / std::fabs(d));
  }
  if (!offending.empty()) {
    std::ostringstream os;
    os << "complement has " << offending.size() << " zero diagonal entries outside the near set";
    throw SchurError(os.str(), std::move(offending));
  }
  cp_ = T.conv().extract(comp_, near_);
  pc_ = T.conv().extract(near_, comp_);

  const auto m = static_cast<Eigen::Index>(near_.size());
  H_ = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) H_(a, b) = T.entry(near_[a], near_[b]) - (a == b ? opt.lambda : 0.0);
  // H = T_PP - T_Pc T_cc^{-1} T_cP, one complement solve per near column
  std::vector<Eigen::VectorXd> cols(m);
  std::vector<int> sweeps(m, 0);
  parallel_for(0, static_cast<std::size_t>(m), [&](std::size_t q) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(comp_.size()));
    for (std::size_t r = 0; r < comp_.size(); ++r)
      for (std::int64_t k = cp_.rowptr[r]; k < cp_.rowptr[r + 1]; ++k)
        if (cp_.col[k] == static_cast<int>(q)) rhs[r] += cp_.val[k];
    Eigen::VectorXd y = complement_solve(rhs, &sweeps[q]);
    Eigen::VectorXd c(m);
    pc_.matvec(y.data(), c.data());
    cols[q] = c;
  });
  for (Eigen::Index q = 0; q < m; ++q) {
    H_.col(q) -= cols[q];
    diag_.max_sweeps_used = std::max(diag_.max_sweeps_used, sweeps[q]);
  }
  if (m > 0) {
    H_lu_.compute(H_);
    diag_.h_rcond = H_lu_.rcond();
    double ld = 0;
    for (Eigen::Index i = 0; i < m; ++i) ld += std::log(std::fabs(H_lu_.matrixLU()(i, i)));
    diag_.h_log_abs_det = ld;
    std::vector<Point> block;
    for (int i : near_) block.push_back(T.points()[i]);
    if (!(diag_.h_rcond > 1e-14) || !std::isfinite(ld))
      throw ExcisionSignal("reduced block H is singular (rcond " + std::to_string(diag_.h_rcond) + ")", ld, block);
    diag_.h_inv_norm = H_lu_.inverse().cwiseAbs().rowwise().sum().maxCoeff();
  }
}

Eigen::VectorXd SchurSolver::complement_solve(const Eigen::VectorXd& rhs, int* sweeps) const {
  const std::size_t n = comp_.size();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (n == 0) return x;
  const double scale = std::max(kernels::max_abs(rhs.data(), n), std::numeric_limits<double>::min());
  std::vector<double> off(n, 0.0);
  double rmax = INFINITY, prev = INFINITY;
  int growth = 0;
  for (int s = 1; s <= opt_.max_sweeps; ++s) {
    kernels::jacobi_update(rhs.data(), off.data(), cc_inv_diag_.data(), x.data(), n);
    if (sweeps) *sweeps = s;
    // the off-diagonal product doubles as the next sweep's input and the residual check
    cc_off_.matvec(x.data(), off.data());
    rmax = 0;
    for (std::size_t i = 0; i < n; ++i) rmax = std::max(rmax, std::fabs(rhs[i] - x[i] / cc_inv_diag_[i] - off[i]));
    if (rmax <= opt_.jacobi_tol * scale) return x;
    growth = rmax > prev ? growth + 1 : 0;
    prev = rmax;
    if (growth > 50 || !std::isfinite(rmax)) break;
  }
  std::vector<std::pair<Point, double>> offending;
  for (std::size_t r = 0; r < n; ++r) {
    double d = 1.0 / cc_inv_diag_[r];
    if (std::fabs(d) <= cc_off_.row_abs_sum(r)) offending.emplace_back(T_->points()[comp_[r]], d);
  }
  std::ostringstream os;
  os << "complement iteration did not converge (relative residual " << rmax / scale << "); "
     << offending.size() << " rows are not diagonally dominant";
  throw SchurError(os.str(), std::move(offending));
}

Eigen::VectorXd SchurSolver::solve(const Eigen::VectorXd& rhs) const {
  const auto n = static_cast<Eigen::Index>(T_->size());
  if (rhs.size() != n) throw std::invalid_argument("SchurSolver::solve: size mismatch");
  Eigen::VectorXd rc(static_cast<Eigen::Index>(comp_.size())), rp(static_cast<Eigen::Index>(near_.size()));
  for (std::size_t i = 0; i < comp_.size(); ++i) rc[i] = rhs[comp_[i]];
  for (std::size_t i = 0; i < near_.size(); ++i) rp[i] = rhs[near_[i]];
  Eigen::VectorXd xp = Eigen::VectorXd::Zero(rp.size());
  if (!near_.empty()) {
    Eigen::VectorXd y = complement_solve(rc, nullptr);
    Eigen::VectorXd t(rp.size());
    pc_.matvec(y.data(), t.data());
    xp = H_lu_.solve(rp - t);
    Eigen::VectorXd s(rc.size());
    cp_.matvec(xp.data(), s.data());
    rc -= s;
  }
  Eigen::VectorXd xc = complement_solve(rc, nullptr);
  Eigen::VectorXd x(n);
  for (std::size_t i = 0; i < comp_.size(); ++i) x[comp_[i]] = xc[i];
  for (std::size_t i = 0; i < near_.size(); ++i) x[near_[i]] = xp[i];
  return x;
}

Eigen::VectorXd SchurSolver::column(int y) const {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(T_->size()));
  e[y] = 1.0;
  return solve(e);
}

Eigen::MatrixXd SchurSolver::inverse() const {
  const auto n = static_cast<Eigen::Index>(T_->size());
  Eigen::MatrixXd G(n, n);
  parallel_for(0, static_cast<std::size_t>(n), [&](std::size_t c) { G.col(c) = column(static_cast<int>(c)); });
  return G;
}

double SchurSolver::inverse_norm_estimate(int iterations) const {
  const auto n = static_cast<Eigen::Index>(T_->size());
  if (n == 0) return 0;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n) / std::sqrt(double(n));
  double est = 0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd y = solve(x);
    est = y.norm();
    if (est == 0) return 0;
    x = y / est;
  }
  return est;
}

// ---- Green decay ----------------------------------------------------------

std::vector<GreenPair> green_pairs(const TruncatedOperator& T, const Eigen::MatrixXd& G, const std::vector<int>& cols) {
  std::vector<GreenPair> out;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const Point& y = T.points()[cols[c]];
    for (Eigen::Index r = 0; r < G.rows(); ++r) {
      if (r == cols[c]) continue;
      const Point& x = T.points()[r];
      out.push_back({x, y, std::fabs(G(r, static_cast<Eigen::Index>(c))), (x - y).inf_norm()});
    }
  }
  return out;
}

GreenDecayReport measure_green_decay(const std::vector<GreenPair>& entries, double beta_candidate, double delta) {
  GreenDecayReport rep;
  rep.candidate = beta_candidate;
  rep.pairs = entries.size();
  const double L = std::fabs(std::log(delta));
  auto ratio = [&](const GreenPair& e) {
    return e.g == 0.0 ? INFINITY : -std::log(e.g) / (L * double(e.dist));
  };
  const double cut = beta_candidate > 0 ? 1.0 / (beta_candidate * beta_candidate) : 0.0;
  rep.beta_hat = INFINITY;
  for (auto& e : entries) {
    if (e.dist <= 0) continue;
    rep.max_dist = std::max(rep.max_dist, e.dist);
    if (double(e.dist) <= cut) continue;
    ++rep.qualifying_pairs;
    double r = ratio(e);
    if (r < rep.beta_hat || rep.vacuous) {
      rep.beta_hat = r;
      rep.argmin = e;
      rep.vacuous = false;
    }
  }
  if (rep.vacuous) rep.beta_hat = 0;
  rep.candidate_pass = !rep.vacuous && beta_candidate > 0 && rep.beta_hat >= beta_candidate;

  // Self-consistent fit: on beta in (1/sqrt(d_i), 1/sqrt(d_{i-1})] the pairs in
  // range are those with dist >= d_i, and beta works iff it is below their
  // minimum ratio.
  std::vector<std::pair<long, double>> rs;
  for (auto& e : entries)
    if (e.dist > 0) rs.emplace_back(e.dist, ratio(e));
  std::sort(rs.begin(), rs.end());
  std::vector<double> sufmin(rs.size() + 1, INFINITY);
  for (std::size_t i = rs.size(); i-- > 0;) sufmin[i] = std::min(sufmin[i + 1], rs[i].second);
  for (std::size_t i = 0; i < rs.size();) {
    const long di = rs[i].first;
    const double upper = i == 0 ? INFINITY : 1.0 / std::sqrt(double(rs[i - 1].first));
    const double cand = std::min(sufmin[i], upper);
    if (cand > 1.0 / std::sqrt(double(di)) && std::isfinite(cand))
      rep.beta_self_consistent = std::max(rep.beta_self_consistent, cand);
    while (i < rs.size() && rs[i].first == di) ++i;
  }
  return rep;
}

}  // namespace kgqp
