#include "kgqp/sweep.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>

#include "kgqp/parallel.hpp"
#include "kgqp/zerofamily.hpp"

namespace kgqp {

std::size_t ThetaGrid::size() const {
  if (!(step > 0) || hi < lo) return 0;
  return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

double eta_delta_power(double delta, int p, double eps) { return std::pow(delta, p + eps); }

double eta_exp_scale(long N, double sigma) { return std::exp(-std::pow(double(N), sigma)); }

namespace {

double min_abs_eig(const TruncatedOperator& T) {
  if (T.size() == 0) return INFINITY;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T.dense(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().minCoeff();
}

std::vector<std::pair<double, double>> merge(std::vector<std::pair<double, double>> v) {
  std::sort(v.begin(), v.end());
  std::vector<std::pair<double, double>> out;
  for (auto& iv : v) {
    if (!out.empty() && iv.first <= out.back().second) out.back().second = std::max(out.back().second, iv.second);
    else out.push_back(iv);
  }
  return out;
}

std::vector<std::pair<double, double>> block_bad(TruncatedOperator T, double eta, double lo, double hi) {
  std::vector<double> cuts{lo, hi};
  for (double mu : {eta, -eta})
    for (double z : quadratic_eigen_zeros(T, mu))
      if (z > lo && z < hi) cuts.push_back(z);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    T.set_theta(0.5 * (cuts[i] + cuts[i + 1]));
    if (min_abs_eig(T) < eta) out.emplace_back(cuts[i], cuts[i + 1]);
  }
  return merge(out);
}

}  // namespace

std::vector<std::pair<double, double>> bad_theta_intervals(const TruncatedOperator& T, double eta, double lo,
                                                           double hi) {
  const auto comps = T.components();
  std::vector<std::pair<double, double>> all;
  std::mutex mu;
  parallel_for(0, comps.size(), [&](std::size_t c) {
    auto iv = block_bad(T.restrict_to(comps[c]), eta, lo, hi);
    std::lock_guard<std::mutex> lock(mu);
    all.insert(all.end(), iv.begin(), iv.end());
  });
  return merge(all);
}

SweepReport theta_bad_sweep(const CosineSeries& u, const std::vector<double>& omega, long N, const ThetaGrid& grid,
                            double eta, const Nonlinearity& nl, int verify_samples, unsigned seed) {
  const Dims dims = u.dims();
  SweepReport rep;
  rep.N = N;
  rep.eta = eta;
  rep.grid = grid;
  rep.grid_points = grid.size();
  auto T = TruncatedOperator::build(u, omega, 0.0, box_points(Box{N, {}, {}}, dims), nl, Sector::full);
  const auto comps = T.components();
  rep.components = comps.size();
  for (auto& c : comps) rep.largest_component = std::max(rep.largest_component, c.size());

  auto ivs = bad_theta_intervals(T, eta, grid.lo, grid.hi);

  std::vector<double> roots;
  for (auto& x : T.points()) {
    const IVec n = x.n(dims), j = x.j(dims);
    double nw = 0, jj = 1;
    for (int k = 0; k < dims.b; ++k) nw += n[k] * omega[k];
    for (long v : j) jj += double(v) * v;
    roots.push_back(-nw + std::sqrt(jj));
    roots.push_back(-nw - std::sqrt(jj));
  }
  std::sort(roots.begin(), roots.end());

  const std::size_t G = rep.grid_points;
  for (auto& [a, b] : ivs) {
    BadInterval bi{a, b, 0, 0};
    const double mid = 0.5 * (a + b);
    auto it = std::lower_bound(roots.begin(), roots.end(), mid);
    double best = INFINITY;
    if (it != roots.end()) best = *it;
    if (it != roots.begin() && std::fabs(*(it - 1) - mid) < std::fabs(best - mid)) best = *(it - 1);
    bi.nearest_root = best;
    // distance from the root to the far end of the interval
    bi.root_distance = std::max(std::fabs(a - best), std::fabs(b - best));
    if (best >= a && best <= b) bi.root_distance = std::max(best - a, b - best);
    rep.max_root_distance = std::max(rep.max_root_distance, bi.root_distance);
    rep.interval_measure += b - a;
    rep.intervals.push_back(bi);
    if (G == 0) continue;
    // grid indices g with lo + g*step in [a, b]
    const double ga = std::ceil((a - grid.lo) / grid.step), gb = std::floor((b - grid.lo) / grid.step);
    const double lo_g = std::max(0.0, ga), hi_g = std::min(double(G - 1), gb);
    if (hi_g >= lo_g) rep.bad_points += static_cast<std::size_t>(hi_g - lo_g) + 1;
  }
  if (G) {
    rep.fraction = double(rep.bad_points) / double(G);
    rep.measure = rep.fraction * (grid.hi - grid.lo);
  }

  if (verify_samples > 0 && G > 0) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, G - 1);
    std::vector<TruncatedOperator> blocks;
    for (auto& c : comps) blocks.push_back(T.restrict_to(c));
    for (int s = 0; s < verify_samples; ++s) {
      const double th = grid.lo + double(pick(rng)) * grid.step;
      double m = INFINITY;
      for (auto& B : blocks) {
        B.set_theta(th);
        m = std::min(m, min_abs_eig(B));
      }
      bool bad_direct = m < eta;
      bool bad_iv = false;
      for (auto& [a, b] : ivs) bad_iv = bad_iv || (th >= a && th <= b);
      ++rep.verified;
      if (bad_direct != bad_iv) ++rep.verify_mismatch;
    }
  }
  return rep;
}

}  // namespace kgqp
