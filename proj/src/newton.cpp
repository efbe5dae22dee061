#include "kgqp/newton.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace kgqp {

// ---- parameters -------------------------------------------------------------

void SolverParameters::validate(int b) const {
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(0 < tau && tau < 1 / s && 1 / s < kappa && kappa < sigma && sigma < c && c < 1))
    throw std::invalid_argument("exponents must satisfy 0 < tau < 1/s < kappa < sigma < c < 1");
  if (!(epsilon > 0 && epsilon < 0.5)) throw std::invalid_argument("epsilon must lie in (0, 1/2)");
  if (!a.empty()) {
    if (static_cast<int>(a.size()) != b) throw std::invalid_argument("need b amplitudes");
    for (double v : a)
      if (v == 0 || std::fabs(v) >= delta) throw std::invalid_argument("amplitudes must lie in (-delta, delta) \\ {0}");
  }
  if (M < 2) throw std::invalid_argument("scale base M must be >= 2");
  if (r_max < 0) throw std::invalid_argument("r_max must be >= 0");
  if (!(W > 1)) throw std::invalid_argument("W must exceed 1");
  if (B < 2 || !(Cprime > 1)) throw std::invalid_argument("quadratic gate needs B >= 2 and C' > 1");
}

std::vector<double> SolverParameters::amplitudes(int b) const {
  // the open cube (-delta, delta): the default sits just inside its corner
  return a.empty() ? std::vector<double>(b, delta * (1 - 1e-9)) : a;
}

long SolverParameters::initial_scale() const {
  return static_cast<long>(std::ceil(std::pow(std::fabs(std::log(delta)), s)));
}

// ---- gates --------------------------------------------------------------------

namespace {

bool next_in_box(std::vector<long>& v, long lo, long hi) {
  int i = static_cast<int>(v.size()) - 1;
  while (i >= 0 && v[i] == hi) v[i--] = lo;
  if (i < 0) return false;
  ++v[i];
  return true;
}

bool canonical_vec(const std::vector<long>& n) {
  for (long v : n)
    if (v) return v > 0;
  return false;
}

}  // namespace

GateResult diophantine_gate(const std::vector<long double>& omega, long N, double xi, double gamma) {
  GateResult g;
  g.worst = INFINITY;
  const int b = static_cast<int>(omega.size());
  for (long r = 1; r <= N && g.pass; ++r) {
    std::vector<long> n(b, -r);
    do {
      long m = 0;
      for (long v : n) m = std::max(m, std::labs(v));
      if (m != r || !canonical_vec(n)) continue;
      long double v = 0;
      for (int k = 0; k < b; ++k) v += n[k] * omega[k];
      const long double dist = std::fabs(v - std::nearbyint(v));
      const double ratio = static_cast<double>(dist) * std::pow(double(r), gamma) / xi;
      if (ratio < g.worst) {
        g.worst = ratio;
        g.worst_n = n;
      }
      if (dist == 0 || ratio < 1) {
        g.pass = false;
        g.detail = dist == 0 ? "exact integer hit" : "below xi/|n|^gamma";
      }
    } while (next_in_box(n, -r, r));
  }
  return g;
}

SmallDivisorFit small_divisor_fit(const FrequencyBasis& basis, long N) {
  const int b = basis.b, d = basis.d;
  // attainable |j|^2 inside the box
  std::set<long> norms;
  {
    std::vector<long> j(d, -N);
    do norms.insert(sq_norm(j));
    while (next_in_box(j, -N, N));
  }
  const std::vector<long> nv(norms.begin(), norms.end());
  const auto w0 = basis.omega0_double();
  std::map<long, double> shell;
  std::vector<long> n(b, -N);
  do {
    if (!canonical_vec(n)) continue;
    long l1 = 0;
    for (long v : n) l1 += std::labs(v);
    long double nw = 0;
    for (int k = 0; k < b; ++k) nw += n[k] * static_cast<long double>(w0[k]);
    const long double target = nw * nw - 1;
    const long pos = std::lower_bound(nv.begin(), nv.end(), static_cast<long>(std::floor(target))) - nv.begin();
    double best = INFINITY;
    for (long i = std::max(0L, pos - 1); i <= pos + 1 && i < static_cast<long>(nv.size()); ++i) {
      const long double val = std::fabs(std::fabs(nw) - std::sqrt(static_cast<long double>(nv[i]) + 1));
      if (val < 1e-9L) {
        QuadField q = dot(n, basis.omega0);
        if ((q * q - QuadField(nv[i] + 1)).is_zero()) continue;  // on the characteristics
      }
      best = std::min(best, static_cast<double>(val));
    }
    auto& s = shell.try_emplace(l1, INFINITY).first->second;
    s = std::min(s, best);
  } while (next_in_box(n, -N, N));
  SmallDivisorFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (auto& [r, m] : shell) {
    if (!std::isfinite(m) || m <= 0) continue;
    fit.shell_min.emplace_back(r, m);
    const double x = std::log(double(r)), y = std::log(m);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt >= 2) {
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    fit.q = -slope;
    fit.c_prime = INFINITY;
    for (auto& [r, m] : fit.shell_min) fit.c_prime = std::min(fit.c_prime, m * std::pow(double(r), fit.q));
  }
  return fit;
}

namespace {

template <class Eval>
GateResult quadratic_gate_impl(int b, long B, double Cprime, double delta, int p, int d, int samples, unsigned seed,
                               Eval&& abs_lower) {
  GateResult g;
  g.worst = INFINITY;
  const long R = static_cast<long>(std::llround(std::pow(double(B), 2 * d + 1)));
  const double thr = std::pow(delta, p) * std::pow(double(B), -Cprime);
  const int nm = 1 + b * (b + 1) / 2;  // constant and chi_k chi_l, k <= l
  auto check = [&](const std::vector<long>& coef) {
    const double v = abs_lower(coef);
    const double ratio = v / thr;
    if (ratio < g.worst) {
      g.worst = ratio;
      g.worst_n = coef;
    }
    if (!(v > thr)) g.pass = false;
  };
  std::vector<long> coef(nm, 0);
  for (int m1 = 0; m1 < nm; ++m1)
    for (long c1 = -R; c1 <= R; ++c1) {
      if (!c1) continue;
      coef.assign(nm, 0);
      coef[m1] = c1;
      check(coef);
      for (int m2 = m1 + 1; m2 < nm; ++m2)
        for (long c2 = -R; c2 <= R; ++c2) {
          if (!c2) continue;
          coef[m2] = c2;
          check(coef);
          coef[m2] = 0;
        }
    }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<long> pick(-R, R);
  for (int s = 0; s < samples; ++s) {
    bool nz = false;
    for (auto& c : coef) {
      c = pick(rng);
      nz = nz || c;
    }
    if (nz) check(coef);
  }
  std::ostringstream os;
  os << "coefficients in [-" << R << ", " << R << "], bound " << thr;
  g.detail = os.str();
  return g;
}

}  // namespace

GateResult quadratic_gate(const std::vector<long double>& omega, long B, double Cprime, double delta, int p, int d,
                          int samples, unsigned seed) {
  const int b = static_cast<int>(omega.size());
  std::vector<long double> mon{1.0L};
  for (int k = 0; k < b; ++k)
    for (int l = k; l < b; ++l) mon.push_back(omega[k] * omega[l]);
  return quadratic_gate_impl(b, B, Cprime, delta, p, d, samples, seed, [&](const std::vector<long>& c) {
    long double v = 0;
    for (std::size_t i = 0; i < c.size(); ++i) v += c[i] * mon[i];
    return static_cast<double>(std::fabs(v));
  });
}

GateResult quadratic_gate_exact(const std::vector<QuadField>& omega, long B, double Cprime, double delta, int p,
                                int d, int samples, unsigned seed) {
  const int b = static_cast<int>(omega.size());
  std::vector<QuadField> mon{QuadField(1)};
  for (int k = 0; k < b; ++k)
    for (int l = k; l < b; ++l) mon.push_back(omega[k] * omega[l]);
  return quadratic_gate_impl(b, B, Cprime, delta, p, d, samples, seed, [&](const std::vector<long>& c) {
    QuadField v;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i]) v += mon[i] * mpq_class(c[i]);
    if (v.is_zero()) return 0.0;
    SignInterval si = sign_and_interval(v, 64);
    mpq_class lo = si.sign > 0 ? mpq_class(si.lo) : mpq_class(-si.hi);
    return lo.get_d();
  });
}

// ---- state and residual ----------------------------------------------------------

SolutionState initial_state(const FrequencyBasis& basis, const std::vector<double>& a, const Nonlinearity& nl) {
  SolutionState st;
  st.a.assign(a.begin(), a.end());
  st.u = initial_series(basis, a).cast<long double>();
  st.omega = q_solve(st.u, st.a, basis, nl);
  return st;
}

namespace {

struct AccurateSymbol {
  const FrequencyBasis& basis;
  std::vector<long double> w0, dw;

  AccurateSymbol(const FrequencyBasis& fb, const std::vector<long double>& omega) : basis(fb) {
    for (int k = 0; k < fb.b; ++k) {
      w0.push_back(std::sqrt(static_cast<long double>(fb.radicands[k])));
      dw.push_back(omega[k] - w0.back());
    }
  }

  long double operator()(const Point& x) const {
    const Dims dims{basis.b, basis.d};
    const IVec n = x.n(dims), j = x.j(dims);
    long double nw0 = 0, D = 0, jj = 1;
    for (int k = 0; k < basis.b; ++k) {
      nw0 += n[k] * w0[k];
      D += n[k] * dw[k];
    }
    for (long v : j) jj += static_cast<long double>(v) * v;
    long double E = jj - nw0 * nw0;
    if (std::fabs(E) < 1e-6L) {
      QuadField q = dot(n, basis.omega0);
      QuadField e = QuadField(static_cast<long>(jj)) - q * q;
      E = e.is_zero() ? 0.0L : e.to_long_double();
    }
    return E - D * (2 * nw0 + D);
  }
};

bool kernel_on_sublattice(const Nonlinearity& nl, const FrequencyBasis& basis) {
  const Dims dims{basis.b, basis.d};
  for (auto& [m, alpha] : nl.higher)
    for (auto& [x, v] : alpha.terms()) {
      const IVec n = x.n(dims), j = x.j(dims);
      for (int i = 0; i < basis.d; ++i) {
        long s = 0;
        for (int k = 0; k < basis.b; ++k) s -= n[k] * basis.modes[k][i];
        if (s != j[i]) return false;
      }
    }
  return true;
}

double l2(const CosineSeriesL& u) { return l2_norm(u); }

double weighted(const CosineSeriesL& u, const Weight& w) { return weighted_norm(u.cast<double>(), w); }

}  // namespace

namespace {

CosineSeriesL nonlinear_accurate(const CosineSeriesL& u, const Nonlinearity& nl, double drop_rel, double* dropped) {
  ConvolveOptions opt;
  const double sup = sup_norm(u);
  opt.drop_tol = drop_rel * sup * sup;
  ConvolveStats stats;
  CosineSeriesL r = nonlinear_part(u, nl, opt, &stats);
  if (dropped) *dropped = stats.dropped_l1;
  return r;
}

CosineSeriesL add_linear_part(CosineSeriesL r, const SolutionState& st, const FrequencyBasis& basis) {
  AccurateSymbol D(basis, st.omega);
  std::vector<CosineSeriesL::Term> terms;
  for (auto& [x, v] : st.u.terms()) terms.emplace_back(x, D(x) * v);
  r += CosineSeriesL::from_terms(st.u.dims(), terms);
  return r;
}

}  // namespace

CosineSeriesL residual_accurate(const SolutionState& st, const FrequencyBasis& basis, const Nonlinearity& nl,
                                double drop_rel, double* dropped) {
  return add_linear_part(nonlinear_accurate(st.u, nl, drop_rel, dropped), st, basis);
}

// ---- Newton step ------------------------------------------------------------------

TruncatedOperator step_operator(const SolutionState& st, const CosineSeriesL& F, long N, const FrequencyBasis& basis,
                                const Nonlinearity& nl, const SolverParameters& prm) {
  const Dims dims{basis.b, basis.d};
  Box box{N, {}, exceptional_set(basis)};
  auto pts = kernel_on_sublattice(nl, basis) ? sublattice_points(box, basis, true) : [&] {
    std::vector<Point> out;
    for (auto& x : box_points(box, dims))
      if (is_canonical(x) || x.is_zero()) out.push_back(x);
    return out;
  }();
  std::vector<double> omega_d(st.omega.begin(), st.omega.end());
  auto T0 = TruncatedOperator::build(st.u.cast<double>(), omega_d, 0.0, pts, nl, Sector::even, prm.kernel_rel_tol);
  std::vector<int> seeds;
  for (auto& [x, v] : F.terms()) {
    int i = T0.index_of(x);
    if (i >= 0 && v != 0) seeds.push_back(i);
  }
  auto T = T0.restrict_to(T0.component_of(seeds));
  AccurateSymbol D(basis, st.omega);
  std::vector<double> diag(T.size());
  for (std::size_t i = 0; i < T.size(); ++i) diag[i] = static_cast<double>(D(T.points()[i]));
  T.set_symbol_diag(std::move(diag));
  return T;
}

StepReport newton_step(SolutionState& st, long N, const FrequencyBasis& basis, const Nonlinearity& nl,
                       const SolverParameters& prm) {
  StepReport rep;
  rep.r = st.r + 1;
  rep.N = N;
  const Dims dims{basis.b, basis.d};
  const Weight wt{prm.beta, prm.delta};
  CosineSeriesL F = residual_accurate(st, basis, nl, prm.drop_rel);
  rep.residual_before = l2(F);
  auto T = step_operator(st, F, N, basis, nl, prm);
  rep.points = T.size();

  auto near = default_near_set(T, prm.W, prm.delta, basis.p);
  rep.near = near.size();
  SchurSolver S(T, near);
  rep.schur_contraction = S.diagnostics().complement_contraction;
  rep.h_rcond = S.diagnostics().h_rcond;
  rep.jacobi_sweeps = S.diagnostics().max_sweeps_used;

  Eigen::VectorXd rhs(static_cast<Eigen::Index>(T.size()));
  for (std::size_t i = 0; i < T.size(); ++i) rhs[i] = -static_cast<double>(F.at(T.points()[i]));
  Eigen::VectorXd du = S.solve(rhs);

  CosineSeriesL::Accumulator acc;
  for (std::size_t i = 0; i < T.size(); ++i)
    if (du[i] != 0) acc[T.points()[i]] = du[i];
  CosineSeriesL dU = CosineSeriesL::from_accumulator(dims, std::move(acc));
  rep.du_l2 = l2(dU);
  rep.du_weighted = weighted(dU, wt);

  st.u += dU;
  double dropped = 0;
  CosineSeriesL Nu = nonlinear_accurate(st.u, nl, prm.drop_rel, &dropped);
  st.omega = q_solve_from(Nu, st.a, basis);
  st.r += 1;
  CosineSeriesL F1 = add_linear_part(std::move(Nu), st, basis);
  rep.residual_after = l2(F1);
  rep.residual_after_weighted = weighted(F1, wt);
  rep.dropped_mass = dropped;
  rep.accepted = rep.residual_after < rep.residual_before;
  return rep;
}

// ---- driver -----------------------------------------------------------------------

namespace {

// Rounding level of the long double residual: unit roundoff times the l2 size
// of the largest summands, |D(x) u(x)| and the convolution terms.
double roundoff_floor(const SolutionState& st, const FrequencyBasis& basis, const Nonlinearity& nl) {
  AccurateSymbol D(basis, st.omega);
  long double s = 0;
  for (auto& [x, v] : st.u.terms()) {
    const long double t = D(x) * v;
    s += t * t;
  }
  // l2(|u|^{*(p+1)}) <= l1(u)^p l2(u)
  const double nl_size = std::pow(l1_norm_full(st.u), nl.p) * l2_norm(st.u);
  const double eps = std::numeric_limits<long double>::epsilon();
  return 64 * eps * (static_cast<double>(std::sqrt(s)) + nl_size);
}

double max_radius(const CosineSeriesL& u) {
  long r = 0;
  for (auto& [x, v] : u.terms()) r = std::max(r, x.inf_norm());
  return double(r);
}

}  // namespace

NewtonResult run_newton(const SolverParameters& prm, const FrequencyBasis& basis, const Nonlinearity& nl) {
  prm.validate(basis.b);
  NewtonResult res;
  std::vector<double> a = prm.amplitudes(basis.b);
  const double gamma = prm.gamma > 0 ? prm.gamma : 2.0 * basis.b + 1;
  std::mt19937_64 rng(prm.seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::vector<std::string> pending_excisions;

  for (int attempt = 0; attempt <= prm.excision_budget; ++attempt) {
    res.trace.clear();
    res.a_used = a;
    auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    SolutionState st = initial_state(basis, a, nl);
    const double jdet = frequency_jacobian(a, basis, nl).det;
    CosineSeriesL F0 = residual_accurate(st, basis, nl, prm.drop_rel);
    const long N1 = std::max<long>(prm.initial_scale(), static_cast<long>(max_radius(F0)));

    TraceRecord rec0;
    rec0.r = 0;
    rec0.residual = l2(F0);
    rec0.residual_weighted = weighted(F0, Weight{prm.beta, prm.delta});
    rec0.omega.assign(st.omega.begin(), st.omega.end());
    rec0.jacobian_det = jdet;
    rec0.excisions = pending_excisions;
    const GateResult dg = diophantine_gate(st.omega, N1, prm.xi, gamma);
    const GateResult qg =
        quadratic_gate(st.omega, prm.B, prm.Cprime, prm.delta, basis.p, basis.d, prm.quadratic_samples, prm.seed);
    rec0.gate_diophantine = dg.pass;
    rec0.gate_quadratic = qg.pass;
    rec0.wall_seconds = elapsed();
    res.trace.push_back(rec0);

    auto excise = [&](const std::string& why) {
      std::ostringstream os;
      os << "attempt " << attempt << ": " << why << "; a jittered";
      pending_excisions.push_back(os.str());
      for (auto& v : a) {
        double nv = v * (1 + 0.05 * jitter(rng));
        v = std::clamp(nv, -prm.delta * (1 - 1e-9), prm.delta * (1 - 1e-9));
      }
    };
    if (!dg.pass || !qg.pass) {
      excise(!dg.pass ? "diophantine gate failed" : "quadratic gate failed");
      continue;
    }

    res.floor = roundoff_floor(st, basis, nl);
    const double stop = std::max(prm.target, res.floor);
    res.status = "r_max";
    if (rec0.residual <= stop) res.status = prm.target > res.floor ? "target" : "floor";
    bool excised = false;
    long N = N1;
    for (int r = 1; r <= prm.r_max && res.status == "r_max"; ++r) {
      if (r > 1) N *= prm.M;
      SolutionState trial = st;
      StepReport sr;
      try {
        sr = newton_step(trial, N, basis, nl, prm);
      } catch (const ExcisionSignal& e) {
        excise(std::string("singular reduced block: ") + e.what());
        excised = true;
        break;
      } catch (const SchurError& e) {
        excise(std::string("complement solve failed: ") + e.what());
        excised = true;
        break;
      }
      TraceRecord rec;
      rec.r = r;
      rec.N = N;
      rec.du_l2 = sr.du_l2;
      rec.du_weighted = sr.du_weighted;
      rec.residual = sr.residual_after;
      rec.residual_weighted = sr.residual_after_weighted;
      rec.omega.assign(trial.omega.begin(), trial.omega.end());
      rec.jacobian_det = jdet;
      rec.points = sr.points;
      rec.near = sr.near;
      rec.accepted = sr.accepted;
      rec.wall_seconds = elapsed();
      res.trace.push_back(rec);
      if (!sr.accepted) {
        // no further progress is possible above the rounding level
        res.status = "floor";
        break;
      }
      st = std::move(trial);
      res.floor = roundoff_floor(st, basis, nl);
      if (sr.residual_after <= std::max(prm.target, res.floor))
        res.status = prm.target > res.floor ? "target" : "floor";
    }
    if (excised) continue;
    res.state = std::move(st);
    return res;
  }
  res.status = "excision_budget";
  return res;
}

// ---- PDE check --------------------------------------------------------------------

PdeCheck pde_check(const SolutionState& st, const FrequencyBasis& basis, const Nonlinearity& nl, int nt, int nx) {
  PdeCheck out;
  out.nt = nt;
  out.nx = nx;
  const Dims dims{basis.b, basis.d};
  long double wmin = INFINITY;
  for (auto w : st.omega) wmin = std::min(wmin, w);
  const long double period = 2 * M_PIl / wmin;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(0.0, 2 * M_PI);
  std::vector<long double> xfix(dims.d, 0.0L);
  for (int i = 1; i < dims.d; ++i) xfix[i] = uni(rng);

  AccurateSymbol D(basis, st.omega);
  struct Mode {
    long double coef, lin, nw, j0, jrest;
  };
  auto modes_of = [&](const CosineSeriesL& s, bool with_lin) {
    std::vector<Mode> m;
    for (auto& [x, v] : s.terms()) {
      const IVec n = x.n(dims), j = x.j(dims);
      Mode md{};
      md.coef = (x.is_zero() ? 1.0L : 2.0L) * v;
      md.lin = with_lin ? D(x) : 0.0L;
      for (int k = 0; k < dims.b; ++k) md.nw += n[k] * st.omega[k];
      md.j0 = dims.d ? j[0] : 0;
      for (int i = 1; i < dims.d; ++i) md.jrest += j[i] * xfix[i];
      m.push_back(md);
    }
    return m;
  };
  const auto mu = modes_of(st.u, true);
  std::vector<std::pair<int, std::vector<Mode>>> alphas;
  for (auto& [m, alpha] : nl.higher) alphas.emplace_back(m, modes_of(alpha.cast<long double>(), false));

  for (int it = 0; it < nt; ++it) {
    const long double t = period * it / nt;
    for (int ix = 0; ix < nx; ++ix) {
      const long double x0 = 2 * M_PIl * ix / nx;
      long double u = 0, lin = 0;
      for (auto& m : mu) {
        const long double c = std::cos(m.nw * t + m.j0 * x0 + m.jrest);
        u += m.coef * c;
        lin += m.coef * m.lin * c;
      }
      // u_tt - lap u + u is the symbol applied spectrally
      long double pde = lin + std::pow(u, nl.p + 1);
      for (auto& [m, am] : alphas) {
        long double al = 0;
        for (auto& md : am) al += md.coef * std::cos(md.nw * t + md.j0 * x0 + md.jrest);
        pde += al * std::pow(u, m);
      }
      out.max_residual = std::max(out.max_residual, static_cast<double>(std::fabs(pde)));
    }
  }
  // dropped products enter the bound with their full l1 mass
  double dropped = 0;
  out.residual_l1 = l1_norm_full(residual_accurate(st, basis, nl, 1e-22, &dropped)) + dropped;
  return out;
}

}  // namespace kgqp
