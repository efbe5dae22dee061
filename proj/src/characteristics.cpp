#include "kgqp/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <unordered_map>

#include "kgqp/parallel.hpp"

namespace kgqp {

namespace {

// Odometer over [-N, N]^k.
bool next_in_box(IVec& v, long N) {
  int i = static_cast<int>(v.size()) - 1;
  while (i >= 0 && v[i] == N) v[i--] = -N;
  if (i < 0) return false;
  ++v[i];
  return true;
}

// All j in [-N,N]^d with |j|^2 = r2.
void sphere_points(int d, long N, long r2, std::vector<IVec>& out) {
  if (r2 < 0) return;
  if (d == 1) {
    long r = std::lround(std::sqrt(static_cast<double>(r2)));
    while (r * r > r2) --r;
    while ((r + 1) * (r + 1) <= r2) ++r;
    if (r * r != r2 || r > N) return;
    out.push_back({r});
    if (r) out.push_back({-r});
    return;
  }
  for (long a = -N; a <= N; ++a) {
    if (a * a > r2) continue;
    std::vector<IVec> rest;
    sphere_points(d - 1, N, r2 - a * a, rest);
    for (auto& t : rest) {
      IVec v{a};
      v.insert(v.end(), t.begin(), t.end());
      out.push_back(std::move(v));
    }
  }
}

struct Dsu {
  std::vector<int> parent;
  explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

AdjacencySet adjacency_set(const FrequencyBasis& basis, int R) {
  AdjacencySet g;
  g.p = basis.p;
  g.R = R;
  std::vector<double> ones(basis.b, 1.0);
  CosineSeries u0 = initial_series(basis, ones);
  CosineSeries pw = power(u0, basis.p);
  CosineSeries up = pw;
  for (int r = 1; r <= R; ++r) {
    if (r > 1) up = convolve(up, pw);
    for (auto& [x, v] : up.full_terms())
      if (!x.is_zero() && g.lookup.insert(x).second) g.points.push_back(x);
  }
  std::sort(g.points.begin(), g.points.end());
  return g;
}

std::vector<Point> enumerate_characteristics(const FrequencyBasis& basis, const QuadField& theta, long N) {
  const Dims dims{basis.b, basis.d};
  const auto w = basis.omega0_double();
  const long double th = theta.to_long_double();
  std::vector<IVec> ns;
  IVec n(basis.b, -N);
  do ns.push_back(n);
  while (next_in_box(n, N));
  std::vector<std::vector<Point>> found(ns.size());
  parallel_for(0, ns.size(), [&](std::size_t i) {
    const IVec& nv = ns[i];
    long double x = th;
    for (int k = 0; k < basis.b; ++k) x += nv[k] * static_cast<long double>(w[k]);
    long double x2 = x * x;
    long double K = std::nearbyint(x2);
    if (K < 1 || std::fabs(x2 - K) > 1e-6L * std::max(1.0L, x2)) return;
    if (K - 1 > static_cast<long double>(N) * N * basis.d) return;
    QuadField X = theta + dot(nv, basis.omega0);
    if (X.is_zero() || !(X * X == QuadField(static_cast<long>(K)))) return;
    std::vector<IVec> js;
    sphere_points(basis.d, N, static_cast<long>(K) - 1, js);
    for (auto& j : js) found[i].push_back(Point::make(nv, j, dims));
  });
  std::vector<Point> out;
  for (auto& f : found) out.insert(out.end(), f.begin(), f.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Cluster> cluster_decomposition(const std::vector<Point>& points, const AdjacencySet& gamma,
                                           const FrequencyBasis* basis, const QuadField& theta) {
  std::unordered_map<Point, int, PointHash> index;
  for (std::size_t i = 0; i < points.size(); ++i) index.emplace(points[i], static_cast<int>(i));
  Dsu dsu(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    for (auto& g : gamma.points) {
      auto it = index.find(points[i] + g);
      if (it != index.end()) dsu.unite(static_cast<int>(i), it->second);
    }
  std::map<int, Cluster> comps;
  for (std::size_t i = 0; i < points.size(); ++i) comps[dsu.find(static_cast<int>(i))].members.push_back(points[i]);
  std::vector<Point> S;
  if (basis)
    for (int k = 0; k < basis->b; ++k) {
      S.push_back(basis_point(*basis, k, 1));
      S.push_back(basis_point(*basis, k, -1));
    }
  std::sort(S.begin(), S.end());
  std::vector<Cluster> out;
  for (auto& [r, c] : comps) {
    std::sort(c.members.begin(), c.members.end());
    c.theta = theta;
    c.is_exceptional_S = basis && theta.is_zero() && c.members == S;
    out.push_back(std::move(c));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Cluster& a, const Cluster& b) { return a.members.size() > b.members.size(); });
  return out;
}

namespace {

void record_theta0(ClusterBoundReport& rep, const std::vector<Cluster>& cl, const FrequencyBasis& basis) {
  const std::size_t bound = 2 * static_cast<std::size_t>(std::max(basis.d, basis.b));
  std::size_t n2b = 0;
  bool s_seen = false;
  for (auto& c : cl) {
    rep.c0_points += c.members.size();
    rep.c0_max = std::max(rep.c0_max, c.members.size());
    ++rep.c0_histogram[c.members.size()];
    if (c.members.size() == 2 * static_cast<std::size_t>(basis.b)) {
      ++n2b;
      s_seen = s_seen || c.is_exceptional_S;
    }
    if (c.members.size() > bound)
      rep.violations.push_back("Theta=0: cluster of size " + std::to_string(c.members.size()) + " exceeds " +
                               std::to_string(bound));
  }
  rep.s_unique = s_seen && n2b == 1;
  if (basis.b >= basis.d + 1 && !rep.s_unique)
    rep.violations.push_back("Theta=0: S is not the unique cluster of size 2b (" + std::to_string(n2b) + " found)");
}

void record_theta(ClusterBoundReport& rep, std::vector<Cluster>&& cl, std::size_t bound) {
  for (auto& c : cl) {
    ++rep.theta_histogram[c.members.size()];
    if (c.members.size() > bound)
      rep.violations.push_back("Theta=" + c.theta.to_string() + ": cluster of size " +
                               std::to_string(c.members.size()) + " exceeds " + std::to_string(bound));
    if (!rep.theta_argmax || c.members.size() > rep.theta_max) {
      rep.theta_max = c.members.size();
      rep.theta_argmax = c;
    }
  }
}

}  // namespace

ClusterBoundReport verify_cluster_bounds(const FrequencyBasis& basis, long N,
                                         const std::vector<QuadField>& theta_list) {
  ClusterBoundReport rep;
  rep.N = N;
  const Dims dims{basis.b, basis.d};
  const AdjacencySet gamma = adjacency_set(basis, 1);
  const std::size_t bound4b = 4 * static_cast<std::size_t>(basis.b);

  if (!theta_list.empty()) {
    bool zero_seen = false;
    for (auto& th : theta_list) {
      auto pts = enumerate_characteristics(basis, th, N);
      auto cl = cluster_decomposition(pts, gamma, &basis, th);
      if (th.is_zero()) {
        zero_seen = true;
        record_theta0(rep, cl, basis);
      } else {
        ++rep.levels;
        if (pts.size() > 1) ++rep.levels_nontrivial;
        record_theta(rep, std::move(cl), bound4b);
      }
    }
    if (!zero_seen) record_theta0(rep, cluster_decomposition(enumerate_characteristics(basis, 0, N), gamma, &basis), basis);
    return rep;
  }

  // Theta_{+-}(x) = +-sqrt(j^2+1) - n.w0. Group the box by the exact value of
  // Theta. When j^2+1 has a square-free part outside {1, s_k}, the level set
  // shares n and |j|, so its points differ by (0, j - j') which is never in
  // Gamma: such levels consist of singletons and need no grouping.
  for (auto& g : gamma.points) {
    bool nzero = true;
    for (int i = 0; i < basis.b; ++i) nzero = nzero && g.c[i] == 0;
    if (nzero) throw std::logic_error("Gamma contains a point with nu = 0");
  }
  struct BaseJ {
    IVec j;
    int slot;  // 0 = rational part, k+1 = radicand s_k
    long f;
  };
  std::vector<BaseJ> base;
  std::map<long, std::size_t> extra_r2;  // |j|^2 -> count of j
  {
    IVec j(basis.d, -N);
    do {
      std::uint64_t v = static_cast<std::uint64_t>(sq_norm(j)) + 1;
      auto [f, m] = square_part(v);
      int slot = -1;
      if (m == 1) slot = 0;
      for (int k = 0; k < basis.b; ++k)
        if (basis.radicands[k] == m) slot = k + 1;
      if (slot >= 0) base.push_back({j, slot, static_cast<long>(f)});
      else ++extra_r2[sq_norm(j)];
    } while (next_in_box(j, N));
  }
  const std::size_t ncount = static_cast<std::size_t>(std::pow(2 * N + 1, basis.b));
  rep.levels += 2 * ncount * extra_r2.size();
  for (auto& [r2, c] : extra_r2) rep.theta_histogram[1] += 2 * ncount * c;

  struct Entry {
    std::array<std::int32_t, kMaxDim + 1> key;
    std::uint32_t ni;
    std::uint16_t ji;
    std::int8_t eps;
  };
  std::vector<IVec> ns;
  {
    IVec n(basis.b, -N);
    do ns.push_back(n);
    while (next_in_box(n, N));
  }
  std::vector<Entry> entries;
  entries.reserve(ns.size() * base.size() * 2);
  for (std::uint32_t ni = 0; ni < ns.size(); ++ni)
    for (std::uint16_t ji = 0; ji < base.size(); ++ji)
      for (std::int8_t eps : {1, -1}) {
        Entry e{};
        for (int k = 0; k < basis.b; ++k) e.key[k + 1] = static_cast<std::int32_t>(-ns[ni][k]);
        e.key[base[ji].slot] += static_cast<std::int32_t>(eps * base[ji].f);
        e.ni = ni;
        e.ji = ji;
        e.eps = eps;
        entries.push_back(e);
      }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });
  std::vector<Cluster> zero_clusters;
  bool zero_found = false;
  for (std::size_t lo = 0; lo < entries.size();) {
    std::size_t hi = lo + 1;
    while (hi < entries.size() && entries[hi].key == entries[lo].key) ++hi;
    QuadField th(static_cast<long>(entries[lo].key[0]));
    for (int k = 0; k < basis.b; ++k)
      if (entries[lo].key[k + 1])
        th += basis.omega0[k] * mpq_class(entries[lo].key[k + 1]);
    std::vector<Point> pts;
    for (std::size_t i = lo; i < hi; ++i) pts.push_back(Point::make(ns[entries[i].ni], base[entries[i].ji].j, dims));
    std::sort(pts.begin(), pts.end());
    if (th.is_zero()) {
      zero_found = true;
      record_theta0(rep, cluster_decomposition(pts, gamma, &basis, th), basis);
    } else {
      ++rep.levels;
      if (pts.size() > 1) {
        ++rep.levels_nontrivial;
        record_theta(rep, cluster_decomposition(pts, gamma, &basis, th), bound4b);
      } else {
        ++rep.theta_histogram[1];
        if (rep.theta_max == 0) {
          rep.theta_max = 1;
          rep.theta_argmax = Cluster{pts, th, false};
        }
      }
    }
    lo = hi;
  }
  if (!zero_found) record_theta0(rep, {}, basis);
  return rep;
}

SpacingReport spacing_dichotomy(const IVec& nu, const IVec& j, const IVec& jp, const FrequencyBasis& basis) {
  SpacingReport rep;
  const QuadField x = dot(nu, basis.omega0);
  const QuadField A = QuadField::sqrt_of(static_cast<std::uint64_t>(sq_norm(j)) + 1);
  const QuadField B = QuadField::sqrt_of(static_cast<std::uint64_t>(sq_norm(jp)) + 1);
  for (long v : nu) rep.nu_support += v != 0;
  for (int s1 : {1, -1})
    for (int s2 : {1, -1}) {
      SpacingReport::Choice c;
      c.s1 = s1;
      c.s2 = s2;
      c.rho = x + A * mpq_class(s1) + B * mpq_class(s2);
      c.zero = c.rho.is_zero();
      if (!c.zero) {
        auto iv = sign_and_interval(c.rho, 64);
        c.abs_lower = iv.sign > 0 ? iv.lo : mpq_class(-iv.hi);
      }
      rep.any_zero = rep.any_zero || c.zero;
      rep.choices.push_back(c);
    }
  const QuadField x2 = x * x;
  const long jj = sq_norm(j), jjp = sq_norm(jp);
  rep.I = x2 * x2 - x2 * QuadField(2 * (jj + jjp + 2)) + QuadField((jj - jjp) * (jj - jjp));
  rep.d1_consistent = !rep.any_zero || rep.nu_support <= 2;
  return rep;
}

ChainProbeResult chain_probe(const ChainProbeParams& prm, const FrequencyBasis& basis,
                             const std::vector<double>& omega) {
  if (!(prm.B > prm.W && prm.W > 1)) throw std::invalid_argument("chain_probe: need B > W > 1");
  const Dims dims{basis.b, basis.d};
  const double thr = prm.W * std::pow(prm.delta, basis.p);
  std::vector<Point> pts;
  IVec n(basis.b, -prm.N);
  do {
    IVec j(basis.d, -prm.N);
    do {
      Point x = Point::make(n, j, dims);
      if (std::fabs(symbol(x, dims, omega, prm.theta)) < thr) pts.push_back(x);
    } while (next_in_box(j, prm.N));
  } while (next_in_box(n, prm.N));

  ChainProbeResult res;
  res.singular_points = pts.size();
  std::vector<std::vector<int>> adj(pts.size());
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b)
      if (static_cast<double>((pts[a] - pts[b]).inf_norm()) < prm.B) {
        adj[a].push_back(static_cast<int>(b));
        adj[b].push_back(static_cast<int>(a));
      }
  Dsu dsu(pts.size());
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (int b : adj[a]) dsu.unite(static_cast<int>(a), b);
  std::map<int, std::vector<int>> comps;
  for (std::size_t a = 0; a < pts.size(); ++a) comps[dsu.find(static_cast<int>(a))].push_back(static_cast<int>(a));
  res.components = comps.size();
  std::uint64_t steps = 0;
  std::vector<char> used(pts.size(), 0);
  std::size_t best = 0;
  // depth-first longest simple path, bounded by the step budget
  std::function<void(int, std::size_t)> dfs = [&](int v, std::size_t len) {
    best = std::max(best, len);
    if (++steps > prm.budget) return;
    for (int w : adj[v])
      if (!used[w]) {
        used[w] = 1;
        dfs(w, len + 1);
        used[w] = 0;
        if (steps > prm.budget) return;
      }
  };
  for (auto& [r, members] : comps) {
    res.largest_component = std::max(res.largest_component, members.size());
    std::map<IVec, std::size_t> col;
    for (int v : members) res.column_multiplicity = std::max(res.column_multiplicity, ++col[pts[v].n(dims)]);
    for (int v : members) {
      if (best >= members.size() || steps > prm.budget) break;
      used[v] = 1;
      dfs(v, 1);
      used[v] = 0;
    }
  }
  res.l_max = best;
  res.l_max_exact = steps <= prm.budget;
  const double bb = prm.B * std::max<std::size_t>(1, res.column_multiplicity);
  res.exponent = res.l_max > 1 ? std::log(static_cast<double>(res.l_max)) / std::log(bb) : 0.0;
  return res;
}

}  // namespace kgqp
