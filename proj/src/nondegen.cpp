#include "kgqp/nondegen.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

#include "kgqp/parallel.hpp"

namespace kgqp {

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::cap: return "cap";
  }
  return "?";
}

int rational_rank(const std::vector<std::vector<mpq_class>>& rows_in) {
  auto rows = rows_in;
  if (rows.empty()) return 0;
  const std::size_t cols = rows[0].size();
  int rank = 0;
  for (std::size_t c = 0; c < cols && rank < static_cast<int>(rows.size()); ++c) {
    int piv = -1;
    for (int r = rank; r < static_cast<int>(rows.size()); ++r)
      if (rows[r][c] != 0) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    std::swap(rows[piv], rows[rank]);
    for (int r = rank + 1; r < static_cast<int>(rows.size()); ++r) {
      if (rows[r][c] == 0) continue;
      mpq_class f = rows[r][c] / rows[rank][c];
      for (std::size_t cc = c; cc < cols; ++cc) rows[r][cc] -= f * rows[rank][cc];
    }
    ++rank;
  }
  return rank;
}

namespace {

std::string vec_str(const IVec& v) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << ")";
  return os.str();
}

std::vector<mpq_class> to_row(const IVec& v) { return std::vector<mpq_class>(v.begin(), v.end()); }

// Calls fn on every r-subset of [0, n); stops when fn returns false.
template <class Fn>
bool for_each_subset(int n, int r, Fn&& fn) {
  if (r > n) return true;
  std::vector<int> idx(r);
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    if (!fn(idx)) return false;
    int i = r - 1;
    while (i >= 0 && idx[i] == n - r + i) --i;
    if (i < 0) return true;
    ++idx[i];
    for (int k = i + 1; k < r; ++k) idx[k] = idx[k - 1] + 1;
  }
}

}  // namespace

CheckResult check_condition_i(const FrequencyBasis& basis) {
  CheckResult res;
  const int d = basis.d, b = basis.b;
  const int dbar = std::min(d, b);
  auto independent = [&](const std::vector<IVec>& vs, const std::vector<int>& idx) {
    std::vector<std::vector<mpq_class>> rows;
    for (int i : idx) rows.push_back(to_row(vs[i]));
    ++res.nodes;
    return rational_rank(rows) == static_cast<int>(idx.size());
  };
  bool ok = for_each_subset(b, dbar, [&](const std::vector<int>& idx) {
    if (independent(basis.modes, idx)) return true;
    std::ostringstream os;
    os << "dependent modes {";
    for (std::size_t i = 0; i < idx.size(); ++i) os << (i ? "," : "") << vec_str(basis.modes[idx[i]]);
    os << "}";
    res.witness = os.str();
    return false;
  });
  if (ok && b >= d + 1) {
    for (int k = 0; k < b && ok; ++k) {
      std::vector<IVec> J;
      for (int kp = 0; kp < b; ++kp)
        for (int s : {1, -1}) {
          IVec v(d);
          bool zero = true;
          for (int i = 0; i < d; ++i) {
            v[i] = basis.modes[kp][i] + s * basis.modes[k][i];
            zero = zero && v[i] == 0;
          }
          if (!zero && std::find(J.begin(), J.end(), v) == J.end()) J.push_back(v);
        }
      ok = for_each_subset(static_cast<int>(J.size()), d, [&](const std::vector<int>& idx) {
        if (independent(J, idx)) return true;
        std::ostringstream os;
        os << "dependent vectors in J_" << (k + 1) << " {";
        for (std::size_t i = 0; i < idx.size(); ++i) os << (i ? "," : "") << vec_str(J[idx[i]]);
        os << "}";
        res.witness = os.str();
        return false;
      });
    }
  }
  res.status = ok ? CheckStatus::pass : CheckStatus::fail;
  return res;
}

CheckResult check_condition_ii(const FrequencyBasis& basis) {
  CheckResult res;
  for (int k = 0; k < basis.b; ++k) {
    std::uint64_t s = basis.radicands[k];
    ++res.nodes;
    if (k > 0 && s <= basis.radicands[k - 1]) {
      res.status = CheckStatus::fail;
      res.witness = s == basis.radicands[k - 1]
                        ? "radicands not distinct: " + std::to_string(s)
                        : "radicands not increasing at index " + std::to_string(k + 1);
      return res;
    }
    if (s <= 1 || !is_square_free(s)) {
      res.status = CheckStatus::fail;
      res.witness = "radicand " + std::to_string(s) + " is not square-free";
      if (s <= 1) res.witness = "zero mode";
      return res;
    }
  }
  return res;
}

std::vector<HyperplaneSpec> condition_iii_planes(const FrequencyBasis& basis, int k, int m) {
  const int b = basis.b, d = basis.d, p = basis.p;
  const int R = 2 * d + 1;
  auto in_gamma_tilde = [&](long l1) {
    if (l1 == 0) return false;
    for (int r = 1; r <= R; ++r)
      if (l1 <= long(p) * r && (long(p) * r - l1) % 2 == 0) return true;
    return false;
  };
  std::map<std::pair<int, int>, HyperplaneSpec> planes;
  for (int l = 0; l < b; ++l)
    for (int ml = -2 * p * d; ml <= 2 * p * d; ++ml) {
      const int ll = ml == 0 ? k : l;
      IVec nu(b, 0);
      nu[k] -= m;
      nu[ll] += ml;
      long l1 = 0;
      for (long v : nu) l1 += std::abs(v);
      if (!in_gamma_tilde(l1)) continue;
      HyperplaneSpec h;
      h.k = k;
      h.m = m;
      h.l = ll;
      h.ml = ml;
      h.eta.resize(d);
      bool zero = true;
      long ejk = 0;
      for (int i = 0; i < d; ++i) {
        h.eta[i] = long(m) * basis.modes[k][i] - long(ml) * basis.modes[ll][i];
        zero = zero && h.eta[i] == 0;
        ejk += h.eta[i] * basis.modes[k][i];
      }
      if (zero) continue;
      h.L = 2L * m * ejk + (long(m) * m - long(ml) * ml);
      planes.emplace(std::make_pair(ll, ml), h);
    }
  std::vector<HyperplaneSpec> out;
  for (auto& kv : planes) out.push_back(kv.second);
  return out;
}

namespace {

struct IiiSearch {
  IiiSearch(const std::vector<HyperplaneSpec>& pl, int k_, int m_, int target_, std::uint64_t cap_)
      : planes(pl), k(k_), m(m_), target(target_), cap(cap_) {}
  const std::vector<HyperplaneSpec>& planes;
  int k, m, target;
  std::uint64_t cap;
  std::uint64_t nodes = 0, shortcuts = 0;
  bool capped = false;
  std::vector<int> chosen;
  std::vector<int> witness;

  // 2 eta.j = -L for each chosen plane; consistent iff rank A == rank [A|b].
  bool consistent() const {
    std::vector<std::vector<mpq_class>> A, Ab;
    for (int i : chosen) {
      std::vector<mpq_class> row;
      for (long e : planes[i].eta) row.emplace_back(2 * e);
      A.push_back(row);
      row.emplace_back(-planes[i].L);
      Ab.push_back(row);
    }
    return rational_rank(A) == rational_rank(Ab);
  }

  bool shortcut_empty(int add) const {
    const auto& h = planes[add];
    int same = 0;
    for (int i : chosen) {
      const auto& g = planes[i];
      if (g.l != h.l) continue;
      if (h.l == k && g.ml != h.ml) return true;  // parallel planes
      ++same;
    }
    return h.l != k && same >= 2;  // three planes through one quadratic in m_l
  }

  bool has_offside() const {
    for (int i : chosen)
      if (std::abs(planes[i].ml) != std::abs(m)) return true;
    return false;
  }

  // Returns true when a nonempty sigma was found.
  bool dfs(int start) {
    if (static_cast<int>(chosen.size()) == target) {
      if (has_offside()) {
        witness = chosen;
        return true;
      }
      return false;
    }
    for (int i = start; i < static_cast<int>(planes.size()); ++i) {
      if (capped) return false;
      if (static_cast<int>(planes.size()) - i < target - static_cast<int>(chosen.size())) return false;
      if (++nodes > cap) {
        capped = true;
        return false;
      }
      if (shortcut_empty(i)) {
        ++shortcuts;
        continue;
      }
      chosen.push_back(i);
      if (consistent() && dfs(i + 1)) return true;
      chosen.pop_back();
    }
    return false;
  }
};

}  // namespace

CheckResult check_condition_iii(const FrequencyBasis& basis, std::uint64_t cap) {
  struct Task {
    int k, m;
    IiiSearch* s = nullptr;
    bool found = false;
  };
  std::vector<Task> tasks;
  for (int k = 0; k < basis.b; ++k)
    for (int m = -basis.p; m <= basis.p; ++m)
      if (m != 0) tasks.push_back({k, m});
  std::vector<std::vector<HyperplaneSpec>> planes(tasks.size());
  std::vector<std::unique_ptr<IiiSearch>> searches(tasks.size());
  parallel_for(0, tasks.size(), [&](std::size_t t) {
    planes[t] = condition_iii_planes(basis, tasks[t].k, tasks[t].m);
    searches[t] = std::make_unique<IiiSearch>(planes[t], tasks[t].k, tasks[t].m, 2 * basis.d, cap);
    tasks[t].found = searches[t]->dfs(0);
  });
  CheckResult res;
  bool capped = false;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    res.nodes += searches[t]->nodes;
    res.shortcut_hits += searches[t]->shortcuts;
    capped = capped || searches[t]->capped;
    if (tasks[t].found && res.status != CheckStatus::fail) {
      res.status = CheckStatus::fail;
      std::ostringstream os;
      os << "k=" << tasks[t].k + 1 << " m=" << tasks[t].m << " planes";
      for (int i : searches[t]->witness) {
        const auto& h = planes[t][i];
        os << " (l=" << h.l + 1 << ",m_l=" << h.ml << ",eta=" << vec_str(h.eta) << ",L=" << h.L << ")";
      }
      os << " share a point";
      res.witness = os.str();
    }
  }
  if (res.status != CheckStatus::fail && (capped || res.nodes > cap)) {
    res.status = CheckStatus::cap;
    res.witness = "enumeration cap " + std::to_string(cap) + " reached";
  }
  return res;
}

bool verify_basis(FrequencyBasis& basis, std::uint64_t cap, std::string* why) {
  auto r2 = check_condition_ii(basis);
  basis.cond_ii = to_string(r2.status);
  if (!r2.ok()) {
    basis.cond_i = basis.cond_iii = "";
    if (why) *why = "condition (ii): " + r2.witness;
    return false;
  }
  auto r1 = check_condition_i(basis);
  basis.cond_i = to_string(r1.status);
  if (!r1.ok()) {
    basis.cond_iii = "";
    if (why) *why = "condition (i): " + r1.witness;
    return false;
  }
  auto r3 = check_condition_iii(basis, cap);
  basis.cond_iii = to_string(r3.status);
  if (!r3.ok()) {
    if (why) *why = "condition (iii): " + r3.witness;
    return false;
  }
  return true;
}

FrequencyBasis select_basis(const SelectOptions& opt) {
  if (opt.d < 1 || opt.b < 1 || opt.p < 2 || opt.p % 2) throw std::invalid_argument("select_basis: bad d, b or p");
  // group candidate modes by radicand
  std::map<std::uint64_t, std::vector<IVec>> by_s;
  IVec j(opt.d, -opt.bound);
  for (;;) {
    bool zero = true, canonical = false;
    for (long v : j)
      if (v != 0) {
        zero = false;
        canonical = v > 0;
        break;
      }
    // j and -j give the same radicand and mirror-image planes; keep one
    if (!zero && canonical) {
      std::uint64_t s = static_cast<std::uint64_t>(sq_norm(j)) + 1;
      if (is_square_free(s)) by_s[s].push_back(j);
    }
    int i = opt.d - 1;
    while (i >= 0 && j[i] == opt.bound) j[i--] = -opt.bound;
    if (i < 0) break;
    ++j[i];
  }
  std::vector<std::uint64_t> svals;
  std::mt19937_64 rng(opt.seed);
  for (auto& [s, vs] : by_s) {
    svals.push_back(s);
    if (opt.seed) std::shuffle(vs.begin(), vs.end(), rng);
  }
  const int n = static_cast<int>(svals.size());
  const int b = opt.b;
  std::uint64_t tried = 0;
  if (b <= n) {
    // colex order: largest radicand grows slowest
    std::vector<int> idx(b);
    for (int top = b - 1; top < n; ++top) {
      std::vector<std::vector<int>> combos;
      for_each_subset(top, b - 1, [&](const std::vector<int>& c) {
        combos.push_back(c);
        return true;
      });
      for (auto c : combos) {
        c.push_back(top);
        // iterate over the product of mode choices
        std::vector<std::size_t> choice(b, 0);
        for (;;) {
          if (++tried > opt.max_candidates) throw ExhaustionError("select_basis: candidate budget exhausted");
          std::vector<IVec> modes;
          for (int i = 0; i < b; ++i) modes.push_back(by_s[svals[c[i]]][choice[i]]);
          FrequencyBasis fb = FrequencyBasis::from_modes(opt.d, opt.p, modes);
          if (verify_basis(fb, opt.cap)) return fb;
          int i = b - 1;
          while (i >= 0 && choice[i] + 1 == by_s[svals[c[i]]].size()) choice[i--] = 0;
          if (i < 0) break;
          ++choice[i];
        }
      }
    }
  }
  throw ExhaustionError("select_basis: no basis satisfies (i)-(iii) within bound " + std::to_string(opt.bound));
}

}  // namespace kgqp
