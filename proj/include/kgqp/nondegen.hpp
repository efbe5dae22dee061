#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgqp/basis.hpp"

namespace kgqp {

enum class CheckStatus { pass, fail, cap };
const char* to_string(CheckStatus s);

struct CheckResult {
  CheckStatus status = CheckStatus::pass;
  std::string witness;           // human-readable failing subset
  std::uint64_t nodes = 0;       // subsets examined
  std::uint64_t shortcut_hits = 0;  // subsets closed by the parallel-plane rules
  bool ok() const { return status == CheckStatus::pass; }
};

// Exact rank of an integer/rational matrix given row-wise.
int rational_rank(const std::vector<std::vector<mpq_class>>& rows);

CheckResult check_condition_i(const FrequencyBasis& basis);
CheckResult check_condition_ii(const FrequencyBasis& basis);

// Label (l, m_l) of a hyperplane 2 eta.j + L = 0 attached to (k, m).
struct HyperplaneSpec {
  int k = 0, m = 0, l = 0, ml = 0;
  IVec eta;
  long L = 0;
};

// Planes for fixed (k, m) after the Gamma-tilde filter (R = 2d+1) and with
// labels m_l = 0 folded onto l = k.
std::vector<HyperplaneSpec> condition_iii_planes(const FrequencyBasis& basis, int k, int m);

CheckResult check_condition_iii(const FrequencyBasis& basis, std::uint64_t cap = 1000000);

// Runs (ii), (i), (iii) in that order and stores the flags on the basis.
bool verify_basis(FrequencyBasis& basis, std::uint64_t cap = 1000000, std::string* why = nullptr);

struct SelectOptions {
  int d = 1, b = 3, p = 2;
  long bound = 10;
  std::uint64_t seed = 0;
  std::uint64_t cap = 1000000;
  std::uint64_t max_candidates = 200000;
};

struct ExhaustionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Generate-and-test over mode tuples with strictly increasing |j|^2+1,
// ordered by the largest radicand, then lexicographically. Throws
// ExhaustionError when nothing in the bound passes.
FrequencyBasis select_basis(const SelectOptions& opt);

}  // namespace kgqp
