#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgqp/exactfield.hpp"

namespace kgqp {

using IVec = std::vector<long>;

struct FrequencyBasis {
  int d = 1;
  int b = 0;
  int p = 2;
  std::vector<IVec> modes;                // j_k in Z^d
  std::vector<std::uint64_t> radicands;   // s_k = |j_k|^2 + 1
  std::vector<QuadField> omega0;          // sqrt(s_k)

  // Verification flags as last computed; empty strings mean "not run".
  std::string cond_i, cond_ii, cond_iii;  // "pass" | "fail" | "cap"
  std::string created;                    // ISO-8601 UTC

  static FrequencyBasis from_modes(int d, int p, const std::vector<IVec>& modes);
  bool verified() const { return cond_i == "pass" && cond_ii == "pass" && cond_iii == "pass"; }
  std::vector<double> omega0_double() const;
};

long sq_norm(const IVec& v);

}  // namespace kgqp
