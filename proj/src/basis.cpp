#include "kgqp/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace kgqp {

long sq_norm(const IVec& v) {
  long s = 0;
  for (long x : v) s += x * x;
  return s;
}

FrequencyBasis FrequencyBasis::from_modes(int d, int p, const std::vector<IVec>& modes) {
  FrequencyBasis fb;
  fb.d = d;
  fb.p = p;
  fb.b = static_cast<int>(modes.size());
  fb.modes = modes;
  for (auto& j : modes) {
    if (static_cast<int>(j.size()) != d) throw std::invalid_argument("basis: mode dimension mismatch");
    std::uint64_t s = static_cast<std::uint64_t>(sq_norm(j)) + 1;
    fb.radicands.push_back(s);
    fb.omega0.push_back(QuadField::sqrt_of(s));
  }
  return fb;
}

std::vector<double> FrequencyBasis::omega0_double() const {
  std::vector<double> w;
  for (auto s : radicands) w.push_back(std::sqrt(static_cast<double>(s)));
  return w;
}

}  // namespace kgqp
