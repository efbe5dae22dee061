#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "kgqp/basis.hpp"
#include "kgqp/exactfield.hpp"
#include "kgqp/lattice.hpp"

namespace kgqp {

// Gamma (R = 1) or Gamma-tilde: union over r <= R of supp (u0)^{*pr}, minus
// the origin. Points are stored on the full lattice (the set is symmetric).
struct AdjacencySet {
  int p = 2, R = 1;
  std::vector<Point> points;
  std::unordered_set<Point, PointHash> lookup;
  bool contains(const Point& x) const { return lookup.count(x) > 0; }
};
AdjacencySet adjacency_set(const FrequencyBasis& basis, int R = 1);

// C(Theta) in [-N,N]^{b+d}: points with +-(n.w0 + Theta) = sqrt(j^2+1), exact.
std::vector<Point> enumerate_characteristics(const FrequencyBasis& basis, const QuadField& theta, long N);

struct Cluster {
  std::vector<Point> members;  // sorted
  QuadField theta;
  bool is_exceptional_S = false;
};

// Maximal components under x ~ y iff x - y in Gamma; the partition is returned
// sorted by decreasing size, then by first member.
std::vector<Cluster> cluster_decomposition(const std::vector<Point>& points, const AdjacencySet& gamma,
                                           const FrequencyBasis* basis = nullptr,
                                           const QuadField& theta = QuadField());

struct ClusterBoundReport {
  long N = 0;
  // Theta = 0
  std::size_t c0_points = 0;
  std::size_t c0_max = 0;
  bool s_unique = false;  // S is the only cluster of size 2b
  std::map<std::size_t, std::size_t> c0_histogram;
  // Theta != 0, all level sets realised in the box
  std::size_t levels = 0;             // distinct Theta values examined
  std::size_t levels_nontrivial = 0;  // with at least two points
  std::size_t theta_max = 0;
  std::optional<Cluster> theta_argmax;
  std::map<std::size_t, std::size_t> theta_histogram;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Checks the bound max(2d, 2b) on C(0) (with S the unique cluster of size 2b
// when b >= d+1) and 4b on every C(Theta), Theta in {-n.w0 +- sqrt(j^2+1)}.
// An empty theta_list means "every Theta realised in the box".
ClusterBoundReport verify_cluster_bounds(const FrequencyBasis& basis, long N,
                                         const std::vector<QuadField>& theta_list = {});

struct SpacingReport {
  struct Choice {
    int s1 = 1, s2 = 1;  // rho = nu.w0 + s1 sqrt(j^2+1) + s2 sqrt(j'^2+1)
    QuadField rho;
    bool zero = false;
    mpq_class abs_lower;  // certified lower bound of |rho|
  };
  std::vector<Choice> choices;
  QuadField I;               // (nu.w)^4 - 2 (nu.w)^2 (j^2+j'^2+2) + (j^2-j'^2)^2
  int nu_support = 0;        // number of nonzero components of nu
  bool any_zero = false;
  bool d1_consistent = true;  // a zero rho forces at most two nonzero nu components
};
SpacingReport spacing_dichotomy(const IVec& nu, const IVec& j, const IVec& jp, const FrequencyBasis& basis);

struct ChainProbeParams {
  double B = 5;
  double W = 2;
  double delta = 1e-2;
  double theta = 0.0;
  long N = 20;
  std::uint64_t budget = 2000000;
};

struct ChainProbeResult {
  std::size_t singular_points = 0;
  std::size_t components = 0;
  std::size_t largest_component = 0;
  std::size_t l_max = 0;         // longest simple chain found
  bool l_max_exact = true;       // false when the search budget ran out
  std::size_t column_multiplicity = 0;  // max points sharing one n inside a component
  double exponent = 0;           // log l_max / log(B * B')
};
ChainProbeResult chain_probe(const ChainProbeParams& params, const FrequencyBasis& basis,
                             const std::vector<double>& omega);

}  // namespace kgqp
