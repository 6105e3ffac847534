#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "forge/io.hpp"

namespace forge {

// Finite symmetric dissimilarity: zero exactly on the diagonal, positive and
// finite off it. Triangle inequality is NOT assumed.
class Dissimilarity {
 public:
  static Dissimilarity from_values(const std::vector<std::vector<double>>& vals,
                                   std::vector<std::string> labels = {});
  static Dissimilarity from_flat(int n, std::vector<double> flat,
                                 std::vector<std::string> labels = {});

  int size() const { return n_; }
  double operator()(int i, int j) const {
    return flat_[static_cast<std::size_t>(i) * n_ + j];
  }
  const std::vector<double>& flat() const { return flat_; }
  const std::vector<std::string>& labels() const { return labels_; }

  // Distinct values, ascending. Always starts at 0.
  std::vector<double> distinct_values() const;
  double min_positive() const;
  double max_value() const;

 private:
  Dissimilarity() = default;
  int n_ = 0;
  std::vector<double> flat_;
  std::vector<std::string> labels_;
};

// Averages mirror entries of a square matrix with zero diagonal, then
// validates the result as a Dissimilarity.
Dissimilarity symmetrize_average(const std::vector<std::vector<double>>& vals,
                                 std::vector<std::string> labels = {});

struct TriangleReport {
  double max_deficiency = 0;        // max over triples of h(x,z)-h(x,y)-h(y,z), clamped at 0
  std::array<int, 3> witness{0, 0, 0};  // lexicographically least attaining triple
  long long violation_count = 0;    // ordered triples with positive excess
  bool is_metric() const { return violation_count == 0; }
  ojson to_json() const;
};

TriangleReport check_triangle(const Dissimilarity& h);

// Value pairs (eps, delta) encoding "premise < delta implies conclusion < eps".
struct Modulus {
  std::vector<std::pair<double, double>> pairs;
  ojson to_json() const;
};

// For each eps: the largest delta from the value set of h such that
// h(x,y) < delta implies max_z |h(x,z)-h(y,z)| < eps for all pairs x,y.
Modulus local_continuity_modulus(const Dissimilarity& h,
                                 const std::vector<double>& eps_grid);

// Forward: h1 < delta implies h2 < eps. Backward: h2 < delta implies h1 < eps.
// Deltas are drawn from the premise value set; 0 marks an eps with no working
// positive delta.
std::pair<Modulus, Modulus> uniform_equivalence_moduli(
    const Dissimilarity& h1, const Dissimilarity& h2,
    const std::vector<double>& eps_grid);

}  // namespace forge
