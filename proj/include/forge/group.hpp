#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "forge/dissimilarity.hpp"
#include "forge/frac.hpp"
#include "forge/repair.hpp"
#include "forge/stability.hpp"

namespace forge {

// A computable group carrying a left-invariant base metric: either a finite
// group given by its Cayley table, or the rationals of the circle with
// denominator at most `cap` under addition mod 1 and arc distance.
class GroupModel {
 public:
  static GroupModel finite(std::vector<std::vector<int>> cayley,
                           std::vector<std::vector<double>> metric,
                           std::vector<std::string> labels = {});
  static GroupModel circle(int denominator_cap);
  static GroupModel from_json(const ojson& j);

  bool is_circle() const { return circle_; }
  int size() const { return static_cast<int>(labels_.size()); }
  int identity() const { return e_; }
  int inv(int a) const;
  // Index of a*b. Circle products can leave the sampled table; that is an
  // error here (exact arithmetic paths use rationals() directly instead).
  int mul(int a, int b) const;
  double dist(int a, int b) const;
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<Frac>& rationals() const { return els_; }
  int denominator_cap() const { return cap_; }
  // Circle: index of a reduced rational in the sample, -1 when absent.
  int index_of(const Frac& x) const;

  // Arc distance between any two rationals, exact.
  static Frac arc(const Frac& x, const Frac& y);

 private:
  GroupModel() = default;
  bool circle_ = false;
  int e_ = 0;
  int cap_ = 0;
  std::vector<std::vector<int>> cayley_;
  std::vector<int> inv_;
  std::vector<std::vector<double>> metric_;
  std::vector<Frac> els_;
  std::map<std::pair<long long, long long>, int> index_;
  std::vector<std::string> labels_;
};

// Clamped-linear separation bumps at shrinking radii. f[n][g] lives in [0,1];
// r has one more entry than there are levels. On the circle every r_n is
// exactly 2^-n, so bump values are exact rationals clamp(2^(n+1)a - b, 0, b)/b
// at arc a/b.
struct BumpFamily {
  std::vector<double> r;
  std::vector<std::vector<double>> f;
  int requested = 0;
  bool truncated = false;
  int levels() const { return static_cast<int>(f.size()); }
  ojson to_json() const;
};

// Levels stop early on a finite group once the ball B(e, r_n) shrinks to the
// identity: that level's bump is already the indicator of g != e and every
// later level would repeat it.
BumpFamily build_bump_family(const GroupModel& g, int levels);

// h(x,y) = sum of f_n(x^-1 y) / 2^(n+1) over the built levels.
Dissimilarity wap_sum(const GroupModel& g, const BumpFamily& b);

// Exact circle sum at element x for an L-level family: a rational with
// denominator dividing b * 2^L.
Frac circle_wap_exact(int levels, const Frac& x);

struct EndToEndResult {
  BumpFamily bumps;
  Dissimilarity h;
  RepairResult rep;
  StabilityReport battery;
  ojson certificate;
};

// depth <= 0 picks the depth from the sum's smallest positive value.
EndToEndResult end_to_end(const GroupModel& g, int levels, int depth = 0,
                          std::uint64_t seed = 0);

// a(n,m) = f(s_n * t_m) fed to the double-limit machinery. Index sequences
// are held at their last entry beyond their length.
StabilityReport wap_function_test(const GroupModel& g,
                                  const std::vector<double>& f_table,
                                  const std::vector<int>& seq_n,
                                  const std::vector<int>& seq_m, long long N,
                                  int W, double tol,
                                  const std::vector<Selector>& selectors);

// Circle variant evaluating f on exact rational products.
StabilityReport wap_function_test(const std::function<double(const Frac&)>& f,
                                  const std::vector<Frac>& seq_n,
                                  const std::vector<Frac>& seq_m, long long N,
                                  int W, double tol,
                                  const std::vector<Selector>& selectors);

}  // namespace forge
