#pragma once

#include <cmath>
#include <vector>

#include "forge/deficiency.hpp"
#include "forge/io.hpp"

namespace forge {

// The dyadic radius family {r_q : q = k/2^N, 0 < k <= 2^N}. r[k] holds the
// radius for q = k/2^N; r[0] = 0 is a sentinel, never a stored radius.
// Invariants after a successful build:
//   0 < r[k] <= k/2^N, r strictly increasing, r[2^N] = 1,
//   g(r[a], r[b]) < r[a+b] for all a, b with a+b <= 2^N.
struct DyadicRadii {
  int depth = 0;
  std::vector<double> r;

  int count() const { return static_cast<int>(r.size()) - 1; }
  double q_of(int k) const { return std::ldexp(static_cast<double>(k), -depth); }

  ojson to_json() const;
  static DyadicRadii from_json(const ojson& j);
};

DyadicRadii build_radii(const TDOracle& g, int depth, int bisect_iters = 60,
                        double slack_floor = 0x1p-90);

// f(t) = sup{q : r_q < t} with sup of nothing = 0. Weakly increasing step
// function; f(0) = 0, f(t) = 1 for t > 1.
class CorrectionFn {
 public:
  explicit CorrectionFn(DyadicRadii radii);

  double eval(double t) const;
  // inf{q : r_q > t}, inf of nothing = 1. Gap to eval(t) is at most 2^(1-N).
  double upper_eval(double t) const;

  int depth() const { return radii_.depth; }
  // The exactification lift used downstream: one dyadic step of slack on
  // each side of the correction bound.
  double epsilon() const { return std::ldexp(1.0, 1 - radii_.depth); }
  double smallest_radius() const { return radii_.r[1]; }
  const DyadicRadii& radii() const { return radii_; }

 private:
  DyadicRadii radii_;
};

struct CorrectionReport {
  double worst_excess = 0;  // max of f(g(u,v)) - f(u) - f(v) over the grid
  double bound = 0;         // 2^(1-N)
  double worst_u = 0, worst_v = 0;
  bool excess_ok = true;
  bool zero_ok = true;  // f(t) = 0 implies t <= smallest radius, on the grid
  bool passed() const { return excess_ok && zero_ok; }
  ojson to_json() const;
};

CorrectionReport verify_correction(const CorrectionFn& f, const TDOracle& g,
                                   const std::vector<double>& grid);

}  // namespace forge
