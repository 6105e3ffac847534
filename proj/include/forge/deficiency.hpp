#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "forge/dissimilarity.hpp"
#include "forge/io.hpp"

namespace forge {

// Exact worst-case composition table: T[i][j] = sup{h(x,z) : h(x,y) <=
// breakpoints[i], h(y,z) <= breakpoints[j]}, sup over the finite space,
// sup of nothing = 0. Queries between breakpoints floor to the step below.
struct TDTable {
  std::vector<double> breakpoints;  // distinct h values, ascending, [0] == 0
  std::vector<double> table;        // row-major, size B*B

  int bcount() const { return static_cast<int>(breakpoints.size()); }
  double at(int i, int j) const { return table[static_cast<std::size_t>(i) * bcount() + j]; }
  int index_below(double u) const;  // largest i with breakpoints[i] <= u
  double eval(double u, double v) const;

  ojson to_json() const;
  static TDTable from_json(const ojson& j);
};

TDTable compute_td(const Dissimilarity& h);

// Symmetric, weakly increasing g(u,v) with g(0,v) <= v, backed by a TDTable
// or an analytic formula. The zero axiom can be relaxed for internal bounds
// that dominate a true TD (see capped_sum).
class TDOracle {
 public:
  static TDOracle from_table(TDTable t);
  static TDOracle analytic(const std::string& name);  // plus | sqplus | max
  static TDOracle analytic_fn(std::string name,
                              std::function<double(double, double)> fn);
  // min(u+v+pad, cap): upper bound for the TD of truncated-sum pre-metrics
  // on the circle. Violates g(0,v) <= v by up to pad; kept out of the CLI.
  static TDOracle capped_sum(double pad, double cap);

  double eval(double u, double v) const;
  // sup{s in [0,1] : g(s, c) < t}, sup of nothing = 0. Exact for tables
  // (breakpoint arithmetic); bisection for analytic oracles, returning the
  // smallest tested failing point, which equals the sup exactly whenever the
  // sup is a dyadic rational of depth <= iters.
  double sup_arg_below(double c, double t, int bisect_iters) const;

  bool is_table() const { return table_ != nullptr; }
  const TDTable* table() const { return table_.get(); }
  const std::string& name() const { return name_; }
  bool envelope_applied() const { return envelope_; }
  bool zero_axiom_relaxed() const { return relaxed_; }

 private:
  TDOracle() = default;
  void spot_check() const;
  friend TDOracle usc_envelope(const TDOracle& g);

  std::string name_;
  std::shared_ptr<const TDTable> table_;
  std::function<double(double, double)> fn_;
  bool envelope_ = false;
  bool relaxed_ = false;
};

// Upper-semicontinuous envelope. Table-backed oracles already evaluate as
// right-continuous steps (constant on [b_i, b_{i+1})), so the envelope is the
// oracle itself, re-validated and marked; analytic oracles are assumed
// continuous.
TDOracle usc_envelope(const TDOracle& g);

struct TDCheckEntry {
  double v, t, delta;
};
struct TDCheckReport {
  bool passed = true;
  double fail_v = 0, fail_t = 0;  // first failing pair when !passed
  std::vector<TDCheckEntry> witnesses;
  ojson to_json() const;
};

// For each grid pair v < t, searches delta over {t/2, t/4, ...} down to
// delta_floor for g(delta, v+delta) < t.
TDCheckReport is_td_function(const TDOracle& g, const std::vector<double>& t_grid,
                             double delta_floor = 0x1p-20);

}  // namespace forge
