#include "forge/deficiency.hpp"

#include <algorithm>
#include <cmath>

#include "forge/common.hpp"

namespace forge {

int TDTable::index_below(double u) const {
  if (u < 0) throw ValidationError("negative query " + format_double(u));
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), u);
  return static_cast<int>(it - breakpoints.begin()) - 1;
}

double TDTable::eval(double u, double v) const {
  return at(index_below(u), index_below(v));
}

ojson TDTable::to_json() const {
  ojson j;
  j["breakpoints"] = breakpoints;
  j["table"] = ojson::array();
  const int b = bcount();
  for (int i = 0; i < b; ++i) {
    ojson row = ojson::array();
    for (int k = 0; k < b; ++k) row.push_back(at(i, k));
    j["table"].push_back(std::move(row));
  }
  return j;
}

TDTable TDTable::from_json(const ojson& j) {
  TDTable t;
  t.breakpoints = j.at("breakpoints").get<std::vector<double>>();
  for (const auto& row : j.at("table")) {
    auto r = row.get<std::vector<double>>();
    if (r.size() != t.breakpoints.size())
      throw ValidationError("table row length does not match breakpoints");
    t.table.insert(t.table.end(), r.begin(), r.end());
  }
  if (t.table.size() != t.breakpoints.size() * t.breakpoints.size())
    throw ValidationError("table is not square");
  return t;
}

namespace {

void validate_table(const TDTable& t) {
  const int b = t.bcount();
  if (b == 0 || t.breakpoints[0] != 0.0)
    throw ValidationError("breakpoints must start at 0");
  for (int i = 1; i < b; ++i)
    if (!(t.breakpoints[i] > t.breakpoints[i - 1]))
      throw ValidationError("breakpoints must be strictly increasing");
  for (int i = 0; i < b; ++i) {
    for (int k = 0; k < b; ++k) {
      const double v = t.at(i, k);
      if (!(v >= 0) || !std::isfinite(v))
        throw ValidationError("table values must be finite and non-negative");
      if (v != t.at(k, i)) throw ValidationError("table is not symmetric");
      if (i > 0 && t.at(i - 1, k) > v)
        throw ValidationError("table must be weakly increasing in each index");
    }
    if (t.at(0, i) > t.breakpoints[i])
      throw ValidationError("zero row exceeds breakpoint: T[0][" +
                            std::to_string(i) + "] > b[" + std::to_string(i) +
                            "] breaks g(0,v) <= v");
  }
}

}  // namespace

TDTable compute_td(const Dissimilarity& h) {
  const int n = h.size();
  TDTable t;
  t.breakpoints = h.distinct_values();
  const int b = t.bcount();
  // Index of each entry in the breakpoint list, so the triple scan is pure
  // array traffic.
  std::vector<int> idx(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      auto it = std::lower_bound(t.breakpoints.begin(), t.breakpoints.end(),
                                 h(i, j));
      idx[static_cast<std::size_t>(i) * n + j] =
          static_cast<int>(it - t.breakpoints.begin());
    }
  // raw[i][j] = best h(x,z) over triples whose legs hit exactly (b[i], b[j]).
  std::vector<double> raw(static_cast<std::size_t>(b) * b, 0.0);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const int ix = idx[static_cast<std::size_t>(x) * n + y];
      const double* hx = h.flat().data() + static_cast<std::size_t>(x) * n;
      double* row = raw.data() + static_cast<std::size_t>(ix) * b;
      const int* iy = idx.data() + static_cast<std::size_t>(y) * n;
      for (int z = 0; z < n; ++z) {
        double& cell = row[iy[z]];
        if (hx[z] > cell) cell = hx[z];
      }
    }
  }
  // The sup with legs <= (b[i], b[j]) is the running max over the lower-left
  // quadrant; one monotone sweep closes it.
  t.table = std::move(raw);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j) {
      double v = t.table[static_cast<std::size_t>(i) * b + j];
      if (i > 0) v = std::max(v, t.table[static_cast<std::size_t>(i - 1) * b + j]);
      if (j > 0) v = std::max(v, t.table[static_cast<std::size_t>(i) * b + j - 1]);
      t.table[static_cast<std::size_t>(i) * b + j] = v;
    }
  validate_table(t);
  return t;
}

namespace {

// Grid for construction-time monotonicity and axiom checks on analytic
// oracles: 0, 32 steps across (0,1], then a coarse reach above 1.
std::vector<double> spot_grid() {
  std::vector<double> g{0.0};
  for (int j = 1; j <= 32; ++j) g.push_back(j / 32.0);
  g.push_back(1.5);
  g.push_back(2.0);
  g.push_back(4.0);
  return g;
}

}  // namespace

void TDOracle::spot_check() const {
  const std::vector<double> grid =
      table_ ? table_->breakpoints : spot_grid();
  std::vector<double> prev_row;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> row(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double v = fn_(grid[i], grid[j]);
      if (!(v >= 0) || !std::isfinite(v))
        throw ValidationError("oracle '" + name_ +
                              "' produced a negative or non-finite value");
      if (j > 0 && v < row[j - 1])
        throw ValidationError("oracle '" + name_ +
                              "' is not weakly increasing at (" +
                              format_double(grid[i]) + "," +
                              format_double(grid[j]) + ")");
      if (!prev_row.empty() && v < prev_row[j])
        throw ValidationError("oracle '" + name_ +
                              "' is not weakly increasing in the first "
                              "argument at (" +
                              format_double(grid[i]) + "," +
                              format_double(grid[j]) + ")");
      if (fn_(grid[j], grid[i]) != v)
        throw ValidationError("oracle '" + name_ + "' is not symmetric at (" +
                              format_double(grid[i]) + "," +
                              format_double(grid[j]) + ")");
      row[j] = v;
    }
    if (!relaxed_ && fn_(0.0, grid[i]) > grid[i])
      throw ValidationError("oracle '" + name_ + "' violates g(0,v) <= v at v=" +
                            format_double(grid[i]));
    prev_row = std::move(row);
  }
}

TDOracle TDOracle::from_table(TDTable t) {
  validate_table(t);
  TDOracle o;
  o.name_ = "table";
  o.table_ = std::make_shared<const TDTable>(std::move(t));
  auto tp = o.table_;
  o.fn_ = [tp](double u, double v) { return tp->eval(u, v); };
  return o;
}

TDOracle TDOracle::analytic(const std::string& name) {
  if (name == "plus")
    return analytic_fn("plus", [](double u, double v) { return u + v; });
  if (name == "sqplus")
    // (sqrt(u) + sqrt(v))^2 opened up; this form meets g(0,v) = v exactly
    // instead of within an ulp.
    return analytic_fn("sqplus", [](double u, double v) {
      return u + v + 2 * std::sqrt(u * v);
    });
  if (name == "max")
    return analytic_fn("max", [](double u, double v) { return std::max(u, v); });
  throw ValidationError("unknown oracle '" + name +
                        "' (expected plus, sqplus, or max)");
}

TDOracle TDOracle::analytic_fn(std::string name,
                               std::function<double(double, double)> fn) {
  TDOracle o;
  o.name_ = std::move(name);
  o.fn_ = std::move(fn);
  o.spot_check();
  return o;
}

TDOracle TDOracle::capped_sum(double pad, double cap) {
  if (!(pad >= 0) || !(cap > 0))
    throw ValidationError("capped_sum needs pad >= 0 and cap > 0");
  TDOracle o;
  o.name_ = "capped_sum";
  o.relaxed_ = true;
  o.fn_ = [pad, cap](double u, double v) { return std::min(u + v + pad, cap); };
  o.spot_check();
  return o;
}

double TDOracle::eval(double u, double v) const {
  if (u < 0 || v < 0)
    throw ValidationError("oracle queried at a negative point");
  const double out = fn_(u, v);
  if (!relaxed_) {
    // The axiom the whole construction leans on; cheap to keep armed.
    if (u == 0 && out > v)
      throw ConstructionError("oracle '" + name_ + "' broke g(0,v) <= v at v=" +
                              format_double(v));
    if (v == 0 && out > u)
      throw ConstructionError("oracle '" + name_ + "' broke g(u,0) <= u at u=" +
                              format_double(u));
  }
  return out;
}

double TDOracle::sup_arg_below(double c, double t, int bisect_iters) const {
  if (table_) {
    // Step structure makes the sup exact: rows pass as a prefix, and the
    // passing s form [0, b[first_failing_row]).
    const TDTable& tab = *table_;
    const int jc = tab.index_below(c);
    const int icap = tab.index_below(1.0);
    int last_pass = -1;
    for (int i = 0; i <= icap; ++i) {
      if (tab.at(i, jc) < t)
        last_pass = i;
      else
        break;
    }
    if (last_pass < 0) return 0.0;
    if (last_pass == icap) return 1.0;
    return tab.breakpoints[last_pass + 1];
  }
  auto pass = [&](double s) { return fn_(s, c) < t; };
  if (!pass(0.0)) return 0.0;
  if (pass(1.0)) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < bisect_iters; ++i) {
    const double mid = (lo + hi) / 2;
    if (mid <= lo || mid >= hi) break;
    (pass(mid) ? lo : hi) = mid;
  }
  // hi is the infimum of the observed failing set, within one ulp of the
  // true sup in either direction (rounding inside g can tip a tie). Snap to
  // the shortest dyadic in [hi, hi + ulp]: when the sup is a clean dyadic a
  // tie-induced one-ulp undershoot would otherwise stick, and any one-ulp
  // overshoot is caught by the radii verification pass downstream.
  const double hi_next = std::nextafter(hi, 2.0);
  for (int k = 0; k <= 140; ++k) {
    const double cand = std::ldexp(std::ceil(std::ldexp(hi, k)), -k);
    if (cand <= hi_next) return cand;
  }
  return hi;
}

TDOracle usc_envelope(const TDOracle& g) {
  TDOracle out = g;
  out.spot_check();  // reject non-monotone input here, per the envelope contract
  out.envelope_ = true;
  return out;
}

ojson TDCheckReport::to_json() const {
  ojson j;
  j["passed"] = passed;
  if (!passed) {
    j["fail_v"] = fail_v;
    j["fail_t"] = fail_t;
  }
  ojson w = ojson::array();
  for (const auto& e : witnesses) {
    ojson row;
    row["v"] = e.v;
    row["t"] = e.t;
    row["delta"] = e.delta;
    w.push_back(std::move(row));
  }
  j["witnesses"] = std::move(w);
  return j;
}

TDCheckReport is_td_function(const TDOracle& g, const std::vector<double>& t_grid,
                             double delta_floor) {
  if (!(delta_floor > 0)) throw ValidationError("delta_floor must be positive");
  for (double t : t_grid)
    if (!(t > 0)) throw ValidationError("t_grid values must be positive");
  std::vector<double> grid(t_grid);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  TDCheckReport rep;
  for (std::size_t a = 0; a < grid.size(); ++a) {
    for (std::size_t b = a + 1; b < grid.size(); ++b) {
      const double v = grid[a], t = grid[b];
      double found = -1;
      for (double delta = t / 2; delta >= delta_floor; delta /= 2) {
        if (g.eval(delta, v + delta) < t) {
          found = delta;
          break;
        }
      }
      if (found < 0) {
        rep.passed = false;
        rep.fail_v = v;
        rep.fail_t = t;
        return rep;
      }
      rep.witnesses.push_back({v, t, found});
    }
  }
  return rep;
}

}  // namespace forge
