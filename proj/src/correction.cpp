#include "forge/correction.hpp"

#include <algorithm>
#include <cmath>

#include "forge/common.hpp"

namespace forge {

ojson DyadicRadii::to_json() const {
  ojson j;
  j["depth"] = depth;
  ojson rows = ojson::array();
  // Each dyadic in lowest terms: q = k/2^n with k odd, n = the level that
  // introduced it.
  for (int gi = 1; gi <= count(); ++gi) {
    int k = gi, n = depth;
    while (k % 2 == 0 && n > 0) {
      k /= 2;
      n -= 1;
    }
    ojson row;
    row["k"] = k;
    row["n"] = n;
    row["r"] = r[gi];
    rows.push_back(std::move(row));
  }
  j["radii"] = std::move(rows);
  return j;
}

DyadicRadii DyadicRadii::from_json(const ojson& j) {
  DyadicRadii d;
  d.depth = j.at("depth").get<int>();
  if (d.depth < 0 || d.depth > 20) throw ValidationError("depth out of range");
  const int K = 1 << d.depth;
  d.r.assign(K + 1, -1.0);
  d.r[0] = 0.0;
  for (const auto& row : j.at("radii")) {
    const long long k = row.at("k").get<long long>();
    const int n = row.at("n").get<int>();
    if (n < 0 || n > d.depth || k <= 0 || k > (1LL << n))
      throw ValidationError("radius entry out of range");
    d.r[static_cast<std::size_t>(k) << (d.depth - n)] = row.at("r").get<double>();
  }
  for (int gi = 1; gi <= K; ++gi) {
    if (d.r[gi] < 0) throw ValidationError("missing radius entry");
    if (!(d.r[gi] > d.r[gi - 1]))
      throw ValidationError("radii must be strictly increasing");
    if (d.r[gi] > d.q_of(gi))
      throw ValidationError("radius exceeds its dyadic");
  }
  if (d.r[K] != 1.0) throw ValidationError("radius at 1 must be 1");
  return d;
}

namespace {

struct Builder {
  const TDOracle& g;
  const int depth, iters;
  const double slack_floor;
  const int K;
  std::vector<double> r;      // by global index, K+1 entries
  std::vector<double> sval;   // the s_q each radius was derived from
  std::vector<char> from_mid; // true: r = (r_prev + s)/2; false: r = s/2

  Builder(const TDOracle& g_, int depth_, int iters_, double floor_)
      : g(g_), depth(depth_), iters(iters_), slack_floor(floor_),
        K(1 << depth_), r(K + 1, 0.0), sval(K + 1, 0.0), from_mid(K + 1, 0) {
    r[K] = 1.0;
  }

  std::string q_name(int gi) const {
    int k = gi, n = depth;
    while (k % 2 == 0 && n > 0) {
      k /= 2;
      n -= 1;
    }
    return std::to_string(k) + "/2^" + std::to_string(n);
  }

  // sup{s <= 1 : g(s, c) < t}, short-circuited: when the current minimum
  // already satisfies the predicate the sup cannot lower it.
  double sup_term(double cur, double c, double t) const {
    if (g.eval(cur, c) < t) return cur;
    return std::min(cur, g.sup_arg_below(c, t, iters));
  }

  // q = k/2^lvl for odd k >= 3: s_q caps at q and at the next radius up,
  // then one sup constraint per level-(lvl-1) dyadic q' <= 1 - q_minus.
  void set_mid(int gi, int step) {
    const double q = std::ldexp(static_cast<double>(gi), -depth);
    const int gprev = gi - step;
    double s = std::min(q, r[gi + step]);
    for (int jg = 2 * step; jg <= K - gprev; jg += 2 * step)
      s = sup_term(s, r[jg], r[gprev + jg]);
    sval[gi] = s;
    from_mid[gi] = 1;
    r[gi] = (r[gprev] + s) / 2;
  }

  // q = 1/2^lvl, placed last in its level: the half-radius seed constraint,
  // then one constraint per level-lvl dyadic q' in [2q, 1-q], all of which
  // exist by the descending processing order.
  void set_first(int step) {
    const int gi = step;
    const double q = std::ldexp(static_cast<double>(gi), -depth);
    const int g2q = 2 * step;
    double s = std::min(q, r[g2q]);
    s = sup_term(s, r[g2q] / 2, r[g2q]);
    for (int jg = 2 * step; jg <= K - step; jg += step)
      s = sup_term(s, r[jg], r[step + jg]);
    sval[gi] = s;
    from_mid[gi] = 0;
    r[gi] = s / 2;
  }

  // Shrinks a radius toward its floor after a strictness failure traced to
  // bisection overshoot. Mid radii must stay above r at q-minus; first
  // radii only above zero.
  void shrink(int gi, int step) {
    if (from_mid[gi]) {
      sval[gi] = (sval[gi] + r[gi - step]) / 2;
      r[gi] = (r[gi - step] + sval[gi]) / 2;
    } else {
      sval[gi] /= 2;
      r[gi] = sval[gi] / 2;
    }
  }

  void verify_level(int lvl) {
    const int step = 1 << (depth - lvl);
    int budget = 40;
    for (;;) {
      // (a) plus strict monotonicity over everything defined so far. These
      // cannot be repaired by shrinking, so failures are terminal.
      for (int gi = step; gi <= K; gi += step) {
        if (!(r[gi] > r[gi - step]))
          throw ConstructionError(
              "radius construction lost monotonicity at q=" + q_name(gi) +
              " (oracle too flat at this scale; reduce depth)");
        const double q = std::ldexp(static_cast<double>(gi), -depth);
        if (!(r[gi] <= q))
          throw ConstructionError("radius exceeds its dyadic at q=" + q_name(gi));
      }
      if (r[step] < slack_floor)
        throw ConstructionError(
            "radius underflow at q=" + q_name(step) + ": r=" +
            format_double(r[step]) +
            " is below the slack floor; reduce depth or pre-scale the input");
      // (b) second half, over every pair with at least one index new at this
      // level. Old pairs were verified when their later index appeared and
      // are immutable since; an old pair can never gain a new sum index
      // because two even multiples of step cannot sum to an odd one.
      int bad = -1;
      for (int a = step; a <= K - step && bad < 0; a += step) {
        const bool a_new = (a / step) % 2 == 1;
        for (int b = step; a + b <= K; b += step) {
          const bool b_new = (b / step) % 2 == 1;
          if (!a_new && !b_new) continue;
          if (!(g.eval(r[a], r[b]) < r[a + b])) {
            bad = a_new ? a : b;
            break;
          }
        }
      }
      if (bad < 0) return;
      if (--budget < 0)
        throw ConstructionError(
            "radius verification retries exhausted at level " +
            std::to_string(lvl) + " near q=" + q_name(bad) +
            " (pathological oracle or insufficient precision)");
      shrink(bad, step);
    }
  }

  DyadicRadii run() {
    for (int lvl = 1; lvl <= depth; ++lvl) {
      const int step = 1 << (depth - lvl);
      for (int k = (1 << lvl) - 1; k >= 3; k -= 2) set_mid(k * step, step);
      set_first(step);
      verify_level(lvl);
    }
    DyadicRadii out;
    out.depth = depth;
    out.r = std::move(r);
    return out;
  }
};

}  // namespace

DyadicRadii build_radii(const TDOracle& g, int depth, int bisect_iters,
                        double slack_floor) {
  if (depth < 0 || depth > 20)
    throw ConstructionError("depth " + std::to_string(depth) +
                            " out of supported range [0, 20]");
  if (bisect_iters < 8) throw ValidationError("bisect_iters too small");
  if (!(slack_floor > 0)) throw ValidationError("slack_floor must be positive");
  if (depth == 0) {
    DyadicRadii out;
    out.depth = 0;
    out.r = {0.0, 1.0};
    return out;
  }
  return Builder(g, depth, bisect_iters, slack_floor).run();
}

CorrectionFn::CorrectionFn(DyadicRadii radii) : radii_(std::move(radii)) {
  const int K = radii_.count();
  if (K < 1 || radii_.r[0] != 0.0 || radii_.r[K] != 1.0)
    throw ValidationError("malformed radius family");
  for (int k = 1; k <= K; ++k)
    if (!(radii_.r[k] > radii_.r[k - 1]))
      throw ValidationError("radii must be strictly increasing");
}

double CorrectionFn::eval(double t) const {
  if (t < 0) throw ValidationError("correction queried at negative t");
  if (t == 0) return 0;
  // Largest k with r[k] < t; r[0] = 0 < t guards the lower end.
  const auto& r = radii_.r;
  auto it = std::lower_bound(r.begin() + 1, r.end(), t);
  const int k = static_cast<int>(it - r.begin()) - 1;
  return std::ldexp(static_cast<double>(k), -radii_.depth);
}

double CorrectionFn::upper_eval(double t) const {
  if (t < 0) throw ValidationError("correction queried at negative t");
  const auto& r = radii_.r;
  auto it = std::upper_bound(r.begin() + 1, r.end(), t);
  if (it == r.end()) return 1.0;
  const int k = static_cast<int>(it - r.begin());
  return std::ldexp(static_cast<double>(k), -radii_.depth);
}

ojson CorrectionReport::to_json() const {
  ojson j;
  j["worst_excess"] = worst_excess;
  j["bound"] = bound;
  j["worst_u"] = worst_u;
  j["worst_v"] = worst_v;
  j["excess_ok"] = excess_ok;
  j["zero_ok"] = zero_ok;
  j["passed"] = passed();
  return j;
}

CorrectionReport verify_correction(const CorrectionFn& f, const TDOracle& g,
                                   const std::vector<double>& grid) {
  CorrectionReport rep;
  rep.bound = f.epsilon();
  rep.worst_excess = -std::numeric_limits<double>::infinity();
  for (double u : grid) {
    if (u < 0) throw ValidationError("grid values must be non-negative");
    for (double v : grid) {
      const double excess = f.eval(g.eval(u, v)) - f.eval(u) - f.eval(v);
      if (excess > rep.worst_excess) {
        rep.worst_excess = excess;
        rep.worst_u = u;
        rep.worst_v = v;
      }
    }
    if (f.eval(u) == 0 && u > f.smallest_radius()) rep.zero_ok = false;
  }
  rep.excess_ok = rep.worst_excess <= rep.bound;
  return rep;
}

}  // namespace forge
