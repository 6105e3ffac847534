#include "forge/group.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "forge/common.hpp"
#include "forge/deficiency.hpp"

namespace forge {

namespace {

void check_group_axioms(const std::vector<std::vector<int>>& cayley, int e) {
  const int n = static_cast<int>(cayley.size());
  const auto at = [&](int a, int b) { return cayley[a][b]; };
  if (n <= 64) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          if (at(at(a, b), c) != at(a, at(b, c)))
            throw ValidationError("cayley table is not associative at (" +
                                  std::to_string(a) + "," + std::to_string(b) +
                                  "," + std::to_string(c) + ")");
  } else {
    std::mt19937_64 gen(0);
    for (int i = 0; i < 20000; ++i) {
      const int a = static_cast<int>(gen() % n);
      const int b = static_cast<int>(gen() % n);
      const int c = static_cast<int>(gen() % n);
      if (at(at(a, b), c) != at(a, at(b, c)))
        throw ValidationError("cayley table is not associative at (" +
                              std::to_string(a) + "," + std::to_string(b) +
                              "," + std::to_string(c) + ")");
    }
  }
  (void)e;
}

}  // namespace

GroupModel GroupModel::finite(std::vector<std::vector<int>> cayley,
                              std::vector<std::vector<double>> metric,
                              std::vector<std::string> labels) {
  const int n = static_cast<int>(cayley.size());
  if (n == 0) throw ValidationError("empty cayley table");
  for (const auto& row : cayley) {
    if (static_cast<int>(row.size()) != n)
      throw ValidationError("cayley table is not square");
    for (int v : row)
      if (v < 0 || v >= n)
        throw ValidationError("cayley entry " + std::to_string(v) +
                              " outside [0, " + std::to_string(n) + ")");
  }
  // Latin square: every row and column is a permutation.
  for (int a = 0; a < n; ++a) {
    std::vector<bool> row(n, false), col(n, false);
    for (int b = 0; b < n; ++b) {
      if (row[cayley[a][b]])
        throw ValidationError("row " + std::to_string(a) +
                              " of the cayley table repeats an element");
      row[cayley[a][b]] = true;
      if (col[cayley[b][a]])
        throw ValidationError("column " + std::to_string(a) +
                              " of the cayley table repeats an element");
      col[cayley[b][a]] = true;
    }
  }
  int e = -1;
  for (int cand = 0; cand < n; ++cand) {
    bool ok = true;
    for (int x = 0; x < n && ok; ++x)
      ok = cayley[cand][x] == x && cayley[x][cand] == x;
    if (ok) {
      e = cand;
      break;
    }
  }
  if (e < 0) throw ValidationError("cayley table has no identity");
  check_group_axioms(cayley, e);

  std::vector<int> inv(n, -1);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b)
      if (cayley[a][b] == e && cayley[b][a] == e) {
        inv[a] = b;
        break;
      }
    if (inv[a] < 0)
      throw ValidationError("element " + std::to_string(a) +
                            " has no inverse");
  }

  if (labels.empty())
    for (int i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  // Dissimilarity validation gives symmetry, zero diagonal, positivity.
  const Dissimilarity base = Dissimilarity::from_values(metric, labels);
  if (check_triangle(base).violation_count != 0)
    throw ValidationError("base table violates the triangle inequality");
  for (int g = 0; g < n; ++g)
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        if (metric[cayley[g][x]][cayley[g][y]] != metric[x][y])
          throw ValidationError("base metric is not left-invariant at g=" +
                                std::to_string(g) + ", x=" + std::to_string(x) +
                                ", y=" + std::to_string(y));
  for (int g = 0; g < n; ++g)
    if (metric[e][g] != metric[e][inv[g]])
      throw ValidationError("base metric has d(e,g) != d(e,g^-1) at g=" +
                            std::to_string(g) +
                            "; only inverse-symmetric metrics are supported");

  GroupModel m;
  m.circle_ = false;
  m.e_ = e;
  m.cayley_ = std::move(cayley);
  m.inv_ = std::move(inv);
  m.metric_ = std::move(metric);
  m.labels_ = std::move(labels);
  return m;
}

GroupModel GroupModel::circle(int denominator_cap) {
  if (denominator_cap < 1 || denominator_cap > 1024)
    throw ValidationError("denominator cap must lie in [1, 1024]");
  GroupModel m;
  m.circle_ = true;
  m.cap_ = denominator_cap;
  for (long long q = 1; q <= denominator_cap; ++q)
    for (long long p = 0; p < q; ++p)
      if (std::gcd(p, q) == 1) m.els_.push_back(Frac(p, q));
  std::sort(m.els_.begin(), m.els_.end());
  for (int i = 0; i < static_cast<int>(m.els_.size()); ++i) {
    m.index_[{m.els_[i].num, m.els_[i].den}] = i;
    m.labels_.push_back(m.els_[i].str());
  }
  m.e_ = 0;  // sorted ascending, so 0 sits first
  m.inv_.resize(m.els_.size());
  for (int i = 0; i < static_cast<int>(m.els_.size()); ++i) {
    const Frac neg = (-m.els_[i]).mod1();
    m.inv_[i] = m.index_.at({neg.num, neg.den});
  }
  return m;
}

GroupModel GroupModel::from_json(const ojson& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw ValidationError("group model needs a \"kind\" field");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "circle") {
    if (!j.contains("denominator_cap"))
      throw ValidationError("circle model needs \"denominator_cap\"");
    return circle(j.at("denominator_cap").get<int>());
  }
  if (kind == "finite") {
    if (!j.contains("cayley") || !j.contains("metric"))
      throw ValidationError("finite model needs \"cayley\" and \"metric\"");
    std::vector<std::string> labels;
    if (j.contains("labels"))
      labels = j.at("labels").get<std::vector<std::string>>();
    return finite(j.at("cayley").get<std::vector<std::vector<int>>>(),
                  j.at("metric").get<std::vector<std::vector<double>>>(),
                  std::move(labels));
  }
  throw ValidationError("unknown model kind \"" + kind +
                        "\" (expected finite, circle)");
}

int GroupModel::inv(int a) const { return inv_[static_cast<std::size_t>(a)]; }

int GroupModel::mul(int a, int b) const {
  if (!circle_) return cayley_[static_cast<std::size_t>(a)]
                              [static_cast<std::size_t>(b)];
  const Frac p = (els_[static_cast<std::size_t>(a)] +
                  els_[static_cast<std::size_t>(b)])
                     .mod1();
  const int idx = index_of(p);
  if (idx < 0)
    throw ValidationError("product " + p.str() +
                          " outside the model's element table");
  return idx;
}

int GroupModel::index_of(const Frac& x) const {
  const auto it = index_.find({x.num, x.den});
  return it == index_.end() ? -1 : it->second;
}

Frac GroupModel::arc(const Frac& x, const Frac& y) {
  const Frac d = (x - y).mod1();
  const Frac alt = Frac(1) - d;
  return d < alt ? d : alt;
}

double GroupModel::dist(int a, int b) const {
  if (!circle_) return metric_[static_cast<std::size_t>(a)]
                              [static_cast<std::size_t>(b)];
  return arc(els_[static_cast<std::size_t>(a)],
             els_[static_cast<std::size_t>(b)])
      .to_double();
}

BumpFamily build_bump_family(const GroupModel& g, int levels) {
  if (levels < 1) throw ValidationError("at least one level is required");
  if (levels > 40) throw ValidationError("levels above 40 are not supported");
  const int n = g.size();

  std::vector<double> d_e(n);
  for (int i = 0; i < n; ++i) d_e[static_cast<std::size_t>(i)] = g.dist(g.identity(), i);
  for (double v : d_e)
    if (v > 1.0)
      throw ValidationError(
          "base metric exceeds 1; apply the bounded transform first");

  BumpFamily fam;
  fam.requested = levels;
  fam.r.push_back(1.0);

  for (int lvl = 0; lvl < levels; ++lvl) {
    const double rn = fam.r.back();
    bool exhausted = false;
    double next = std::min(std::ldexp(1.0, -lvl - 1), rn / 2);
    if (!g.is_circle()) {
      double largest_below = 0;
      for (double v : d_e)
        if (v > 0 && v < rn) largest_below = std::max(largest_below, v);
      if (largest_below == 0)
        exhausted = true;  // B(e, rn) = {e}: this bump is the g != e indicator
      else
        next = std::min(next, largest_below / 2);
    }
    fam.r.push_back(next);

    std::vector<double> f(n);
    const double span = rn - next;
    for (int i = 0; i < n; ++i)
      f[static_cast<std::size_t>(i)] =
          std::clamp((d_e[static_cast<std::size_t>(i)] - next) / span, 0.0, 1.0);
    for (int i = 0; i < n; ++i)
      f[static_cast<std::size_t>(i)] =
          std::min(f[static_cast<std::size_t>(i)],
                   f[static_cast<std::size_t>(g.inv(i))]);
    fam.f.push_back(std::move(f));

    if (exhausted) {
      fam.truncated = lvl + 1 < levels;
      break;
    }
  }

  // Conditions (a), (b), (c) and symmetry, checked on every sampled element.
  for (int lvl = 0; lvl < fam.levels(); ++lvl) {
    const double rn = fam.r[static_cast<std::size_t>(lvl)];
    const double rn1 = fam.r[static_cast<std::size_t>(lvl) + 1];
    if (rn > std::ldexp(1.0, -lvl) || rn1 >= rn)
      throw ConstructionError("internal invariant violated: bump radii");
    for (int i = 0; i < n; ++i) {
      const double fv = fam.f[static_cast<std::size_t>(lvl)]
                             [static_cast<std::size_t>(i)];
      const double dv = d_e[static_cast<std::size_t>(i)];
      if (dv < rn1 && fv != 0)
        throw ConstructionError(
            "internal invariant violated: bump nonzero inside its ball");
      if (dv >= rn && fv != 1)
        throw ConstructionError(
            "internal invariant violated: bump below 1 outside its ball");
      if (fv != fam.f[static_cast<std::size_t>(lvl)]
                     [static_cast<std::size_t>(g.inv(i))])
        throw ConstructionError(
            "internal invariant violated: bump not inverse-symmetric");
    }
  }
  return fam;
}

ojson BumpFamily::to_json() const {
  ojson j;
  j["levels"] = levels();
  j["requested"] = requested;
  j["truncated"] = truncated;
  j["radii"] = r;
  return j;
}

Frac circle_wap_exact(int levels, const Frac& x) {
  if (levels < 1 || levels > 40)
    throw ValidationError("levels must lie in [1, 40]");
  const Frac a = GroupModel::arc(x, Frac(0));
  long long num = 0;
  for (int nlv = 0; nlv < levels; ++nlv) {
    const long long c =
        std::clamp((2LL << nlv) * a.num - a.den, 0LL, a.den);
    num += c << (levels - 1 - nlv);
  }
  return Frac(num, a.den << levels);
}

Dissimilarity wap_sum(const GroupModel& g, const BumpFamily& b) {
  const int n = g.size();
  std::vector<double> flat(static_cast<std::size_t>(n) * n, 0.0);

  if (!g.is_circle()) {
    std::vector<double> h_of(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int lvl = 0; lvl < b.levels(); ++lvl)
        h_of[static_cast<std::size_t>(i)] +=
            std::ldexp(b.f[static_cast<std::size_t>(lvl)]
                          [static_cast<std::size_t>(i)],
                       -lvl - 1);
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        flat[static_cast<std::size_t>(x) * n + y] =
            h_of[static_cast<std::size_t>(g.mul(g.inv(x), y))];
  } else {
    const auto& els = g.rationals();
    for (int x = 0; x < n; ++x)
      for (int y = x + 1; y < n; ++y) {
        const double v =
            circle_wap_exact(b.levels(), els[static_cast<std::size_t>(x)] -
                                             els[static_cast<std::size_t>(y)])
                .to_double();
        flat[static_cast<std::size_t>(x) * n + y] = v;
        flat[static_cast<std::size_t>(y) * n + x] = v;
      }
  }

  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      if (x != y && flat[static_cast<std::size_t>(x) * n + y] <= 0)
        throw ValidationError(
            "sum vanishes off the diagonal at (" + std::to_string(x) + "," +
            std::to_string(y) +
            "); increase the level count past log2 of the smallest distance");
  return Dissimilarity::from_flat(n, std::move(flat), g.labels());
}

namespace {

// Index sequences are held at their final entry past the end.
int pick_held(const std::vector<int>& seq, long long k) {
  const long long len = static_cast<long long>(seq.size());
  return seq[static_cast<std::size_t>(std::min(k - 1, len - 1))];
}

struct ComposedModuli {
  Modulus fwd;  // base d controls d1
  Modulus bwd;  // d1 controls base d
};

// Chains the bump-family bounds between d and h with the repair certificate
// between h and d1.
ComposedModuli compose_moduli(const BumpFamily& bumps,
                              const RepairResult& rep) {
  ComposedModuli out;
  const int L = bumps.levels();
  for (const auto& [eps, delta] : rep.fwd.pairs) {
    // d < r_{n+1} forces h <= 2^-(n+1); any n with 2^-(n+1) < delta chains
    // into the repair pair. Smallest such n gives the widest radius.
    for (int nlv = 0; nlv + 1 <= L; ++nlv)
      if (std::ldexp(1.0, -nlv - 1) < delta) {
        out.fwd.pairs.emplace_back(eps,
                                   bumps.r[static_cast<std::size_t>(nlv) + 1]);
        break;
      }
  }
  for (int nlv = 0; nlv < L; ++nlv) {
    // h < 2^-(n+1) forces d < r_n: find the widest repair pair whose h-bound
    // stays strictly inside 2^-(n+1).
    double best_delta = -1;
    for (const auto& [eps_h, delta] : rep.bwd.pairs)
      if (eps_h < std::ldexp(1.0, -nlv - 1)) best_delta = std::max(best_delta, delta);
    if (best_delta > 0)
      out.bwd.pairs.emplace_back(bumps.r[static_cast<std::size_t>(nlv)],
                                 best_delta);
  }
  return out;
}

}  // namespace

EndToEndResult end_to_end(const GroupModel& g, int levels, int depth,
                          std::uint64_t seed) {
  BumpFamily bumps = build_bump_family(g, levels);
  Dissimilarity h = wap_sum(g, bumps);
  const int L = bumps.levels();
  const int n = g.size();

  RepairOptions opt;
  if (depth > 0) opt.depth = depth;
  if (g.is_circle()) {
    // The continuum deficiency of the circle sum is exactly
    // min(u + v + 2^-L, max h); the sampled one can only be smaller.
    const double pad = std::ldexp(1.0, -L);
    opt.oracle = TDOracle::capped_sum(pad, 0.5 - pad);
  }
  RepairResult rep = repair(h, opt);

  // Exact invariance: h and d1 are functions of x^-1 y alone. Group every
  // pair by that difference and require bitwise-equal values.
  bool h_invariant = true, d1_invariant = true;
  if (!g.is_circle()) {
    std::vector<double> h_seen(static_cast<std::size_t>(n),
                               -std::numeric_limits<double>::infinity());
    std::vector<double> d_seen(h_seen);
    for (int x = 0; x < n && (h_invariant || d1_invariant); ++x)
      for (int y = 0; y < n; ++y) {
        const auto gi = static_cast<std::size_t>(g.mul(g.inv(x), y));
        if (h_seen[gi] == -std::numeric_limits<double>::infinity()) {
          h_seen[gi] = h(x, y);
          d_seen[gi] = rep.d1(x, y);
        } else {
          if (h_seen[gi] != h(x, y)) h_invariant = false;
          if (d_seen[gi] != rep.d1(x, y)) d1_invariant = false;
        }
      }
  } else {
    std::map<std::pair<long long, long long>, std::pair<double, double>> seen;
    const auto& els = g.rationals();
    for (int x = 0; x < n; ++x)
      for (int y = x + 1; y < n; ++y) {
        const Frac a = GroupModel::arc(els[static_cast<std::size_t>(x)],
                                       els[static_cast<std::size_t>(y)]);
        const auto [it, fresh] =
            seen.try_emplace({a.num, a.den}, h(x, y), rep.d1(x, y));
        if (!fresh) {
          if (it->second.first != h(x, y)) h_invariant = false;
          if (it->second.second != rep.d1(x, y)) d1_invariant = false;
        }
      }
  }
  if (!h_invariant || !d1_invariant)
    throw ConstructionError(
        "internal invariant violated: output depends on more than x^-1 y");

  // h > 2^-n forces d >= r_n; on the circle both sides compare exactly.
  bool equivalence_bound = true;
  // d < r_{n+1} forces every bump through level n to vanish.
  bool forward_levels = true;
  if (!g.is_circle()) {
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) {
        const double dv = g.dist(x, y);
        const double hv = h(x, y);
        const auto gi = static_cast<std::size_t>(g.mul(g.inv(x), y));
        for (int nlv = 0; nlv <= L; ++nlv)
          if (hv > std::ldexp(1.0, -nlv) &&
              dv < bumps.r[static_cast<std::size_t>(nlv)])
            equivalence_bound = false;
        for (int nlv = 0; nlv + 1 <= L; ++nlv)
          if (dv < bumps.r[static_cast<std::size_t>(nlv) + 1])
            for (int mlv = 0; mlv <= nlv; ++mlv)
              if (bumps.f[static_cast<std::size_t>(mlv)][gi] != 0)
                forward_levels = false;
      }
  } else {
    const auto& els = g.rationals();
    for (int x = 0; x < n; ++x)
      for (int y = x + 1; y < n; ++y) {
        const Frac a = GroupModel::arc(els[static_cast<std::size_t>(x)],
                                       els[static_cast<std::size_t>(y)]);
        const Frac hv = circle_wap_exact(L, a);
        for (int nlv = 0; nlv <= L; ++nlv) {
          // h > 2^-n  <=>  hv.num * 2^n > hv.den, and r_n = 2^-n exactly
          const Frac thr(1, 1LL << nlv);
          if (thr < hv && a < thr) equivalence_bound = false;
        }
        for (int nlv = 0; nlv + 1 <= L; ++nlv)
          if (a < Frac(1, 2LL << nlv))
            for (int mlv = 0; mlv <= nlv; ++mlv)
              if ((2LL << mlv) * a.num - a.den > 0) forward_levels = false;
      }
  }
  if (!equivalence_bound || !forward_levels)
    throw ConstructionError(
        "internal invariant violated: bump moduli against the base metric");

  ComposedModuli comp = compose_moduli(bumps, rep);
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      const double dv = g.dist(x, y);
      const double d1v = rep.d1(x, y);
      for (const auto& [eps, delta] : comp.fwd.pairs)
        if (dv < delta && d1v > eps)
          throw ConstructionError(
              "internal invariant violated: composed forward modulus");
      for (const auto& [eps, delta] : comp.bwd.pairs)
        if (d1v < delta && dv > eps)
          throw ConstructionError(
              "internal invariant violated: composed backward modulus");
    }

  const TriangleReport d1_tri = check_triangle(rep.d1);

  // Stability battery: seeded index sequences into the repaired table.
  std::mt19937_64 gen(seed);
  std::vector<int> seq_n(48), seq_m(48);
  for (int& v : seq_n) v = static_cast<int>(gen() % static_cast<std::uint64_t>(n));
  for (int& v : seq_m) v = static_cast<int>(gen() % static_cast<std::uint64_t>(n));
  std::vector<std::vector<double>> d1_rows(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) {
    d1_rows[static_cast<std::size_t>(x)].resize(static_cast<std::size_t>(n));
    for (int y = 0; y < n; ++y)
      d1_rows[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] =
          rep.d1(x, y);
  }
  const TableSeq battery_seq(d1_rows, seq_n, seq_m, false);
  StabilityReport battery = stability_defect(
      battery_seq, 50, 5, 1e-9,
      {Selector::kAll, Selector::kEvens, Selector::kOdds, Selector::kTailHalf});

  ojson cert;
  cert["model"] = ojson{{"kind", g.is_circle() ? "circle" : "finite"},
                        {"size", n}};
  if (g.is_circle()) cert["model"]["denominator_cap"] = g.denominator_cap();
  cert["bumps"] = bumps.to_json();
  cert["bump_conditions"] = ojson{{"zero_inside", true},
                                  {"one_outside", true},
                                  {"radius_decay", true},
                                  {"symmetric", true}};
  cert["h"] = ojson{{"max", h.max_value()},
                    {"min_positive", n > 1 ? h.min_positive() : 0.0},
                    {"invariant", h_invariant}};
  cert["equivalence_bound"] = equivalence_bound;
  cert["forward_levels"] = forward_levels;
  cert["repair"] = rep.certificate();
  cert["d1"] = ojson{{"triangle_violations", d1_tri.violation_count},
                     {"invariant", d1_invariant}};
  cert["moduli_vs_base_fwd"] = comp.fwd.to_json();
  cert["moduli_vs_base_bwd"] = comp.bwd.to_json();
  cert["stability"] = ojson{{"seed", seed}, {"report", battery.to_json()}};

  EndToEndResult res{std::move(bumps), std::move(h), std::move(rep),
                     std::move(battery), std::move(cert)};
  return res;
}

StabilityReport wap_function_test(const GroupModel& g,
                                  const std::vector<double>& f_table,
                                  const std::vector<int>& seq_n,
                                  const std::vector<int>& seq_m, long long N,
                                  int W, double tol,
                                  const std::vector<Selector>& selectors) {
  const int n = g.size();
  if (static_cast<int>(f_table.size()) != n)
    throw ValidationError("function table size " +
                          std::to_string(f_table.size()) +
                          " does not match the model size " +
                          std::to_string(n));
  for (double v : f_table)
    if (!std::isfinite(v) || v < 0)
      throw ValidationError("function table entries must be finite and "
                            "non-negative");
  if (seq_n.empty() || seq_m.empty())
    throw ValidationError("index sequences must be non-empty");
  for (int idx : seq_n)
    if (idx < 0 || idx >= n)
      throw ValidationError("seq_n index outside the model");
  for (int idx : seq_m)
    if (idx < 0 || idx >= n)
      throw ValidationError("seq_m index outside the model");

  const FnSeq seq([&g, &f_table, &seq_n, &seq_m](long long a, long long b) {
    const int prod = g.mul(pick_held(seq_n, a), pick_held(seq_m, b));
    return f_table[static_cast<std::size_t>(prod)];
  });
  return stability_defect(seq, N, W, tol, selectors);
}

StabilityReport wap_function_test(const std::function<double(const Frac&)>& f,
                                  const std::vector<Frac>& seq_n,
                                  const std::vector<Frac>& seq_m, long long N,
                                  int W, double tol,
                                  const std::vector<Selector>& selectors) {
  if (seq_n.empty() || seq_m.empty())
    throw ValidationError("sequences must be non-empty");
  const FnSeq seq([&f, &seq_n, &seq_m](long long a, long long b) {
    const auto pick = [](const std::vector<Frac>& s, long long k) {
      const long long len = static_cast<long long>(s.size());
      return s[static_cast<std::size_t>(std::min(k - 1, len - 1))];
    };
    return f((pick(seq_n, a) + pick(seq_m, b)).mod1());
  });
  return stability_defect(seq, N, W, tol, selectors);
}

}  // namespace forge
