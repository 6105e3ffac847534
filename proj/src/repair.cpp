#include "forge/repair.hpp"

#include <algorithm>
#include <cmath>

#include "forge/common.hpp"
#include "triangle_kernel.hpp"

namespace forge {

int choose_depth(const Dissimilarity& h) {
  const double hmin = h.min_positive();  // infinity on a 1-point space
  int n = 1;
  while (n <= 20 && std::ldexp(1.0, -n) >= hmin) ++n;
  if (n > 20)
    throw ConstructionError(
        "smallest positive value " + format_double(hmin) +
        " needs depth > 20; pre-scale the input (e.g. divide by its min)");
  return std::max(n, 4);
}

namespace {

// Triangle scan for intermediate tables that may not satisfy the positivity
// invariant (f can send small values to 0 at shallow depth).
TriangleReport scan_triangles_raw(int n, const std::vector<double>& flat) {
  TriangleReport rep;
  double max_excess = -std::numeric_limits<double>::infinity();
  detail::RowScan acc;
  for (int x = 0; x < n; ++x) {
    const double* hx = flat.data() + static_cast<std::size_t>(x) * n;
    for (int y = 0; y < n; ++y)
      detail::scan_row(hx, flat.data() + static_cast<std::size_t>(y) * n,
                       hx[y], n, acc);
  }
  max_excess = acc.max_excess;
  rep.violation_count = acc.count;
  if (rep.violation_count == 0) return rep;
  rep.max_deficiency = max_excess;
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y)
      for (int z = 0; z < n; ++z)
        if (flat[static_cast<std::size_t>(x) * n + z] -
                flat[static_cast<std::size_t>(y) * n + z] -
                flat[static_cast<std::size_t>(x) * n + y] ==
            max_excess) {
          rep.witness = {x, y, z};
          return rep;
        }
  return rep;
}

// Min-plus closure iterated to a floating-point fixpoint, at which
// d[i][j] <= d[i][k] + d[k][j] holds exactly as evaluated.
void closure_fixpoint(int n, std::vector<double>& d) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (int k = 0; k < n; ++k) {
      const double* dk = d.data() + static_cast<std::size_t>(k) * n;
      for (int i = 0; i < n; ++i) {
        double* di = d.data() + static_cast<std::size_t>(i) * n;
        const double dik = di[k];
        for (int j = 0; j < n; ++j) {
          const double via = dik + dk[j];
          if (via < di[j]) {
            di[j] = via;
            changed = true;
          }
        }
      }
    }
  }
}

std::vector<double> dyadic_grid(int depth) {
  std::vector<double> grid;
  const int K = 1 << depth;
  grid.reserve(K);
  for (int k = 1; k <= K; ++k)
    grid.push_back(std::ldexp(static_cast<double>(k), -depth));
  return grid;
}

}  // namespace

std::pair<Modulus, Modulus> certify_equivalence(const Dissimilarity& h,
                                                const Dissimilarity& d1,
                                                const CorrectionFn& f,
                                                double lift_epsilon) {
  if (h.size() != d1.size())
    throw ValidationError("table sizes differ");
  const int n = h.size();
  const int K = 1 << f.depth();
  const auto& r = f.radii().r;

  Modulus fwd, bwd;
  for (int k = 1; k <= K; ++k) {
    // h < r_q at q = k/2^N pins f(h) <= (k-1)/2^N, so d1 stays within one
    // dyadic step below q plus the lift.
    const double eps = f.radii().q_of(k - 1) + lift_epsilon;
    if (eps > 0) fwd.pairs.emplace_back(eps, r[k]);
    // d1 < q forces f(h) < q, so h never exceeds r_q.
    bwd.pairs.emplace_back(r[k], f.radii().q_of(k));
  }
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      const double hv = h(x, y), dv = d1(x, y);
      for (const auto& [eps, delta] : fwd.pairs)
        if (hv < delta && dv > eps)
          throw ConstructionError(
              "internal invariant violated: forward modulus failed at pair (" +
              std::to_string(x) + "," + std::to_string(y) + ")");
      for (const auto& [eps, delta] : bwd.pairs)
        if (dv < delta && hv > eps)
          throw ConstructionError(
              "internal invariant violated: backward modulus failed at pair (" +
              std::to_string(x) + "," + std::to_string(y) + ")");
    }
  }
  return {std::move(fwd), std::move(bwd)};
}

RepairResult repair(const Dissimilarity& h, const RepairOptions& opt) {
  const int n = h.size();

  double scale = 1.0;
  std::vector<double> work_flat = h.flat();
  if (opt.prescale && h.max_value() > 0) {
    scale = h.max_value();
    for (double& v : work_flat) v /= scale;
  }
  const Dissimilarity work =
      (scale == 1.0) ? h : Dissimilarity::from_flat(n, work_flat, h.labels());

  const int depth = opt.depth ? *opt.depth : choose_depth(work);
  if (depth < 0 || depth > 20)
    throw ConstructionError("depth " + std::to_string(depth) +
                            " out of supported range [0, 20]");

  const TDOracle oracle =
      opt.oracle ? *opt.oracle
                 : usc_envelope(TDOracle::from_table(compute_td(work)));

  const DyadicRadii radii = build_radii(oracle, depth, opt.bisect_iters);
  CorrectionFn f(radii);

  std::vector<double> corrected(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j)
        corrected[static_cast<std::size_t>(i) * n + j] = f.eval(work(i, j));

  RepairResult res{Dissimilarity::from_flat(1, {0.0}), std::move(f),
                   scan_triangles_raw(n, corrected), {}, {}, 0.0, depth,
                   scale, opt.closure};

  if (res.pre_lift.max_deficiency > res.f.epsilon())
    throw ConstructionError(
        "internal invariant violated: corrected deficiency " +
        format_double(res.pre_lift.max_deficiency) + " exceeds " +
        format_double(res.f.epsilon()));

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (corrected[static_cast<std::size_t>(i) * n + j] <= 0 && !opt.lift &&
          !opt.closure)
        throw ConstructionError(
            "corrected value vanished off the diagonal at (" +
            std::to_string(i) + "," + std::to_string(j) +
            "); increase depth or enable the lift");
    }

  if (opt.closure) {
    closure_fixpoint(n, corrected);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && corrected[static_cast<std::size_t>(i) * n + j] <= 0)
          throw ConstructionError(
              "closure collapsed an off-diagonal value to 0 at (" +
              std::to_string(i) + "," + std::to_string(j) +
              "); increase depth");
  } else if (opt.lift) {
    res.epsilon = res.f.epsilon();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) corrected[static_cast<std::size_t>(i) * n + j] += res.epsilon;
  }

  res.d1 = Dissimilarity::from_flat(n, std::move(corrected), h.labels());

  const TriangleReport after = check_triangle(res.d1);
  if ((opt.lift || opt.closure) && after.violation_count != 0)
    throw ConstructionError(
        "internal invariant violated: exactified output still has " +
        std::to_string(after.violation_count) + " triangle violations");

  if (opt.closure) {
    auto [fwd, bwd] =
        uniform_equivalence_moduli(work, res.d1, dyadic_grid(depth));
    res.fwd = std::move(fwd);
    res.bwd = std::move(bwd);
  } else {
    auto [fwd, bwd] = certify_equivalence(work, res.d1, res.f, res.epsilon);
    res.fwd = std::move(fwd);
    res.bwd = std::move(bwd);
  }
  return res;
}

ojson RepairResult::certificate() const {
  ojson j;
  j["epsilon"] = epsilon;
  j["depth"] = depth;
  j["moduli_fwd"] = fwd.to_json();
  j["moduli_bwd"] = bwd.to_json();
  j["pre_lift_deficiency"] = pre_lift.max_deficiency;
  j["witness"] = {pre_lift.witness[0], pre_lift.witness[1], pre_lift.witness[2]};
  return j;
}

}  // namespace forge
