#include "forge/dissimilarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forge/common.hpp"
#include "triangle_kernel.hpp"

namespace forge {

namespace {

std::string cell(int i, int j) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

void validate(int n, const std::vector<double>& flat) {
  if (n <= 0) throw ValidationError("matrix must have at least one point");
  if (flat.size() != static_cast<std::size_t>(n) * n)
    throw ValidationError("matrix is not square");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double v = flat[static_cast<std::size_t>(i) * n + j];
      if (!std::isfinite(v))
        throw ValidationError("non-finite entry at " + cell(i, j));
      if (i == j) {
        if (v != 0.0)
          throw ValidationError("diagonal entry at " + cell(i, j) +
                                " must be 0, got " + format_double(v));
      } else {
        if (v <= 0.0)
          throw ValidationError("off-diagonal entry at " + cell(i, j) +
                                " must be positive, got " + format_double(v));
        const double w = flat[static_cast<std::size_t>(j) * n + i];
        if (v != w)
          throw ValidationError("asymmetric entries at " + cell(i, j) + ": " +
                                format_double(v) + " vs " + format_double(w));
      }
    }
  }
}

}  // namespace

Dissimilarity Dissimilarity::from_flat(int n, std::vector<double> flat,
                                       std::vector<std::string> labels) {
  validate(n, flat);
  if (!labels.empty() && labels.size() != static_cast<std::size_t>(n))
    throw ValidationError("label count does not match point count");
  Dissimilarity d;
  d.n_ = n;
  d.flat_ = std::move(flat);
  d.labels_ = std::move(labels);
  return d;
}

Dissimilarity Dissimilarity::from_values(
    const std::vector<std::vector<double>>& vals,
    std::vector<std::string> labels) {
  const int n = static_cast<int>(vals.size());
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(n) * n);
  for (const auto& row : vals) {
    if (row.size() != vals.size())
      throw ValidationError("matrix is not square");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return from_flat(n, std::move(flat), std::move(labels));
}

std::vector<double> Dissimilarity::distinct_values() const {
  std::vector<double> v(flat_);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

double Dissimilarity::min_positive() const {
  double best = std::numeric_limits<double>::infinity();
  for (double v : flat_)
    if (v > 0 && v < best) best = v;
  return best;  // infinity iff n == 1
}

double Dissimilarity::max_value() const {
  double best = 0;
  for (double v : flat_) best = std::max(best, v);
  return best;
}

Dissimilarity symmetrize_average(const std::vector<std::vector<double>>& vals,
                                 std::vector<std::string> labels) {
  const int n = static_cast<int>(vals.size());
  for (const auto& row : vals)
    if (row.size() != vals.size())
      throw ValidationError("matrix is not square");
  std::vector<double> flat(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      flat[static_cast<std::size_t>(i) * n + j] = (vals[i][j] + vals[j][i]) / 2;
  return Dissimilarity::from_flat(n, std::move(flat), std::move(labels));
}

ojson TriangleReport::to_json() const {
  ojson j;
  j["max_deficiency"] = max_deficiency;
  j["witness"] = {witness[0], witness[1], witness[2]};
  j["violation_count"] = violation_count;
  j["is_metric"] = is_metric();
  return j;
}

TriangleReport check_triangle(const Dissimilarity& h) {
  const int n = h.size();
  const double* f = h.flat().data();

  struct Part {
    double max_excess = -std::numeric_limits<double>::infinity();
    long long count = 0;
  };
  // Excess of ordered triple (x,y,z) is h(x,z) - h(x,y) - h(y,z). Scanning z
  // innermost keeps the two row pointers hot.
  auto parts = parallel_chunks(
      static_cast<std::size_t>(n), [&](std::size_t zb, std::size_t ze) {
    Part p;
    detail::RowScan acc;
    const int xb = static_cast<int>(zb), xe = static_cast<int>(ze);
    for (int x = xb; x < xe; ++x) {
      const double* hx = f + static_cast<std::size_t>(x) * n;
      for (int y = 0; y < n; ++y)
        detail::scan_row(hx, f + static_cast<std::size_t>(y) * n, hx[y], n,
                         acc);
    }
    p.max_excess = acc.max_excess;
    p.count = acc.count;
    return p;
  });
  Part total;
  for (const Part& p : parts) {
    total.max_excess = std::max(total.max_excess, p.max_excess);
    total.count += p.count;
  }

  TriangleReport rep;
  rep.violation_count = total.count;
  if (total.count == 0) {
    rep.max_deficiency = 0;
    rep.witness = {0, 0, 0};
    return rep;
  }
  rep.max_deficiency = total.max_excess;
  // Second pass only when violations exist: first triple attaining the max.
  for (int x = 0; x < n; ++x) {
    const double* hx = f + static_cast<std::size_t>(x) * n;
    for (int y = 0; y < n; ++y) {
      const double hxy = hx[y];
      const double* hy = f + static_cast<std::size_t>(y) * n;
      for (int z = 0; z < n; ++z) {
        if (hx[z] - hy[z] - hxy == total.max_excess) {
          rep.witness = {x, y, z};
          return rep;
        }
      }
    }
  }
  throw ConstructionError("triangle witness pass lost the recorded maximum");
}

ojson Modulus::to_json() const {
  ojson j = ojson::array();
  for (const auto& [eps, delta] : pairs) {
    ojson p;
    p["eps"] = eps;
    p["delta"] = delta;
    j.push_back(std::move(p));
  }
  return j;
}

namespace {

void check_eps_grid(const std::vector<double>& eps_grid) {
  if (eps_grid.empty()) throw ValidationError("eps grid is empty");
  for (double e : eps_grid)
    if (!(e > 0) || !std::isfinite(e))
      throw ValidationError("eps grid values must be positive and finite");
}

// Largest delta from `premise` values such that premise < delta implies the
// pair is not in `bad`. That is min over bad pairs of the premise value, or
// the max premise value when nothing is bad.
double best_delta(const std::vector<double>& premise,
                  const std::vector<char>& bad, double premise_max) {
  double delta = std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t k = 0; k < premise.size(); ++k) {
    if (bad[k]) {
      any = true;
      delta = std::min(delta, premise[k]);
    }
  }
  if (!any) return premise_max;
  return delta;
}

}  // namespace

Modulus local_continuity_modulus(const Dissimilarity& h,
                                 const std::vector<double>& eps_grid) {
  check_eps_grid(eps_grid);
  const int n = h.size();
  Modulus m;
  if (n == 1) {
    // Vacuous space: no pairs, any delta works.
    for (double e : eps_grid) m.pairs.emplace_back(e, 1.0);
    return m;
  }
  // M(x,y) = max_z |h(x,z)-h(y,z)|, the sup-displacement between rows.
  std::vector<double> prem, disp;
  prem.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  disp.reserve(prem.capacity());
  const double* f = h.flat().data();
  for (int x = 0; x < n; ++x) {
    const double* hx = f + static_cast<std::size_t>(x) * n;
    for (int y = x + 1; y < n; ++y) {
      const double* hy = f + static_cast<std::size_t>(y) * n;
      double mx = 0;
      for (int z = 0; z < n; ++z) mx = std::max(mx, std::abs(hx[z] - hy[z]));
      prem.push_back(hx[y]);
      disp.push_back(mx);
    }
  }
  const double premise_max = h.max_value();
  std::vector<char> bad(prem.size());
  for (double eps : eps_grid) {
    for (std::size_t k = 0; k < prem.size(); ++k) bad[k] = disp[k] >= eps;
    double delta = best_delta(prem, bad, premise_max);
    if (!(delta > 0)) delta = 0;  // defensive; cannot occur on valid inputs
    m.pairs.emplace_back(eps, delta);
  }
  return m;
}

std::pair<Modulus, Modulus> uniform_equivalence_moduli(
    const Dissimilarity& h1, const Dissimilarity& h2,
    const std::vector<double>& eps_grid) {
  check_eps_grid(eps_grid);
  if (h1.size() != h2.size())
    throw ValidationError("point counts differ: " + std::to_string(h1.size()) +
                          " vs " + std::to_string(h2.size()));
  if (!h1.labels().empty() && !h2.labels().empty() &&
      h1.labels() != h2.labels())
    throw ValidationError("label sets differ");
  const int n = h1.size();
  std::vector<double> v1, v2;
  for (int x = 0; x < n; ++x)
    for (int y = x + 1; y < n; ++y) {
      v1.push_back(h1(x, y));
      v2.push_back(h2(x, y));
    }
  auto one_direction = [&](const std::vector<double>& prem,
                           const std::vector<double>& conc,
                           double premise_max) {
    Modulus m;
    std::vector<char> bad(prem.size());
    for (double eps : eps_grid) {
      for (std::size_t k = 0; k < prem.size(); ++k) bad[k] = conc[k] >= eps;
      double delta = prem.empty() ? 1.0 : best_delta(prem, bad, premise_max);
      if (!(delta > 0)) delta = 0;
      m.pairs.emplace_back(eps, delta);
    }
    return m;
  };
  return {one_direction(v1, v2, h1.max_value()),
          one_direction(v2, v1, h2.max_value())};
}

}  // namespace forge
