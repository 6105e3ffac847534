// Acceptance gate: eight pipeline-level properties, one pass/fail line each.
// Exits nonzero if any line fails. All tolerances are pinned here, not in
// flags, so a green run certifies the same bounds everywhere.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/common.hpp"
#include "forge/correction.hpp"
#include "forge/deficiency.hpp"
#include "forge/dissimilarity.hpp"
#include "forge/group.hpp"
#include "forge/io.hpp"
#include "forge/repair.hpp"
#include "forge/stability.hpp"

using namespace forge;

namespace {

int g_failures = 0;

void expect(bool cond, const std::string& what) {
  if (!cond) throw std::runtime_error(what);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt_secs(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", s);
  return buf;
}

// Every producer returns the certificates it minted so the determinism
// criterion can re-run it and compare bytes.
struct Produced {
  std::string certs;
  std::string detail;
};

Dissimilarity random_premetric(std::mt19937_64& rng, int n, double lo,
                               double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> flat(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = dist(rng);
      flat[static_cast<std::size_t>(i) * n + j] = v;
      flat[static_cast<std::size_t>(j) * n + i] = v;
    }
  return Dissimilarity::from_flat(n, std::move(flat));
}

// 1. Every random pre-metric comes back an exact metric.
Produced run_repair_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(0);
  std::string certs;
  int count = 0, max_depth = 0;
  std::vector<std::pair<int, int>> schedule = {{5, 80}, {20, 80}, {50, 40}};
  for (const auto& [n, reps] : schedule) {
    for (int k = 0; k < reps; ++k) {
      const auto h = random_premetric(rng, n, 0.002, 2.0);
      const auto res = repair(h);
      expect(res.depth <= 12, "depth " + std::to_string(res.depth) +
                                  " exceeds 12 at n=" + std::to_string(n));
      max_depth = std::max(max_depth, res.depth);
      const auto tri = check_triangle(res.d1);
      expect(tri.violation_count == 0,
             "repaired table still violates the triangle at n=" +
                 std::to_string(n) + " case " + std::to_string(count));
      certs += res.certificate().dump();
      certs += '\n';
      ++count;
    }
  }
  const double dt = seconds_since(t0);
  expect(dt <= 10.0, "runtime " + fmt_secs(dt) + " exceeds 10s");
  return {std::move(certs),
          std::to_string(count) + " tables, n in {5,20,50}, depth<=" +
              std::to_string(max_depth) + ", " + fmt_secs(dt)};
}

std::vector<TDOracle> oracle_battery() {
  std::vector<TDOracle> out;
  out.push_back(TDOracle::analytic("plus"));
  out.push_back(TDOracle::analytic("max"));
  out.push_back(TDOracle::analytic("sqplus"));
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const auto h = random_premetric(rng, 12, 0.05, 2.0);
    out.push_back(usc_envelope(TDOracle::from_table(compute_td(h))));
  }
  return out;
}

// 2. Radii invariants at depth 8 across the oracle battery, plus the
// hand-derivable values for g(u,v) = u + v, which are dyadic-exact.
Produced run_radii_invariants() {
  const auto oracles = oracle_battery();
  std::string certs;
  for (std::size_t oi = 0; oi < oracles.size(); ++oi) {
    const auto& g = oracles[oi];
    const auto radii = build_radii(g, 8);
    const int K = radii.count();
    for (int gi = 1; gi <= K; ++gi) {
      expect(radii.r[gi] > 0 && radii.r[gi] <= radii.q_of(gi),
             "radius outside (0, q] at oracle " + std::to_string(oi));
      expect(radii.r[gi] > radii.r[gi - 1],
             "radii not strictly increasing at oracle " + std::to_string(oi));
    }
    for (int a = 1; a <= K; ++a)
      for (int b = 1; a + b <= K; ++b)
        expect(g.eval(radii.r[a], radii.r[b]) < radii.r[a + b],
               "defect condition failed at oracle " + std::to_string(oi));
    if (oi == 0) {
      expect(radii.r[K] == 1.0 && radii.r[K / 2] == 0.25 &&
                 radii.r[3 * K / 4] == 0.5 && radii.r[K / 4] == 0.0625,
             "additive-oracle radii do not match the hand values");
    }
    certs += radii.to_json().dump();
    certs += '\n';
  }
  return {std::move(certs),
          std::to_string(oracles.size()) +
              " oracles at depth 8, exact additive values, 0 tolerance"};
}

// 3. Correction excess stays within 2^(1-N) on the evaluation grid.
Produced run_excess_bound() {
  const auto oracles = oracle_battery();
  std::vector<double> grid(64);
  for (int j = 0; j < 64; ++j) grid[static_cast<std::size_t>(j)] = 2.0 * j / 63;
  std::string certs;
  double worst = 0;
  for (const int depth : {4, 6, 8}) {
    const double bound = std::ldexp(1.0, 1 - depth);
    for (std::size_t oi = 0; oi < oracles.size(); ++oi) {
      const CorrectionFn f(build_radii(oracles[oi], depth));
      const auto rep = verify_correction(f, oracles[oi], grid);
      expect(rep.passed(), "verification failed at depth " +
                               std::to_string(depth) + " oracle " +
                               std::to_string(oi));
      expect(rep.worst_excess <= bound,
             "excess " + format_double(rep.worst_excess) + " above " +
                 format_double(bound));
      worst = std::max(worst, rep.worst_excess / bound);
      certs += rep.to_json().dump();
      certs += '\n';
    }
  }
  return {std::move(certs),
          "N in {4,6,8} x 23 oracles, worst excess at " +
              format_double(worst) + " of bound"};
}

// Pairwise concordance ignoring ties: 1 means no discordant pair.
double gamma_rank(const std::vector<double>& xs, const std::vector<double>& ys,
                  long long* discordant_out) {
  long long conc = 0, disc = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const double dx = xs[i] - xs[j], dy = ys[i] - ys[j];
      if (dx == 0 || dy == 0) continue;
      if ((dx > 0) == (dy > 0))
        ++conc;
      else
        ++disc;
    }
  *discordant_out = disc;
  if (conc + disc == 0) return 0.0;
  return static_cast<double>(conc - disc) / static_cast<double>(conc + disc);
}

std::vector<int> rank_order(const std::vector<double>& xs) {
  std::vector<int> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return xs[static_cast<std::size_t>(a)] <
                                       xs[static_cast<std::size_t>(b)]; });
  std::vector<int> rank(xs.size());
  for (std::size_t k = 0; k < idx.size(); ++k)
    rank[static_cast<std::size_t>(idx[k])] = static_cast<int>(k);
  return rank;
}

// 4. Squared planar metrics: the built correction and the exact square root
// both restore the triangle inequality and preserve the rank order.
Produced run_squared_cross_check() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> jitter(-0.004, 0.004);
  std::string certs;
  for (int rep_i = 0; rep_i < 50; ++rep_i) {
    // 10 points on a jittered 12x12 grid; resample on any tied distance so
    // the rank statements below are exact.
    std::vector<double> flat;
    std::vector<double> off;
    for (int attempt = 0;; ++attempt) {
      expect(attempt < 100, "could not sample a ties-free configuration");
      std::vector<int> cells(144);
      std::iota(cells.begin(), cells.end(), 0);
      std::shuffle(cells.begin(), cells.end(), rng);
      std::vector<std::pair<double, double>> pts;
      for (int p = 0; p < 10; ++p)
        pts.push_back({0.04 * (cells[static_cast<std::size_t>(p)] % 12) +
                           jitter(rng),
                       0.04 * (cells[static_cast<std::size_t>(p)] / 12) +
                           jitter(rng)});
      flat.assign(100, 0.0);
      off.clear();
      for (int i = 0; i < 10; ++i)
        for (int j = i + 1; j < 10; ++j) {
          const double dx = pts[static_cast<std::size_t>(i)].first -
                            pts[static_cast<std::size_t>(j)].first;
          const double dy = pts[static_cast<std::size_t>(i)].second -
                            pts[static_cast<std::size_t>(j)].second;
          const double sq = dx * dx + dy * dy;
          flat[static_cast<std::size_t>(i) * 10 + j] = sq;
          flat[static_cast<std::size_t>(j) * 10 + i] = sq;
          off.push_back(sq);
        }
      auto sorted = off;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end())
        break;
    }
    const auto h = Dissimilarity::from_flat(10, flat);

    RepairOptions opt;
    opt.oracle = TDOracle::analytic("sqplus");
    const auto res = repair(h, opt);
    expect(check_triangle(res.d1).violation_count == 0,
           "built correction left violations at case " +
               std::to_string(rep_i));
    std::vector<double> off_d1;
    for (int i = 0; i < 10; ++i)
      for (int j = i + 1; j < 10; ++j) off_d1.push_back(res.d1(i, j));
    long long disc = 0;
    const double gk = gamma_rank(off, off_d1, &disc);
    expect(disc == 0 && gk == 1.0,
           "built correction broke the rank order at case " +
               std::to_string(rep_i));
    certs += res.certificate().dump();
    certs += '\n';

    auto root_flat = flat;
    for (double& v : root_flat) v = std::sqrt(v);
    const auto rooted = Dissimilarity::from_flat(10, root_flat);
    expect(check_triangle(rooted).violation_count == 0,
           "exact square root left violations at case " +
               std::to_string(rep_i));
    std::vector<double> off_root;
    for (int i = 0; i < 10; ++i)
      for (int j = i + 1; j < 10; ++j) off_root.push_back(rooted(i, j));
    expect(rank_order(off) == rank_order(off_root),
           "square root broke the rank order at case " + std::to_string(rep_i));
    certs += format_matrix_csv(10, rooted.flat());
  }
  return {std::move(certs), "50 squared metrics, both routes metric, "
                            "gamma=1 and rank-identical"};
}

// 5. The three stability witnesses hit their known defects.
Produced run_stability_witnesses() {
  std::string certs;
  std::string detail;

  auto t0 = std::chrono::steady_clock::now();
  const auto sup_witness = make_seq_from_json(ojson::parse(R"({
    "kind": "seq_space",
    "s": {"type": "prefix", "scale": "1"},
    "t": {"type": "prefix", "scale": "1/2"},
    "norm": {"kind": "sup"}
  })"));
  const auto sup_rep =
      stability_defect(*sup_witness, 100, 10, 1e-6, {Selector::kAll});
  expect(sup_rep.defect_defined && sup_rep.defect == 0.5,
         "sup-norm witness defect is not exactly 1/2");
  certs += sup_rep.to_json().dump();
  certs += '\n';
  double dt = seconds_since(t0);
  expect(dt <= 5.0, "sup-norm witness too slow: " + fmt_secs(dt));
  detail += "sup defect 0.5 exact " + fmt_secs(dt);

  t0 = std::chrono::steady_clock::now();
  const auto disjoint = make_seq_from_json(ojson::parse(R"({
    "kind": "seq_space",
    "s": {"type": "single", "scale": "1", "stride": 2, "offset": 0},
    "t": {"type": "single", "scale": "1", "stride": 2, "offset": 1},
    "norm": {"kind": "p", "p": 2}
  })"));
  const auto dis_rep =
      stability_defect(*disjoint, 50, 5, 1e-9, {Selector::kAll});
  expect(dis_rep.defect_defined && dis_rep.defect <= 1e-12,
         "disjoint-support family defect above 1e-12");
  certs += dis_rep.to_json().dump();
  certs += '\n';
  dt = seconds_since(t0);
  expect(dt <= 5.0, "disjoint-support family too slow: " + fmt_secs(dt));
  detail += ", l2 defect <=1e-12 " + fmt_secs(dt);

  t0 = std::chrono::steady_clock::now();
  const auto inter = make_seq_from_json(
      ojson::parse(R"x({"kind":"closed_form","expr":"n/(n+m+1)"})x"));
  const auto int_rep =
      stability_defect(*inter, 400, 25, 1e-3, {Selector::kAll});
  expect(int_rep.L_nm.converged && int_rep.L_mn.converged,
         "interchange limits did not converge");
  expect(std::fabs(int_rep.L_nm.value) <= 1e-2 &&
             std::fabs(int_rep.L_mn.value - 1.0) <= 1e-2,
         "interchange limits off their targets");
  certs += int_rep.to_json().dump();
  certs += '\n';
  dt = seconds_since(t0);
  expect(dt <= 5.0, "interchange example too slow: " + fmt_secs(dt));
  detail += ", interchange 0/1 within 1e-2 " + fmt_secs(dt);

  return {std::move(certs), std::move(detail)};
}

// 6. The bounded transform x/(1+x) behaves per case: defect carried exactly
// through case 1, divergent axes pinned to delta-limit 1 in case 2.
Produced run_divergence_cases() {
  std::string certs;
  const auto witness = make_seq_from_json(ojson::parse(R"({
    "kind": "seq_space",
    "s": {"type": "prefix", "scale": "1"},
    "t": {"type": "prefix", "scale": "1/2"},
    "norm": {"kind": "sup"}
  })"));
  const auto case1 = divergence_case_check(*witness, 100, 10, 1e-6);
  expect(case1.case_id == 1 && case1.passed, "case 1 check failed");
  expect(std::fabs(case1.delta_defect - 1.0 / 6) <= 1e-12,
         "case 1 delta-defect is not 1/6 within 1e-12");
  certs += case1.to_json().dump();
  certs += '\n';

  const auto divergent = make_seq_from_json(
      ojson::parse(R"({"kind":"closed_form","expr":"m","bounded_m":false})"));
  const auto case2 = divergence_case_check(*divergent, 1000, 1, 1e-3);
  expect(case2.case_id == 2 && case2.passed, "case 2 check failed");
  expect(case2.delta_nm.converged && case2.delta_mn.converged,
         "case 2 delta limits did not converge");
  expect(std::fabs(case2.delta_nm.value - 1.0) <= 1e-3 &&
             std::fabs(case2.delta_mn.value - 1.0) <= 1e-3,
         "case 2 delta limits not within 1e-3 of 1");
  certs += case2.to_json().dump();
  certs += '\n';
  return {std::move(certs),
          "case 1 delta-defect 1/6 within 1e-12, case 2 limits at 1 "
          "within 1e-3, N=1000"};
}

// 7. The whole group pipeline on the 4-cycle and the sampled circle.
Produced run_group_pipeline() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string certs;
  const auto check_cert = [](const ojson& c, const std::string& who) {
    for (const char* key :
         {"zero_inside", "one_outside", "radius_decay", "symmetric"})
      expect(c["bump_conditions"][key] == true,
             who + ": bump condition " + key + " failed");
    expect(c["h"]["invariant"] == true, who + ": sum not invariant");
    expect(c["equivalence_bound"] == true, who + ": equivalence bound failed");
    expect(c["forward_levels"] == true, who + ": level bound failed");
    expect(c["d1"]["invariant"] == true, who + ": repaired table lost "
                                               "invariance");
    expect(c["d1"]["triangle_violations"] == 0,
           who + ": repaired table violates the triangle");
    expect(c["stability"]["report"]["defect_defined"] == true &&
               c["stability"]["report"]["defect"] == 0.0,
           who + ": stability defect nonzero");
  };

  const std::vector<std::vector<int>> z4 = {
      {0, 1, 2, 3}, {1, 2, 3, 0}, {2, 3, 0, 1}, {3, 0, 1, 2}};
  const std::vector<std::vector<double>> z4m = {{0, 0.5, 1, 0.5},
                                                {0.5, 0, 0.5, 1},
                                                {1, 0.5, 0, 0.5},
                                                {0.5, 1, 0.5, 0}};
  const auto fin = end_to_end(GroupModel::finite(z4, z4m), 1);
  check_cert(fin.certificate, "4-cycle");
  certs += fin.certificate.dump();
  certs += '\n';

  const auto circ = end_to_end(GroupModel::circle(64), 12, 5);
  check_cert(circ.certificate, "circle");
  expect(circ.certificate["model"]["size"] == 1260, "circle table size");
  certs += circ.certificate.dump();
  certs += '\n';

  const double dt = seconds_since(t0);
  expect(dt <= 10.0, "runtime " + fmt_secs(dt) + " exceeds 10s");
  return {std::move(certs),
          "4-cycle and 1260-element circle, exact invariance, defect 0, " +
              fmt_secs(dt)};
}

using Runner = Produced (*)();

struct Criterion {
  const char* name;
  Runner run;
};

const Criterion kCriteria[] = {
    {"repair correctness", run_repair_correctness},
    {"radii invariants", run_radii_invariants},
    {"correction excess bound", run_excess_bound},
    {"squared-metric cross-check", run_squared_cross_check},
    {"stability witnesses", run_stability_witnesses},
    {"divergence case transfer", run_divergence_cases},
    {"group pipeline", run_group_pipeline},
};

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("[%s] %s (%s)\n", ok ? "PASS" : "FAIL", name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

}  // namespace

int main() {
  std::vector<std::string> first_certs;
  for (const auto& c : kCriteria) {
    try {
      auto out = c.run();
      first_certs.push_back(std::move(out.certs));
      report(true, c.name, out.detail);
    } catch (const std::exception& e) {
      first_certs.push_back({});
      report(false, c.name, e.what());
    }
  }

  try {
    std::size_t bytes = 0;
    bool all_equal = true;
    for (std::size_t i = 0; i < std::size(kCriteria); ++i) {
      const auto again = kCriteria[i].run();
      bytes += again.certs.size();
      if (again.certs != first_certs[i]) {
        all_equal = false;
        report(false, "determinism",
               std::string("certificates differ on rerun of ") +
                   kCriteria[i].name);
        break;
      }
    }
    if (all_equal)
      report(true, "determinism",
             "rerun of all producers byte-identical, " +
                 std::to_string(bytes) + " bytes compared");
  } catch (const std::exception& e) {
    report(false, "determinism", e.what());
  }

  return g_failures == 0 ? 0 : 1;
}
