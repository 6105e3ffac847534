#include <doctest.h>

#include <cmath>
#include <vector>

#include "forge/common.hpp"
#include "forge/correction.hpp"
#include "forge/deficiency.hpp"

using namespace forge;

namespace {

Dissimilarity three_point(double a, double b, double c) {
  return Dissimilarity::from_values({{0, a, c}, {a, 0, b}, {c, b, 0}});
}

std::vector<double> unit_grid(int points, double top) {
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i)
    g[i] = top * static_cast<double>(i) / (points - 1);
  return g;
}

}  // namespace

TEST_CASE("depth-2 radii for the additive rule") {
  const auto radii = build_radii(TDOracle::analytic("plus"), 2);
  REQUIRE(radii.depth == 2);
  REQUIRE(radii.count() == 4);
  CHECK(radii.r[0] == 0.0);
  CHECK(radii.r[1] == 0.0625);
  CHECK(radii.r[2] == 0.25);
  CHECK(radii.r[3] == 0.5);
  CHECK(radii.r[4] == 1.0);
}

TEST_CASE("depth-2 radii for the max rule") {
  const auto radii = build_radii(TDOracle::analytic("max"), 2);
  CHECK(radii.r[1] == 0.125);
  CHECK(radii.r[2] == 0.25);
  CHECK(radii.r[3] == 0.5);
  CHECK(radii.r[4] == 1.0);
}

TEST_CASE("depth-8 additive radii hit the closed-form values") {
  // For g(u,v) = u+v the doubling pattern is exact: r at k/2^n odd-reduced
  // dyadics follows r_q = q for q >= 1/2 on the top level and quarters below.
  const auto radii = build_radii(TDOracle::analytic("plus"), 8);
  CHECK(radii.r[256] == 1.0);   // q = 1
  CHECK(radii.r[128] == 0.25);  // q = 1/2
  CHECK(radii.r[192] == 0.5);   // q = 3/4
  CHECK(radii.r[64] == 0.0625); // q = 1/4
}

TEST_CASE("correction evaluation is the left-closed step sup") {
  const CorrectionFn f(build_radii(TDOracle::analytic("plus"), 2));
  CHECK(f.eval(0.0) == 0.0);
  CHECK(f.eval(0.3) == 0.5);    // radii 1/16 and 1/4 lie below
  CHECK(f.eval(0.25) == 0.25);  // the radius at 1/2 is not strictly below
  CHECK(f.eval(2.0) == 1.0);
  CHECK(f.eval(0.03) == 0.0);   // below the smallest radius
  CHECK(f.upper_eval(0.25) == 0.75);
  CHECK(f.upper_eval(0.03) == 0.25);
  CHECK(f.upper_eval(2.0) == 1.0);
  CHECK(f.epsilon() == 0.5);
  CHECK(f.smallest_radius() == 0.0625);
  CHECK_THROWS_AS(f.eval(-0.1), ValidationError);
  CHECK_THROWS_AS(f.upper_eval(-0.1), ValidationError);
}

TEST_CASE("upper form exceeds the lower by at most one dyadic step pair") {
  const CorrectionFn f(build_radii(TDOracle::analytic("sqplus"), 5));
  const double bound = std::ldexp(1.0, 1 - f.depth());
  // Probe both generic points and the radii themselves; equality at a stored
  // radius is where the two-step gap appears.
  std::vector<double> probes = unit_grid(97, 1.25);
  for (double rv : f.radii().r) probes.push_back(rv);
  for (double t : probes) {
    const double lo = f.eval(t);
    const double hi = f.upper_eval(t);
    CHECK(hi >= lo);
    CHECK(hi - lo <= bound);
  }
}

TEST_CASE("built radii satisfy the family invariants exhaustively") {
  for (const char* name : {"plus", "max", "sqplus"}) {
    CAPTURE(name);
    const auto g = TDOracle::analytic(name);
    const auto radii = build_radii(g, 5);
    const int K = radii.count();
    for (int k = 1; k <= K; ++k) {
      CHECK(radii.r[k] > 0.0);
      CHECK(radii.r[k] <= radii.q_of(k));
      CHECK(radii.r[k] > radii.r[k - 1]);
    }
    for (int a = 1; a < K; ++a)
      for (int b = 1; a + b <= K; ++b)
        CHECK(g.eval(radii.r[a], radii.r[b]) < radii.r[a + b]);
  }
}

TEST_CASE("verification report clears the dyadic bound for analytic rules") {
  const auto grid = unit_grid(64, 2.0);
  for (int depth : {4, 6, 8}) {
    for (const char* name : {"plus", "max", "sqplus"}) {
      CAPTURE(depth);
      CAPTURE(name);
      const auto g = TDOracle::analytic(name);
      const CorrectionFn f(build_radii(g, depth));
      const auto rep = verify_correction(f, g, grid);
      CHECK(rep.passed());
      CHECK(rep.excess_ok);
      CHECK(rep.zero_ok);
      CHECK(rep.bound == std::ldexp(1.0, 1 - depth));
      CHECK(rep.worst_excess <= rep.bound);
    }
  }
}

TEST_CASE("verification rejects negative grid points") {
  const auto g = TDOracle::analytic("plus");
  const CorrectionFn f(build_radii(g, 2));
  CHECK_THROWS_AS(verify_correction(f, g, {0.5, -0.25}), ValidationError);
}

TEST_CASE("depth-4 radii from a three-point two-leg table") {
  // Base space (1,1,2): two-leg sups jump at 1 and 2, nothing in between.
  // Every radius is dyadic, so the whole family freezes exactly.
  const auto table = compute_td(three_point(1, 1, 2));
  const auto g = usc_envelope(TDOracle::from_table(table));
  const auto radii = build_radii(g, 4);
  const std::vector<double> want = {
      0.0,       1.0 / 32, 1.0 / 16, 3.0 / 32, 1.0 / 8,  5.0 / 32,
      3.0 / 16,  7.0 / 32, 1.0 / 4,  5.0 / 16, 3.0 / 8,  7.0 / 16,
      1.0 / 2,   19.0 / 32, 11.0 / 16, 13.0 / 16, 1.0};
  REQUIRE(radii.r.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CAPTURE(i);
    CHECK(radii.r[i] == want[i]);
  }
  const CorrectionFn f(radii);
  CHECK(f.eval(1.0) == 15.0 / 16);
  CHECK(f.eval(2.0) == 1.0);
}

TEST_CASE("degenerate depths") {
  const auto g = TDOracle::analytic("plus");
  const auto trivial = build_radii(g, 0);
  CHECK(trivial.r == std::vector<double>{0.0, 1.0});
  CHECK_THROWS_AS(build_radii(g, -1), ConstructionError);
  CHECK_THROWS_AS(build_radii(g, 21), ConstructionError);
  CHECK_THROWS_AS(build_radii(g, 4, 7), ValidationError);
  CHECK_THROWS_AS(build_radii(g, 4, 60, 0.0), ValidationError);
}

TEST_CASE("radius family serialization round trips in lowest terms") {
  const auto radii = build_radii(TDOracle::analytic("max"), 2);
  const ojson j = radii.to_json();
  REQUIRE(j.at("radii").size() == 4);
  // Global order 1..4 reduces to 1/2^2, 1/2^1, 3/2^2, 1/2^0.
  CHECK(j["radii"][0]["k"] == 1);
  CHECK(j["radii"][0]["n"] == 2);
  CHECK(j["radii"][1]["k"] == 1);
  CHECK(j["radii"][1]["n"] == 1);
  CHECK(j["radii"][2]["k"] == 3);
  CHECK(j["radii"][2]["n"] == 2);
  CHECK(j["radii"][3]["k"] == 1);
  CHECK(j["radii"][3]["n"] == 0);
  const auto back = DyadicRadii::from_json(j);
  CHECK(back.depth == radii.depth);
  CHECK(back.r == radii.r);
}

TEST_CASE("radius family deserialization rejects malformed input") {
  const auto good = build_radii(TDOracle::analytic("max"), 2).to_json();

  auto mutate = [&](auto&& fn) {
    ojson j = good;
    fn(j);
    return j;
  };

  CHECK_THROWS_AS(DyadicRadii::from_json(mutate([](ojson& j) {
                    j["depth"] = 21;
                  })),
                  ValidationError);
  CHECK_THROWS_AS(DyadicRadii::from_json(mutate([](ojson& j) {
                    j["radii"][0]["k"] = 3;  // 3/2^1 is not a dyadic in [0,1]
                    j["radii"][0]["n"] = 1;
                  })),
                  ValidationError);
  CHECK_THROWS_AS(DyadicRadii::from_json(mutate([](ojson& j) {
                    j["radii"].erase(2);
                  })),
                  ValidationError);
  CHECK_THROWS_AS(DyadicRadii::from_json(mutate([](ojson& j) {
                    j["radii"][1]["r"] = 0.01;  // below its predecessor
                  })),
                  ValidationError);
  CHECK_THROWS_AS(DyadicRadii::from_json(mutate([](ojson& j) {
                    j["radii"][0]["r"] = 0.3;  // exceeds q = 1/4
                  })),
                  ValidationError);
  CHECK_THROWS_AS(DyadicRadii::from_json(mutate([](ojson& j) {
                    j["radii"][3]["r"] = 0.9;  // the top radius must be 1
                  })),
                  ValidationError);
}

TEST_CASE("correction constructor validates the family shape") {
  DyadicRadii bad;
  bad.depth = 1;
  bad.r = {0.0, 0.5, 0.75};
  CHECK_THROWS_AS(CorrectionFn{bad}, ValidationError);  // top is not 1
  bad.r = {0.1, 0.5, 1.0};
  CHECK_THROWS_AS(CorrectionFn{bad}, ValidationError);  // sentinel is not 0
  bad.r = {0.0, 0.5, 0.5, 1.0};
  bad.depth = 2;
  CHECK_THROWS_AS(CorrectionFn{bad}, ValidationError);  // not strictly increasing
}
