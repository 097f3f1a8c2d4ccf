#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modlab/errors.hpp"
#include "modlab/families.hpp"
#include "modlab/parallel.hpp"

using namespace modlab;

namespace {

std::vector<double> random_rho(SplitMix64& rng, std::size_t n) {
  std::vector<double> r(n);
  for (double& x : r) x = rng.uniform();
  return r;
}

double brute_min(const std::vector<DiscreteCurve>& curves, const std::vector<double>& rho) {
  double best = INFINITY;
  for (const auto& c : curves) best = std::min(best, rho_length(c, rho));
  return best;
}

int cell_at(const GraphApproximation& g, int x, int y) { return *g.find({x, y, 0}); }

}  // namespace

TEST_CASE("resolve left and right sides") {
  auto g = build_square(1);
  auto f = resolve(CurveFamilySpec::left_right(), g);
  CHECK_FALSE(f.empty);
  CHECK(f.sources.size() == 3);
  CHECK(f.targets.size() == 3);
  for (int v : f.sources) CHECK(g.cell(v).index[0] == 0);
  for (int v : f.targets) CHECK(g.cell(v).index[0] == 2);
}

TEST_CASE("vacuous diameter threshold gives the empty family") {
  for (auto g : {build_square(2), build_carpet(2), build_sponge(1)}) {
    CHECK(resolve(CurveFamilySpec::diam_at_least(2.0), g).empty);
  }
}

TEST_CASE("tube along the bottom edge stays in the bottom rows") {
  auto g = build_carpet(2);
  auto f = resolve(CurveFamilySpec::tube({{0, 0, 0}, {1, 0, 0}}, 1.0 / 3), g);
  CHECK_FALSE(f.empty);
  CHECK(f.spacing == doctest::Approx(1.0 / 6));
  for (const auto& set : f.waypoint_sets) {
    int count = 0;
    for (std::size_t v = 0; v < set.size(); ++v) {
      if (!set[v]) continue;
      ++count;
      CHECK(g.cell(static_cast<int>(v)).index[1] <= 1);
    }
    CHECK(count > 0);
  }
}

TEST_CASE("oracle examples on the 3x3 grid") {
  auto g = build_square(1);
  auto f = resolve(CurveFamilySpec::left_right(), g);
  auto zero = min_length_curve(g, Density::constant(9, 0.0), f);
  CHECK(zero.length == 0.0);
  auto one = min_length_curve(g, Density::constant(9, 1.0), f);
  CHECK(one.length == doctest::Approx(3.0));
  CHECK(one.curve.cells.size() == 3);
  std::vector<double> mid(9, 0.0);
  for (int y = 0; y < 3; ++y) mid[static_cast<std::size_t>(cell_at(g, 1, y))] = 1.0;
  auto r = min_length_curve(g, Density(mid), f);
  CHECK(r.length == doctest::Approx(1.0));
  CHECK(is_member(r.curve, g, f));
}

TEST_CASE("partial diameter scans stop early and report only short curves") {
  auto g = build_carpet(3);
  auto f = resolve(CurveFamilySpec::diam_at_least(0.5), g);
  std::vector<double> rho(g.size(), 0.01);
  OracleOptions full;
  full.max_curves = 1000;
  full.exact_min = false;
  auto all = separate(g, rho, f, full);
  CHECK(all.complete);
  CHECK(all.scanned == g.size());
  OracleOptions part = full;
  part.stop_after = 3;
  part.start = 17;
  auto some = separate(g, rho, f, part);
  CHECK_FALSE(some.complete);
  CHECK(some.scanned < g.size());
  CHECK(some.curves.size() >= 3);
  CHECK(some.min_length >= all.min_length);
  for (const auto& [len, c] : some.curves) {
    CHECK(len < 1.0);
    CHECK(is_member(c, g, f));
  }
  // Exact minimum queries always scan every source.
  part.exact_min = true;
  auto exact = separate(g, rho, f, part);
  CHECK(exact.complete);
  CHECK(exact.min_length == all.min_length);
}

TEST_CASE("oracle on the empty family") {
  auto g = build_square(1);
  auto f = resolve(CurveFamilySpec::diam_at_least(3.0), g);
  CHECK(min_length_curve(g, Density::constant(9, 1.0), f).empty);
}

TEST_CASE("enumeration counts under corner adjacency") {
  auto g = build_square(1);
  auto f = resolve(CurveFamilySpec::left_right(), g);
  // Left cell, middle cell, right cell with both steps adjacent: 4 + 9 + 4.
  CHECK(enumerate_curves(g, f, 3).size() == 17);
  CHECK(enumerate_curves(g, f, 2).empty());
  CHECK(enumerate_curves(g, f, 0).empty());

  auto c = build_carpet(1);
  auto corner = resolve(CurveFamilySpec::connect(CellSet::from_ids({cell_at(c, 0, 0)}),
                                                 CellSet::from_ids({cell_at(c, 2, 2)})),
                        c);
  CHECK(enumerate_curves(c, corner, 3).empty());
  CHECK(enumerate_curves(c, corner, 4).size() == 2);
  CHECK_THROWS_AS(enumerate_curves(build_square(3), resolve(CurveFamilySpec::left_right(), build_square(3)), 3),
                  SizeError);
}

TEST_CASE("oracle optimality against enumeration") {
  SplitMix64 rng(11);
  struct Inst {
    GraphApproximation g;
    CurveFamilySpec spec;
  };
  std::vector<Inst> insts;
  insts.push_back({build_square(1), CurveFamilySpec::left_right()});
  insts.push_back({build_carpet(1), CurveFamilySpec::left_right()});
  insts.push_back({build_carpet(1), CurveFamilySpec::diam_at_least(0.6)});
  insts.push_back({build_square(1), CurveFamilySpec::diam_at_least(0.7)});
  insts.push_back({build_carpet(1), CurveFamilySpec::tube({{0.1, 0.1, 0}, {0.9, 0.1, 0}, {0.9, 0.9, 0}}, 0.45)});
  insts.push_back({build_square(1), CurveFamilySpec::cross_rect(Box{{0, 0, 0}, {1, 2.0 / 3, 1}}, CrossAxis::vertical)});
  for (const auto& inst : insts) {
    auto f = resolve(inst.spec, inst.g);
    REQUIRE_FALSE(f.empty);
    auto curves = enumerate_curves(inst.g, f, static_cast<int>(inst.g.size()));
    REQUIRE_FALSE(curves.empty());
    for (const auto& c : curves) CHECK(is_member(c, inst.g, f));
    for (int t = 0; t < 100; ++t) {
      auto rho = random_rho(rng, inst.g.size());
      auto r = min_length_curve(inst.g, Density(rho), f);
      if (f.kind == FamilyKind::tube) {
        // Walk cost may count a cell twice, so it only bounds the set minimum from above.
        CHECK(r.length >= brute_min(curves, rho) - 1e-12);
        continue;
      }
      CHECK(r.length == doctest::Approx(brute_min(curves, rho)).epsilon(1e-12));
      CHECK(is_member(r.curve, inst.g, f));
    }
  }
}

TEST_CASE("through-cell oracle is exact on small instances") {
  SplitMix64 rng(5);
  auto g = build_square(1);
  auto f = resolve(CurveFamilySpec::left_right(), g);
  // Curves through v may backtrack, so the brute force runs over connected cell
  // sets containing v that meet both sides.
  auto set_min = [&](int v, const std::vector<double>& rho) {
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 1; mask < (1u << 9); ++mask) {
      if (!(mask >> v & 1u)) continue;
      bool src = false, tgt = false;
      for (int u : f.sources) src = src || (mask >> u & 1u);
      for (int u : f.targets) tgt = tgt || (mask >> u & 1u);
      if (!src || !tgt) continue;
      std::vector<char> in(9, 0);
      for (int u = 0; u < 9; ++u) in[static_cast<std::size_t>(u)] = (mask >> u & 1u) ? 1 : 0;
      if (!is_connected(g, in)) continue;
      double len = 0.0;
      for (int u = 0; u < 9; ++u) len += in[static_cast<std::size_t>(u)] ? rho[static_cast<std::size_t>(u)] : 0.0;
      best = std::min(best, len);
    }
    return best;
  };
  for (int v = 0; v < 9; ++v) {
    auto fv = through_cell(f, v);
    for (int t = 0; t < 30; ++t) {
      auto rho = random_rho(rng, 9);
      auto r = min_length_curve(g, Density(rho), fv);
      CHECK(r.length == doctest::Approx(set_min(v, rho)).epsilon(1e-12));
      CHECK(is_member(r.curve, g, fv));
      CHECK(std::find(r.curve.cells.begin(), r.curve.cells.end(), v) != r.curve.cells.end());
    }
  }
}

TEST_CASE("region restriction never decreases the oracle length") {
  SplitMix64 rng(3);
  auto g = build_carpet(2);
  auto full = resolve(CurveFamilySpec::left_right(), g);
  auto part = resolve(CurveFamilySpec::connect(CellSet::side(0, 0.0), CellSet::side(0, 1.0),
                                               CellSet::from_box(Box{{0, 0, 0}, {1, 0.5, 1}})),
                      g);
  for (int t = 0; t < 50; ++t) {
    auto rho = random_rho(rng, g.size());
    CHECK(min_length_curve(g, Density(rho), part).length >= min_length_curve(g, Density(rho), full).length - 1e-12);
  }
}

TEST_CASE("diameter family is dominated by connecting curves") {
  SplitMix64 rng(4);
  auto g = build_carpet(2);
  auto conn = resolve(CurveFamilySpec::left_right(), g);
  auto diam = resolve(CurveFamilySpec::diam_at_least(0.5), g);
  for (int t = 0; t < 50; ++t) {
    auto rho = random_rho(rng, g.size());
    CHECK(min_length_curve(g, Density(rho), diam).length <= min_length_curve(g, Density(rho), conn).length + 1e-12);
  }
}

TEST_CASE("tube oracle curves stay in the tube and visit waypoints in order") {
  SplitMix64 rng(6);
  auto g = build_carpet(2);
  auto f = resolve(CurveFamilySpec::tube({{0.05, 0.1, 0}, {0.5, 0.1, 0}, {0.9, 0.5, 0}}, 0.3), g);
  REQUIRE_FALSE(f.empty);
  for (int t = 0; t < 30; ++t) {
    auto rho = random_rho(rng, g.size());
    auto r = min_length_curve(g, Density(rho), f);
    REQUIRE_FALSE(r.empty);
    CHECK(is_member(r.curve, g, f));
    for (int v : r.curve.cells) CHECK(f.in_region(v));
  }
}

TEST_CASE("tube spacing must be below epsilon") {
  auto g = build_carpet(1);
  TubeSpec t{{{0.1, 0.1, 0}, {0.9, 0.1, 0}}, 0.3, 0.4};
  CHECK_THROWS_AS(resolve(CurveFamilySpec{t}, g), SpecError);
}

TEST_CASE("relative distance") {
  auto g = build_square(1);
  CellSet left = CellSet::side(0, 0.0), right = CellSet::side(0, 1.0);
  // Strips of width 1/3 and height 1 at gap 1/3: diameter sqrt(10)/3.
  CHECK(relative_distance(left, right, g) == doctest::Approx(1.0 / std::sqrt(10.0)));
  CellSet mid = CellSet::from_box(Box{{1.0 / 3, 0, 0}, {2.0 / 3, 1, 1}}, CellSet::Mode::within);
  CHECK(relative_distance(left, mid, g) == doctest::Approx(0.0));
  CHECK_THROWS_AS(relative_distance(CellSet::from_ids({0}), right, g), DegenerateError);

  auto g3 = build_square(3);
  const double s = g3.scale();
  // Two 3x3-cell blocks (diameter sqrt(2)*3s) at distance 2*sqrt(2)*3s.
  std::vector<int> a, b;
  for (int x = 0; x < 3; ++x) {
    for (int y = 0; y < 3; ++y) {
      a.push_back(*g3.find({x, y, 0}));
      b.push_back(*g3.find({x + 9, y + 9, 0}));
    }
  }
  CHECK(cell_set_diameter(a, g3) == doctest::Approx(std::sqrt(2.0) * 3 * s));
  CHECK(relative_distance(a, b, g3) == doctest::Approx(2.0));
}

TEST_CASE("waypoint distance of a row to its own polyline") {
  auto g = build_square(2);
  DiscreteCurve row;
  for (int x = 0; x < 9; ++x) row.cells.push_back(*g.find({x, 4, 0}));
  std::vector<Point> eta{{1.0 / 18, 0.5, 0}, {17.0 / 18, 0.5, 0}};
  CHECK(ordered_waypoint_distance(row, g, eta, 1.0 / 36) <= 1.0 / 18 + 1e-12);
  std::vector<Point> back{{17.0 / 18, 0.5, 0}, {1.0 / 18, 0.5, 0}};
  CHECK(ordered_waypoint_distance(row, g, back, 1.0 / 36) > 0.8);
}
