#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/push_relabel_max_flow.hpp>
#include <cmath>

#include "modlab/acceptance.hpp"
#include "modlab/errors.hpp"
#include "modlab/parallel.hpp"
#include "modlab/solver.hpp"
#include "modlab/symmetry.hpp"

using namespace modlab;

namespace {

// Minimum vertex cut between the family's sources and targets by max-flow on the
// split graph; equals Mod_1 of the connecting family.
double min_vertex_cut(const GraphApproximation& g, const ResolvedFamily& fam) {
  using Traits = boost::adjacency_list_traits<boost::vecS, boost::vecS, boost::directedS>;
  using Graph = boost::adjacency_list<
      boost::vecS, boost::vecS, boost::directedS, boost::no_property,
      boost::property<boost::edge_capacity_t, double,
                      boost::property<boost::edge_residual_capacity_t, double,
                                      boost::property<boost::edge_reverse_t, Traits::edge_descriptor>>>>;
  const int n = static_cast<int>(g.size());
  Graph net(static_cast<std::size_t>(2 * n + 2));
  auto cap = boost::get(boost::edge_capacity, net);
  auto rev = boost::get(boost::edge_reverse, net);
  auto add = [&](int u, int v, double c) {
    auto e = boost::add_edge(static_cast<std::size_t>(u), static_cast<std::size_t>(v), net).first;
    auto r = boost::add_edge(static_cast<std::size_t>(v), static_cast<std::size_t>(u), net).first;
    cap[e] = c;
    cap[r] = 0.0;
    rev[e] = r;
    rev[r] = e;
  };
  const double big = 1e9;
  const int s = 2 * n, t = 2 * n + 1;
  for (int v = 0; v < n; ++v) {
    if (!fam.in_region(v)) continue;
    add(2 * v, 2 * v + 1, 1.0);
    for (int w : g.neighbors(v)) {
      if (fam.in_region(w)) add(2 * v + 1, 2 * w, big);
    }
  }
  for (int v : fam.sources) add(s, 2 * v, big);
  for (int v : fam.targets) add(2 * v + 1, t, big);
  return boost::push_relabel_max_flow(net, static_cast<std::size_t>(s), static_cast<std::size_t>(t));
}

bool admissible(const GraphApproximation& g, const ResolvedFamily& f, const Density& rho, double slack) {
  auto r = min_length_curve(g, rho, f);
  return r.empty || r.length >= slack;
}

}  // namespace

TEST_CASE("mass") {
  CHECK(mass(Density::constant(7, 1.0), 2.0) == 7.0);
  CHECK(mass(Density::constant(7, 0.0), 3.0) == 0.0);
  CHECK(mass(Density::constant(9, 1.0 / 3), 2.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(mass(Density::constant(3, 1.0), 0.5), ExponentError);
}

TEST_CASE("argument checks") {
  auto g = build_square(1);
  CHECK_THROWS_AS(modulus(g, CurveFamilySpec::left_right(), 0.9, 1e-6), ExponentError);
  CHECK_THROWS_AS(modulus(g, CurveFamilySpec::left_right(), 4.5, 1e-6), ExponentError);
  CHECK_THROWS_AS(modulus(g, CurveFamilySpec::left_right(), 2.0, 1.0), BoundsError);
  CHECK_THROWS_AS(modulus(g, CurveFamilySpec::left_right(), 2.0, 1e-12), BoundsError);
}

TEST_CASE("single-cell family has modulus one") {
  auto g = build_square(1);
  auto spec = CurveFamilySpec::connect(CellSet::from_ids({4}), CellSet::from_ids({4}));
  for (double p : {1.0, 1.5, 2.0, 3.0, 4.0}) {
    auto sol = modulus(g, spec, p, 1e-6);
    CHECK(sol.upper == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sol.lower == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sol.density[4] == doctest::Approx(1.0).epsilon(1e-6));
    for (int v = 0; v < 9; ++v) {
      if (v != 4) CHECK(sol.density[static_cast<std::size_t>(v)] == doctest::Approx(0.0));
    }
  }
}

TEST_CASE("grid modulus identity") {
  for (int k = 1; k <= 3; ++k) {
    auto sol = modulus(build_square(k), CurveFamilySpec::left_right(), 2.0, 1e-7);
    CHECK(sol.status == SolveStatus::converged);
    CHECK(sol.upper == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(sol.lower == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("reference projected gradient agrees on the 3x3 grid") {
  auto g = build_square(1);
  auto f = resolve(CurveFamilySpec::left_right(), g);
  auto ref = reference_modulus(g, f, 2.0, 1e-9);
  REQUIRE(ref.ok);
  CHECK(ref.lower == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(ref.upper == doctest::Approx(1.0).epsilon(1e-8));
  for (double p : {1.5, 3.0}) {
    auto r = reference_modulus(g, f, p, 1e-9);
    auto sol = modulus(g, f, p, 1e-7);
    REQUIRE(r.ok);
    CHECK(sol.lower <= r.upper * (1 + 1e-7));
    CHECK(sol.upper >= r.lower * (1 - 1e-7));
  }
}

TEST_CASE("Mod_1 equals the minimum vertex cut") {
  for (int k = 1; k <= 3; ++k) {
    auto g = build_square(k);
    auto f = resolve(CurveFamilySpec::left_right(), g);
    double cut = min_vertex_cut(g, f);
    CHECK(cut == doctest::Approx(std::pow(3.0, k)));
    auto sol = modulus(g, f, 1.0, 1e-4);
    CHECK(sol.upper == doctest::Approx(cut).epsilon(0.01));
    CHECK(sol.lower == doctest::Approx(cut).epsilon(0.01));
  }
  for (int k = 1; k <= 2; ++k) {
    auto g = build_carpet(k);
    auto f = resolve(CurveFamilySpec::left_right(), g);
    double cut = min_vertex_cut(g, f);
    auto sol = modulus(g, f, 1.0, 1e-4);
    CHECK(sol.lower <= cut * (1 + 1e-6));
    CHECK(sol.upper >= cut * (1 - 1e-6));
    CHECK(sol.upper == doctest::Approx(cut).epsilon(0.01));
  }
}

TEST_CASE("Mod_1 cut certificates") {
  std::vector<std::pair<GraphApproximation, CurveFamilySpec>> cases;
  cases.emplace_back(build_carpet(3), CurveFamilySpec::left_right());
  cases.emplace_back(build_square(3), CurveFamilySpec::connect(CellSet::from_box(Box{{0.1, 0.1, 0}, {0.3, 0.4, 1}}),
                                                               CellSet::from_box(Box{{0.6, 0.5, 0}, {0.9, 0.7, 1}})));
  cases.emplace_back(build_carpet(2), CurveFamilySpec::connect(CellSet::side(0, 0.0), CellSet::side(0, 1.0),
                                                               CellSet::from_box(Box{{0, 0, 0}, {1, 0.4, 1}})));
  cases.emplace_back(build_sponge(2), CurveFamilySpec::left_right());
  for (auto& [g, spec] : cases) {
    auto f = resolve(spec, g);
    auto sol = modulus(g, f, 1.0, 1e-6);
    CHECK(sol.status == SolveStatus::converged);
    CHECK(sol.upper == doctest::Approx(min_vertex_cut(g, f)));
    CHECK(sol.lower == sol.upper);
    CHECK(admissible(g, f, sol.density, 1.0));
    // The reported curves are vertex-disjoint members, so they certify the lower bound.
    std::vector<int> hits(g.size(), 0);
    for (const auto& c : sol.active_curves) {
      CHECK(is_member(c, g, f));
      std::vector<int> cells = c.cells;
      std::sort(cells.begin(), cells.end());
      cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
      for (int v : cells) ++hits[static_cast<std::size_t>(v)];
    }
    CHECK(*std::max_element(hits.begin(), hits.end()) <= 1);
    CHECK(static_cast<double>(sol.active_curves.size()) == sol.lower);
  }
}

TEST_CASE("empty family") {
  auto sol = modulus(build_square(2), CurveFamilySpec::diam_at_least(2.0), 2.0, 1e-6);
  CHECK(sol.status == SolveStatus::empty_family);
  CHECK(sol.upper == 0.0);
  CHECK(sol.lower == 0.0);
}

TEST_CASE("iteration cap keeps valid bounds") {
  SolverOptions o;
  o.max_oracle_calls = 2;
  o.cuts_per_round = 1;
  o.use_symmetry = false;
  auto g = build_carpet(3);
  auto f = resolve(CurveFamilySpec::diam_at_least(0.5), g);
  auto capped = modulus(g, f, 2.0, 1e-6, o);
  CHECK(capped.status == SolveStatus::iteration_cap);
  auto full = modulus(g, f, 2.0, 1e-4);
  CHECK(capped.lower <= full.upper * (1 + 1e-9));
  CHECK(capped.upper >= full.lower * (1 - 1e-9));
  CHECK(admissible(g, f, capped.density, 1 - 1e-9));
}

TEST_CASE("converged densities are admissible and brackets are tight") {
  std::vector<std::pair<GraphApproximation, CurveFamilySpec>> cases;
  cases.emplace_back(build_carpet(2), CurveFamilySpec::left_right());
  cases.emplace_back(build_carpet(2), CurveFamilySpec::diam_at_least(0.5));
  cases.emplace_back(build_square(2), CurveFamilySpec::cross_rect(Box{{0.1, 0.2, 0}, {0.7, 0.9, 1}}, CrossAxis::horizontal));
  cases.emplace_back(build_sponge(1), CurveFamilySpec::diam_at_least(0.9));
  cases.emplace_back(build_carpet(2), CurveFamilySpec::tube({{0.1, 0.1, 0}, {0.9, 0.5, 0}}, 0.25));
  for (auto& [g, spec] : cases) {
    auto f = resolve(spec, g);
    for (double p : {1.0, 1.5, 2.0, 3.5}) {
      const double tol = 1e-5;
      auto sol = modulus(g, f, p, tol);
      CHECK(sol.status == SolveStatus::converged);
      CHECK(sol.lower <= sol.upper);
      CHECK(sol.upper <= sol.lower * (1 + tol));
      CHECK(admissible(g, f, sol.density, 1 - 1e-12));
      CHECK(mass(sol.density, p) == doctest::Approx(sol.upper).epsilon(1e-12));
      for (const auto& c : sol.active_curves) CHECK(is_member(c, g, f));
    }
  }
}

TEST_CASE("monotone in p") {
  for (auto g : {build_square(2), build_carpet(2)}) {
    auto f = resolve(CurveFamilySpec::diam_at_least(0.6), g);
    double prev_upper = INFINITY;
    for (double p : {1.0, 1.25, 1.5, 2.0, 3.0, 4.0}) {
      auto sol = modulus(g, f, p, 1e-5);
      CHECK(sol.lower <= prev_upper);
      prev_upper = sol.upper;
    }
  }
}

TEST_CASE("subadditive over target splits") {
  SplitMix64 rng(21);
  auto g = build_carpet(2);
  auto f = resolve(CurveFamilySpec::left_right(), g);
  for (int t = 0; t < 5; ++t) {
    std::vector<int> b1, b2;
    for (int v : f.targets) (rng.below(2) ? b1 : b2).push_back(v);
    if (b1.empty() || b2.empty()) continue;
    auto whole = modulus(g, f, 2.0, 1e-5);
    auto m1 = modulus(g, CurveFamilySpec::connect(CellSet::side(0, 0.0), CellSet::from_ids(b1)), 2.0, 1e-5);
    auto m2 = modulus(g, CurveFamilySpec::connect(CellSet::side(0, 0.0), CellSet::from_ids(b2)), 2.0, 1e-5);
    CHECK(whole.lower <= m1.upper + m2.upper);
  }
}

TEST_CASE("family inclusion") {
  auto g = build_carpet(3);
  auto big = modulus(g, CurveFamilySpec::left_right(), 2.0, 1e-5);
  auto small = modulus(g,
                       CurveFamilySpec::connect(CellSet::side(0, 0.0), CellSet::side(0, 1.0),
                                                CellSet::from_box(Box{{0, 0, 0}, {1, 0.4, 1}})),
                       2.0, 1e-5);
  CHECK(small.lower <= big.upper);
  CHECK(small.upper < big.lower);
}

TEST_CASE("worker count does not change results") {
  auto g = build_carpet(3);
  auto f = resolve(CurveFamilySpec::diam_at_least(0.5), g);
  SolverOptions one, three;
  three.workers = 3;
  auto a = modulus(g, f, 2.0, 1e-4, one);
  auto b = modulus(g, f, 2.0, 1e-4, three);
  CHECK(a.upper == b.upper);
  CHECK(a.lower == b.lower);
  CHECK(a.density.values == b.density.values);
}

TEST_CASE("worker count does not change partially priced results") {
  auto g = build_carpet(3);
  auto f = resolve(CurveFamilySpec::diam_at_least(0.5), g);
  for (double p : {1.0, 2.0}) {
    SolverOptions one, three;
    three.workers = 3;
    auto a = modulus(g, f, p, 1e-3, one);
    auto b = modulus(g, f, p, 1e-3, three);
    CHECK(a.upper == b.upper);
    CHECK(a.lower == b.lower);
    CHECK(a.iterations == b.iterations);
  }
}

TEST_CASE("pricing and stabilization options keep the certified bracket") {
  auto g = build_carpet(3);
  auto f = resolve(CurveFamilySpec::diam_at_least(0.5), g);
  for (double p : {1.0, 1.5, 2.0}) {
    std::vector<ModulusSolution> sols;
    for (int variant = 0; variant < 4; ++variant) {
      SolverOptions o;
      o.partial_pricing = variant & 1 ? 0 : 1;
      o.stabilization = variant & 2 ? 0.0 : 0.5;
      sols.push_back(modulus(g, f, p, 1e-3, o));
      CHECK(sols.back().status == SolveStatus::converged);
      CHECK(min_length_curve(g, sols.back().density, f).length >= 1.0 - 1e-9);
    }
    for (const auto& a : sols) {
      for (const auto& b : sols) CHECK(a.lower <= b.upper * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("symmetry-reduced covering program at p = 1") {
  // Orbit variables must give the same bracket as the plain program.
  auto g = build_carpet(2);
  SolverOptions plain;
  plain.use_symmetry = false;
  auto a = modulus(g, CurveFamilySpec::diam_at_least(0.5), 1.0, 1e-4);
  auto b = modulus(g, CurveFamilySpec::diam_at_least(0.5), 1.0, 1e-4, plain);
  CHECK(a.status == SolveStatus::converged);
  CHECK(b.status == SolveStatus::converged);
  CHECK(a.lower <= b.upper * (1.0 + 1e-12));
  CHECK(b.lower <= a.upper * (1.0 + 1e-12));
  CHECK(min_length_curve(g, a.density, resolve(CurveFamilySpec::diam_at_least(0.5), g)).length >= 1.0 - 1e-9);
  // Each cell orbit carries one density value.
  for (const auto& perm : cell_automorphisms(g)) {
    for (std::size_t v = 0; v < g.size(); ++v) {
      CHECK(a.density[static_cast<std::size_t>(perm[v])] == a.density[v]);
    }
  }
}

TEST_CASE("symmetry does not change the certified bracket") {
  auto g = build_carpet(2);
  SolverOptions plain;
  plain.use_symmetry = false;
  auto a = modulus(g, CurveFamilySpec::diam_at_least(0.5), 2.0, 1e-6);
  auto b = modulus(g, CurveFamilySpec::diam_at_least(0.5), 2.0, 1e-6, plain);
  CHECK(a.lower <= b.upper);
  CHECK(b.lower <= a.upper);
}

TEST_CASE("pointwise bound") {
  auto g = build_square(1);
  auto sol = modulus(g, CurveFamilySpec::left_right(), 2.0, 1e-6);
  CHECK(sol.density[4] == doctest::Approx(1.0 / 3).epsilon(1e-4));
  std::vector<int> all{0, 1, 2, 3, 4, 5, 6, 7, 8};
  auto rep = pointwise_bound_check(sol, g, CurveFamilySpec::left_right(), all);
  CHECK(rep.passed);
  CHECK(std::sqrt(rep.rows[4].mod_fv) >= 1.0 / 3);

  auto spec = CurveFamilySpec::connect(CellSet::side(0, 0.0), CellSet::side(0, 1.0),
                                       CellSet::from_box(Box{{0, 0, 0}, {1, 0.3, 1}}));
  auto bottom = modulus(g, spec, 2.0, 1e-6);
  auto rep2 = pointwise_bound_check(bottom, g, spec, std::vector<int>{*g.find({1, 2, 0})});
  CHECK(rep2.rows[0].mod_fv == 0.0);
  CHECK(rep2.rows[0].density <= 1e-5);

  auto single = CurveFamilySpec::connect(CellSet::from_ids({4}), CellSet::from_ids({4}));
  auto one = modulus(g, single, 2.0, 1e-6);
  auto rep3 = pointwise_bound_check(one, g, single, std::vector<int>{4});
  CHECK(rep3.rows[0].mod_fv == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep3.passed);

  auto loose = modulus(g, CurveFamilySpec::left_right(), 2.0, 1e-3);
  CHECK_THROWS_AS(pointwise_bound_check(loose, g, CurveFamilySpec::left_right(), all), PreconditionError);
}

TEST_CASE("pointwise bound on the carpet") {
  auto g = build_carpet(2);
  auto sol = modulus(g, CurveFamilySpec::left_right(), 2.0, 1e-5);
  std::vector<int> sample{0, 5, 17, 33, 63};
  CHECK(pointwise_bound_check(sol, g, CurveFamilySpec::left_right(), sample).passed);
}

TEST_CASE("warm start matches cold start") {
  auto coarse = build_carpet(2), fine = build_carpet(3);
  auto f = resolve(CurveFamilySpec::diam_at_least(0.5), fine);
  auto c = modulus(coarse, CurveFamilySpec::diam_at_least(0.5), 2.0, 1e-5);
  SolverOptions warm;
  warm.warm_start = snap_curves(c.active_curves, coarse, fine, f);
  CHECK_FALSE(warm.warm_start.empty());
  for (const auto& curve : warm.warm_start) CHECK(is_member(curve, fine, f));
  auto a = modulus(fine, f, 2.0, 1e-5);
  auto b = modulus(fine, f, 2.0, 1e-5, warm);
  CHECK(a.lower <= b.upper);
  CHECK(b.lower <= a.upper);
}

TEST_CASE("brute-force equivalence on small sub-grids") {
  SplitMix64 rng(99);
  for (int t = 0; t < 4; ++t) {
    std::vector<Cell> cells;
    const double s = 1.0 / 9;
    int w = 3 + static_cast<int>(rng.below(2)), h = 2 + static_cast<int>(rng.below(2));
    std::vector<int> a, b;
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) {
        Cell c;
        c.center = {(x + 0.5) * s, (y + 0.5) * s, 0};
        c.half_width = s / 2;
        c.index = {x, y, 0};
        if (x == 0) a.push_back(static_cast<int>(cells.size()));
        if (x == w - 1) b.push_back(static_cast<int>(cells.size()));
        cells.push_back(c);
      }
    }
    auto g = from_cells(SpaceTag::square, 2, s, 2, cells);
    auto f = resolve(CurveFamilySpec::connect(CellSet::from_ids(a), CellSet::from_ids(b)), g);
    double p = 1.5 + 0.5 * static_cast<double>(rng.below(3));
    auto ref = reference_modulus(g, f, p, 1e-9);
    REQUIRE(ref.ok);
    auto sol = modulus(g, f, p, 1e-7);
    double mid = 0.5 * (ref.lower + ref.upper);
    CHECK(sol.lower <= mid * (1 + 1e-6));
    CHECK(sol.upper >= mid * (1 - 1e-6));
  }
}
