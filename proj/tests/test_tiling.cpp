#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "modlab/errors.hpp"
#include "modlab/tiling.hpp"

using namespace modlab;

namespace {

std::set<std::pair<int, int>> edge_set(const GraphApproximation& g) {
  auto e = g.edges();
  return {e.begin(), e.end()};
}

std::set<std::pair<int, int>> brute_set(const GraphApproximation& g) {
  auto e = brute_force_edges(g.cells(), g.dim(), g.scale());
  return {e.begin(), e.end()};
}

}  // namespace

TEST_CASE("square counts") {
  auto g0 = build_square(0);
  CHECK(g0.size() == 1);
  CHECK(g0.edge_count() == 0);
  auto g1 = build_square(1);
  CHECK(g1.size() == 9);
  CHECK(g1.edge_count() == 20);
  CHECK(build_square(2).size() == 81);
  CHECK(g1.scale() == doctest::Approx(1.0 / 3));
}

TEST_CASE("square k=1 edges split into side and corner contacts") {
  auto g = build_square(1);
  int side = 0, corner = 0;
  for (auto [a, b] : g.edges()) {
    const auto& x = g.cell(a).index;
    const auto& y = g.cell(b).index;
    int d = std::abs(x[0] - y[0]) + std::abs(x[1] - y[1]);
    (d == 1 ? side : corner)++;
  }
  CHECK(side == 12);
  CHECK(corner == 8);
}

TEST_CASE("carpet counts") {
  CHECK(build_carpet(0).size() == 1);
  auto g1 = build_carpet(1);
  CHECK(g1.size() == 8);
  CHECK(g1.edge_count() == 12);
  CHECK(build_carpet(3).size() == 512);
  for (const Cell& c : build_carpet(2).cells()) {
    int m = c.index[0], n = c.index[1];
    bool bad = false;
    for (int d = 0; d < 2; ++d, m /= 3, n /= 3) bad = bad || (m % 3 == 1 && n % 3 == 1);
    CHECK_FALSE(bad);
  }
}

TEST_CASE("sponge counts") {
  CHECK(build_sponge(0).size() == 1);
  CHECK(build_sponge(1).size() == 20);
  CHECK(build_sponge(2).size() == 400);
}

TEST_CASE("level caps raise bounds errors") {
  CHECK_THROWS_AS(build_square(9), BoundsError);
  CHECK_THROWS_AS(build_carpet(8), BoundsError);
  CHECK_THROWS_AS(build_sponge(5), BoundsError);
  CHECK_THROWS_AS(build_square(-1), BoundsError);
  LevelCaps caps;
  caps.sponge = 1;
  CHECK_THROWS_AS(build_sponge(2, caps), BoundsError);
}

TEST_CASE("adjacency matches brute force intersection") {
  for (int k = 0; k <= 3; ++k) {
    CHECK(edge_set(build_square(k)) == brute_set(build_square(k)));
    CHECK(edge_set(build_carpet(k)) == brute_set(build_carpet(k)));
  }
  for (int k = 0; k <= 2; ++k) CHECK(edge_set(build_sponge(k)) == brute_set(build_sponge(k)));
  auto inf = build_inflated_cover(build_carpet(2), 1.7);
  CHECK(edge_set(inf) == brute_set(inf));
}

TEST_CASE("adjacency is symmetric and irreflexive") {
  auto g = build_carpet(3);
  for (const Cell& c : g.cells()) {
    for (int w : g.neighbors(c.id)) {
      CHECK(w != c.id);
      CHECK(g.adjacent(w, c.id));
    }
  }
}

TEST_CASE("built-in spaces validate with kappa 2 and are connected") {
  for (int k = 0; k <= 4; ++k) {
    for (auto g : {build_square(std::min(k, 3)), build_carpet(k)}) {
      auto r = validate_approximation(g);
      CHECK(r.passed);
      CHECK(g.kappa() == doctest::Approx(2.0));
      CHECK(is_connected(g));
    }
  }
  for (int k = 0; k <= 2; ++k) {
    auto g = build_sponge(k);
    CHECK(validate_approximation(g).passed);
    CHECK(g.kappa() == doctest::Approx(2.0));
    CHECK(is_connected(g));
  }
}

TEST_CASE("cell geometry invariants") {
  auto g = build_carpet(2);
  for (const Cell& c : g.cells()) {
    CHECK(c.half_width == doctest::Approx(g.scale() / 2));
    for (int d = 0; d < 2; ++d) {
      CHECK(c.center[d] >= c.half_width - 1e-15);
      CHECK(c.center[d] <= 1 - c.half_width + 1e-15);
    }
  }
}

TEST_CASE("inflated cover") {
  auto base = build_carpet(1);
  auto inf = build_inflated_cover(base, 2.0);
  CHECK(inf.size() == 8);
  CHECK(inf.edge_count() == 28);  // complete graph on the ring
  CHECK_THROWS_AS(build_inflated_cover(base, 1.0), BoundsError);
  CHECK_THROWS_AS(build_inflated_cover(base, 3.5), BoundsError);

  auto near = build_inflated_cover(build_square(2), 1.0 + 1e-9);
  CHECK(edge_set(near) == edge_set(build_square(2)));

  auto sq = build_square(1);
  auto sq15 = build_inflated_cover(sq, 1.5);
  CHECK(edge_set(sq15) == edge_set(sq));
  auto left = sq.find({0, 1, 0}), right = sq.find({2, 1, 0});
  REQUIRE(left);
  REQUIRE(right);
  CHECK_FALSE(sq15.adjacent(*left, *right));
  CHECK(sq15.space_tag() == SpaceTag::inflated_cover);
  CHECK(sq15.base_tag() == SpaceTag::square);
}

TEST_CASE("duplicate cells fail validation") {
  auto cells = build_square(1).cells();
  cells.push_back(cells[0]);
  auto g = from_cells(SpaceTag::square, 1, 1.0 / 3, 2, cells, 2.0);
  auto r = validate_approximation(g);
  CHECK_FALSE(r.passed);
  CHECK_FALSE(r.violations.empty());
}

TEST_CASE("carpet coarsening surjects") {
  for (int k = 0; k <= 3; ++k) {
    auto fine = build_carpet(k + 1);
    auto coarse = build_carpet(k);
    std::set<int> hit;
    for (const Cell& c : fine.cells()) {
      auto id = coarse.find({c.index[0] / 3, c.index[1] / 3, 0});
      REQUIRE(id);
      hit.insert(*id);
    }
    CHECK(hit.size() == coarse.size());
  }
}

TEST_CASE("space tags round trip") {
  for (auto t : {SpaceTag::square, SpaceTag::carpet, SpaceTag::sponge, SpaceTag::inflated_cover}) {
    CHECK(parse_space_tag(to_string(t)) == t);
  }
}
