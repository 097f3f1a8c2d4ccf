#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "modlab/geometry.hpp"

namespace modlab {

enum class SpaceTag { square, carpet, sponge, inflated_cover };

std::string to_string(SpaceTag tag);
SpaceTag parse_space_tag(std::string_view name);

// Integer position of a cell on the 3^level grid.
using GridIndex = std::array<int, 3>;

struct Cell {
  int id = 0;
  Point center{};
  double half_width = 0.0;
  int level = 0;
  GridIndex index{};

  Box box(int dim) const {
    Box b;
    for (int i = 0; i < dim; ++i) {
      b.lo[i] = center[i] - half_width;
      b.hi[i] = center[i] + half_width;
    }
    return b;
  }
};

// Incidence graph of a cover of a compact space at one scale. Immutable.
class GraphApproximation {
 public:
  GraphApproximation(SpaceTag tag, int level, double scale, int dim, std::vector<Cell> cells,
                     std::vector<std::pair<int, int>> edges, double kappa);

  SpaceTag space_tag() const { return tag_; }
  // Tag of the tiling an inflated cover was derived from (equal to space_tag otherwise).
  SpaceTag base_tag() const { return base_tag_; }
  int level() const { return level_; }
  double scale() const { return scale_; }
  int dim() const { return dim_; }
  double kappa() const { return kappa_; }

  std::size_t size() const { return cells_.size(); }
  const std::vector<Cell>& cells() const { return cells_; }
  const Cell& cell(int id) const { return cells_[static_cast<std::size_t>(id)]; }

  std::span<const int> neighbors(int id) const {
    auto b = offsets_[static_cast<std::size_t>(id)];
    auto e = offsets_[static_cast<std::size_t>(id) + 1];
    return {targets_.data() + b, targets_.data() + e};
  }
  bool adjacent(int a, int b) const;

  std::size_t edge_count() const { return targets_.size() / 2; }
  // Edges (i, j) with i < j in lexicographic order.
  std::vector<std::pair<int, int>> edges() const;

  // Lookup by grid position; only meaningful for grid-built spaces.
  std::optional<int> find(const GridIndex& index) const;
  int grid_side() const { return grid_side_; }

  void set_base_tag(SpaceTag t) { base_tag_ = t; }

 private:
  SpaceTag tag_;
  SpaceTag base_tag_;
  int level_;
  double scale_;
  int dim_;
  double kappa_;
  int grid_side_ = 0;
  std::vector<Cell> cells_;
  std::vector<std::size_t> offsets_;
  std::vector<int> targets_;
  std::vector<std::uint64_t> keys_;  // grid key per cell, sorted when grid_sorted_
  bool grid_sorted_ = false;
};

struct LevelCaps {
  int square = 8;
  int carpet = 7;
  int sponge = 4;
};

GraphApproximation build_square(int k, const LevelCaps& caps = {});
GraphApproximation build_carpet(int k, const LevelCaps& caps = {});
GraphApproximation build_sponge(int k, const LevelCaps& caps = {});
GraphApproximation build_space(SpaceTag tag, int k, const LevelCaps& caps = {});

// Same centers, every cell scaled about its center by `inflation` in (1, 3].
GraphApproximation build_inflated_cover(const GraphApproximation& base, double inflation);

// Hand-built cover: adjacency is the closed-cell intersection relation. When kappa is
// omitted it is computed from the geometry.
GraphApproximation from_cells(SpaceTag tag, int level, double scale, int dim, std::vector<Cell> cells,
                              std::optional<double> kappa = std::nullopt);

// Reference adjacency by all-pairs closed-box intersection (O(n^2)).
std::vector<std::pair<int, int>> brute_force_edges(const std::vector<Cell>& cells, int dim, double scale);

struct ValidationReport {
  bool passed = true;
  double worst_inner_ratio = 0.0;  // (scale/kappa) / inscribed radius, <= 1 required
  double worst_outer_ratio = 0.0;  // circumradius / (kappa*scale), <= 1 required
  double min_center_separation = 0.0;
  std::vector<std::pair<int, std::string>> violations;
};

ValidationReport validate_approximation(const GraphApproximation& g);

// Breadth-first connectivity, optionally restricted to cells with mask[v] != 0.
bool is_connected(const GraphApproximation& g, std::span<const char> mask = {});

// Smallest kappa for which the ball-sandwich axioms hold.
double compute_kappa(const std::vector<Cell>& cells, int dim, double scale,
                     std::span<const std::pair<int, int>> edges);

}  // namespace modlab
