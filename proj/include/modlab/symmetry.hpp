#pragma once

#include <array>
#include <span>
#include <vector>

#include "modlab/families.hpp"
#include "modlab/tiling.hpp"

namespace modlab {

// Signed coordinate permutation of the cube centered at (1/2, ..., 1/2):
// (h x)_i - 1/2 = sign_i * (x_{perm_i} - 1/2).
struct GroupElement {
  std::array<int, 3> perm{0, 1, 2};
  std::array<int, 3> sign{1, 1, 1};
};

// Full symmetry group of [0,1]^dim: D_4 (order 8) for dim 2, order 48 for dim 3.
// Identity first, otherwise permutations in lexicographic order, signs + before -.
std::vector<GroupElement> symmetry_group(int dim);

// Index of a*b (apply b, then a) in `group`.
std::vector<std::vector<int>> group_multiplication(const std::vector<GroupElement>& group, int dim);

// Image of a grid position on a side-m grid.
GridIndex act(const GroupElement& h, const GridIndex& x, int m, int dim);

struct FoldingMap {
  SpaceTag tag = SpaceTag::square;
  int dim = 2;
  int base_level = 0;  // ell
  int fine_level = 0;  // k + ell
  int local_side = 1;  // 3^k fine cells per tile side
  std::vector<GridIndex> tile_index;       // tile id -> position on the 3^ell grid
  std::vector<GridIndex> local_positions;  // local id -> position inside a tile
  std::vector<int> tile_of;                // fine cell -> tile id
  std::vector<int> local_index;            // fine cell -> local id
  std::vector<std::vector<int>> cell_at;   // [tile][local] -> fine cell
  std::vector<GroupElement> group;
  std::vector<std::vector<int>> local_action;  // [h][local] -> local
  std::vector<std::vector<int>> multiplication;
  int max_overlap = 1;  // N: largest stabilizer of a local cell

  std::size_t tile_count() const { return tile_index.size(); }
  std::size_t fine_size() const { return tile_of.size(); }
  // g_{T,T',h}(v) for a fine cell v of tile T.
  int map_cell(int target_tile, int h, int v) const {
    return cell_at[static_cast<std::size_t>(target_tile)]
                  [static_cast<std::size_t>(local_action[static_cast<std::size_t>(h)][static_cast<std::size_t>(local_index[static_cast<std::size_t>(v)])])];
  }
};

FoldingMap build_folding(const GraphApproximation& fine, int ell);

// rho'(v) = sum over tiles T' and group elements h of rho(g_{T,T',h}(v)).
Density symmetrize(const Density& rho, const FoldingMap& fm);

enum class CurveClass { spanning, small };

CurveClass classify_curve(const DiscreteCurve& gamma, const FoldingMap& fm);

// Curve inside the reflected copies of gamma along the tiles met by eta that is
// closest to eta in discrete Frechet distance.
DiscreteCurve lift_curve(const DiscreteCurve& gamma, std::span<const Point> eta, const FoldingMap& fm,
                         const GraphApproximation& fine);

// Union over the tiles met by eta of the fine cells whose local index lies in the
// group orbit of gamma's local cells.
std::vector<int> reflected_copies(const DiscreteCurve& gamma, std::span<const Point> eta, const FoldingMap& fm,
                                  const GraphApproximation& fine);

// Lift error allowed for base level ell: 2*3^-ell plus one fine-cell diameter.
double lift_bound(const FoldingMap& fm);

// Cell permutations induced by the symmetry group of the whole space (identity
// first). Only the identity for spaces without a grid structure.
std::vector<std::vector<int>> cell_automorphisms(const GraphApproximation& g);

}  // namespace modlab
