#include "modlab/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>

#include "modlab/errors.hpp"

namespace modlab {

namespace {

int pow3(int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= 3;
  return r;
}

std::int64_t grid_key(const GridIndex& x, std::int64_t side) {
  return static_cast<std::int64_t>(x[0]) + side * (static_cast<std::int64_t>(x[1]) + side * x[2]);
}

bool same(const GroupElement& a, const GroupElement& b, int dim) {
  for (int i = 0; i < dim; ++i) {
    if (a.perm[i] != b.perm[i] || a.sign[i] != b.sign[i]) return false;
  }
  return true;
}

// Feasibility of {0 <= v_1 <= ... <= v_n <= half} with v_i in [lo_i, hi_i].
bool chain_feasible(std::vector<long long> lo, std::vector<long long> hi, long long half) {
  const std::size_t n = lo.size();
  std::vector<long long> L(n), U(n);
  for (std::size_t i = 0; i < n; ++i) L[i] = std::max(lo[i], i == 0 ? 0LL : L[i - 1]);
  for (std::size_t i = n; i-- > 0;) U[i] = std::min(hi[i], i + 1 == n ? half : U[i + 1]);
  for (std::size_t i = 0; i < n; ++i) {
    if (L[i] > U[i]) return false;
  }
  return true;
}

// Faces of the fundamental domain met by one box, as a bitmask over
// {v_1 = 0}, {v_i = v_{i+1}} (i = 1..n-1), {v_n = half}.
unsigned faces_met(const std::vector<long long>& lo, const std::vector<long long>& hi, long long half) {
  const std::size_t n = lo.size();
  unsigned mask = 0;
  {
    auto h = hi;
    h[0] = std::min(h[0], 0LL);
    if (chain_feasible(lo, h, half)) mask |= 1u;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::vector<long long> l2, h2;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i + 1) continue;
      if (j == i) {
        l2.push_back(std::max(lo[i], lo[i + 1]));
        h2.push_back(std::min(hi[i], hi[i + 1]));
      } else {
        l2.push_back(lo[j]);
        h2.push_back(hi[j]);
      }
    }
    if (chain_feasible(l2, h2, half)) mask |= 1u << (i + 1);
  }
  {
    auto l = lo;
    l[n - 1] = std::max(l[n - 1], half);
    if (chain_feasible(l, hi, half)) mask |= 1u << n;
  }
  return mask;
}

}  // namespace

std::vector<GroupElement> symmetry_group(int dim) {
  if (dim != 2 && dim != 3) throw CapabilityError("symmetry groups exist for dimensions 2 and 3");
  std::vector<GroupElement> out;
  std::array<int, 3> perm{0, 1, 2};
  do {
    for (int mask = 0; mask < (1 << dim); ++mask) {
      GroupElement h;
      h.perm = perm;
      for (int i = 0; i < dim; ++i) h.sign[i] = (mask >> i) & 1 ? -1 : 1;
      out.push_back(h);
    }
  } while (std::next_permutation(perm.begin(), perm.begin() + dim));
  return out;
}

GridIndex act(const GroupElement& h, const GridIndex& x, int m, int dim) {
  GridIndex y{0, 0, 0};
  for (int i = 0; i < dim; ++i) {
    int v = x[h.perm[i]];
    y[i] = h.sign[i] > 0 ? v : m - 1 - v;
  }
  return y;
}

std::vector<std::vector<int>> group_multiplication(const std::vector<GroupElement>& group, int dim) {
  const std::size_t n = group.size();
  std::vector<std::vector<int>> table(n, std::vector<int>(n, -1));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      // (a*b)x_i = sa_i (b x)_{pa_i} = sa_i sb_{pa_i} x_{pb_{pa_i}}
      GroupElement c;
      for (int i = 0; i < dim; ++i) {
        int j = group[a].perm[i];
        c.perm[i] = group[b].perm[j];
        c.sign[i] = group[a].sign[i] * group[b].sign[j];
      }
      for (std::size_t k = 0; k < n; ++k) {
        if (same(group[k], c, dim)) {
          table[a][b] = static_cast<int>(k);
          break;
        }
      }
    }
  }
  return table;
}

FoldingMap build_folding(const GraphApproximation& fine, int ell) {
  SpaceTag tag = fine.base_tag();
  if (fine.space_tag() == SpaceTag::inflated_cover ||
      (tag != SpaceTag::square && tag != SpaceTag::carpet && tag != SpaceTag::sponge)) {
    throw CapabilityError("folding maps exist only for the square, carpet and sponge tilings");
  }
  if (ell < 0 || ell > fine.level()) throw BoundsError("base level must lie in [0, fine level]");
  FoldingMap fm;
  fm.tag = tag;
  fm.dim = fine.dim();
  fm.base_level = ell;
  fm.fine_level = fine.level();
  const int k = fine.level() - ell;
  const int m = pow3(k);
  const int tside = pow3(ell);
  fm.local_side = m;
  const int dim = fm.dim;

  std::map<std::int64_t, int> tiles, locals;
  std::vector<GridIndex> tpos(fine.size()), lpos(fine.size());
  for (const Cell& c : fine.cells()) {
    GridIndex t{0, 0, 0}, l{0, 0, 0};
    for (int i = 0; i < dim; ++i) {
      t[i] = c.index[i] / m;
      l[i] = c.index[i] % m;
    }
    tpos[static_cast<std::size_t>(c.id)] = t;
    lpos[static_cast<std::size_t>(c.id)] = l;
    tiles.emplace(grid_key({t[0], t[1], t[2]}, tside), 0);
    locals.emplace(grid_key({l[0], l[1], l[2]}, m), 0);
  }
  // Ids follow key order: x fastest, then y, then z.
  int next = 0;
  for (auto& [key, id] : tiles) {
    id = next++;
    GridIndex t{static_cast<int>(key % tside), static_cast<int>((key / tside) % tside),
                static_cast<int>(key / (static_cast<std::int64_t>(tside) * tside))};
    fm.tile_index.push_back(t);
  }
  next = 0;
  for (auto& [key, id] : locals) {
    id = next++;
    GridIndex l{static_cast<int>(key % m), static_cast<int>((key / m) % m),
                static_cast<int>(key / (static_cast<std::int64_t>(m) * m))};
    fm.local_positions.push_back(l);
  }
  const std::size_t nl = fm.local_positions.size();
  fm.tile_of.resize(fine.size());
  fm.local_index.resize(fine.size());
  fm.cell_at.assign(fm.tile_index.size(), std::vector<int>(nl, -1));
  for (const Cell& c : fine.cells()) {
    auto id = static_cast<std::size_t>(c.id);
    int t = tiles.at(grid_key(tpos[id], tside));
    int l = locals.at(grid_key(lpos[id], m));
    fm.tile_of[id] = t;
    fm.local_index[id] = l;
    fm.cell_at[static_cast<std::size_t>(t)][static_cast<std::size_t>(l)] = c.id;
  }
  for (const auto& row : fm.cell_at) {
    if (std::find(row.begin(), row.end(), -1) != row.end()) {
      throw CapabilityError("tiles do not share a common cell pattern");
    }
  }

  fm.group = symmetry_group(dim);
  fm.multiplication = group_multiplication(fm.group, dim);
  fm.local_action.assign(fm.group.size(), std::vector<int>(nl, -1));
  std::vector<int> stabilizer(nl, 0);
  for (std::size_t h = 0; h < fm.group.size(); ++h) {
    for (std::size_t l = 0; l < nl; ++l) {
      GridIndex img = act(fm.group[h], fm.local_positions[l], m, dim);
      auto it = locals.find(grid_key(img, m));
      if (it == locals.end()) throw CapabilityError("cell pattern is not invariant under the symmetry group");
      fm.local_action[h][l] = it->second;
      if (it->second == static_cast<int>(l)) ++stabilizer[l];
    }
  }
  fm.max_overlap = std::max(1, *std::max_element(stabilizer.begin(), stabilizer.end()));
  return fm;
}

Density symmetrize(const Density& rho, const FoldingMap& fm) {
  if (rho.size() != fm.fine_size()) throw ShapeError("density does not live on the folding map's fine level");
  const std::size_t nl = fm.local_positions.size();
  std::vector<double> S(nl, 0.0);
  for (std::size_t t = 0; t < fm.tile_count(); ++t) {
    for (std::size_t l = 0; l < nl; ++l) S[l] += rho[static_cast<std::size_t>(fm.cell_at[t][l])];
  }
  std::vector<double> local(nl, 0.0);
  for (std::size_t l = 0; l < nl; ++l) {
    double acc = 0.0;
    for (std::size_t h = 0; h < fm.group.size(); ++h) acc += S[static_cast<std::size_t>(fm.local_action[h][l])];
    local[l] = acc;
  }
  std::vector<double> out(rho.size());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = local[static_cast<std::size_t>(fm.local_index[v])];
  return Density(std::move(out));
}

CurveClass classify_curve(const DiscreteCurve& gamma, const FoldingMap& fm) {
  const int n = fm.dim;
  const long long two_m = 2LL * fm.local_side;
  const long long half = fm.local_side;
  const unsigned all = (1u << (n + 1)) - 1;
  unsigned met = 0;
  for (int v : gamma.cells) {
    const GridIndex& x = fm.local_positions[static_cast<std::size_t>(fm.local_index[static_cast<std::size_t>(v)])];
    for (const GroupElement& h : fm.group) {
      // Box image in doubled integer coordinates, listed as v_1..v_n = axes n-1..0.
      std::vector<long long> lo(static_cast<std::size_t>(n)), hi(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        int axis = h.perm[i];
        long long a = 2LL * x[axis], b = a + 2;
        if (h.sign[i] < 0) {
          long long t = two_m - b;
          b = two_m - a;
          a = t;
        }
        auto slot = static_cast<std::size_t>(n - 1 - i);
        lo[slot] = a;
        hi[slot] = b;
      }
      met |= faces_met(lo, hi, half);
      if (met == all) return CurveClass::spanning;
    }
  }
  return met == all ? CurveClass::spanning : CurveClass::small;
}

double lift_bound(const FoldingMap& fm) {
  double fine_side = std::pow(3.0, -fm.fine_level);
  return 2.0 * std::pow(3.0, -fm.base_level) + fine_side * std::sqrt(static_cast<double>(fm.dim));
}

std::vector<int> reflected_copies(const DiscreteCurve& gamma, std::span<const Point> eta, const FoldingMap& fm,
                                  const GraphApproximation& fine) {
  if (fine.size() != fm.fine_size()) throw ShapeError("graph does not match the folding map");
  const std::size_t nl = fm.local_positions.size();
  std::vector<char> orbit(nl, 0);
  for (int v : gamma.cells) {
    int l = fm.local_index[static_cast<std::size_t>(v)];
    for (std::size_t h = 0; h < fm.group.size(); ++h) orbit[static_cast<std::size_t>(fm.local_action[h][static_cast<std::size_t>(l)])] = 1;
  }
  const double tile_side = std::pow(3.0, -fm.base_level);
  const double step = std::pow(3.0, -fm.fine_level) / 2;
  auto samples = densify_polyline(eta, step, fm.dim);
  std::vector<char> tile_used(fm.tile_count(), 0);
  for (std::size_t t = 0; t < fm.tile_count(); ++t) {
    Box b;
    for (int i = 0; i < fm.dim; ++i) {
      b.lo[i] = fm.tile_index[t][i] * tile_side;
      b.hi[i] = b.lo[i] + tile_side;
    }
    for (const Point& s : samples) {
      Box pb{s, s};
      if (boxes_intersect(pb, b, fm.dim, 1e-12)) {
        tile_used[t] = 1;
        break;
      }
    }
  }
  std::vector<int> cells;
  for (std::size_t v = 0; v < fine.size(); ++v) {
    if (tile_used[static_cast<std::size_t>(fm.tile_of[v])] && orbit[static_cast<std::size_t>(fm.local_index[v])]) {
      cells.push_back(static_cast<int>(v));
    }
  }
  return cells;
}

DiscreteCurve lift_curve(const DiscreteCurve& gamma, std::span<const Point> eta, const FoldingMap& fm,
                         const GraphApproximation& fine) {
  if (classify_curve(gamma, fm) != CurveClass::spanning) {
    throw ClassificationError("curve does not span the fundamental domain");
  }
  std::vector<int> U = reflected_copies(gamma, eta, fm, fine);
  const double step = std::pow(3.0, -fm.fine_level) / 2;
  auto samples = densify_polyline(eta, step, fm.dim);
  if (U.empty() || samples.empty()) throw GeometryError("no reflected copies along the target curve");
  const std::size_t nu = U.size();
  const std::size_t ns = samples.size();
  std::vector<int> slot(fine.size(), -1);
  for (std::size_t i = 0; i < nu; ++i) slot[static_cast<std::size_t>(U[i])] = static_cast<int>(i);
  std::vector<double> dist(nu * ns);
  for (std::size_t i = 0; i < nu; ++i) {
    for (std::size_t j = 0; j < ns; ++j) dist[i * ns + j] = distance(fine.cell(U[i]).center, samples[j], fm.dim);
  }

  // Reachability of the last sample layer within radius r; fills `parent`.
  std::vector<std::int64_t> parent(nu * ns);
  auto reachable = [&](double r) -> std::int64_t {
    std::fill(parent.begin(), parent.end(), -2);
    std::queue<std::int64_t> q;
    for (std::size_t i = 0; i < nu; ++i) {
      if (dist[i * ns] <= r) {
        parent[i * ns] = -1;
        q.push(static_cast<std::int64_t>(i * ns));
      }
    }
    while (!q.empty()) {
      std::int64_t s = q.front();
      q.pop();
      auto i = static_cast<std::size_t>(s) / ns;
      auto j = static_cast<std::size_t>(s) % ns;
      if (j + 1 == ns) return s;
      auto visit = [&](std::size_t i2, std::size_t j2) {
        std::size_t t = i2 * ns + j2;
        if (parent[t] != -2 || dist[t] > r) return;
        parent[t] = s;
        q.push(static_cast<std::int64_t>(t));
      };
      visit(i, j + 1);
      for (int w : fine.neighbors(U[i])) {
        int k = slot[static_cast<std::size_t>(w)];
        if (k < 0) continue;
        visit(static_cast<std::size_t>(k), j);
        visit(static_cast<std::size_t>(k), j + 1);
      }
    }
    return -1;
  };

  std::vector<double> radii(dist);
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  std::size_t lo = 0, hi = radii.size() - 1;
  if (reachable(radii[hi]) < 0) throw GeometryError("reflected copies do not connect along the target curve");
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (reachable(radii[mid]) >= 0) hi = mid;
    else lo = mid + 1;
  }
  std::int64_t s = reachable(radii[hi]);
  std::vector<int> cells;
  for (; s >= 0; s = parent[static_cast<std::size_t>(s)]) {
    int c = U[static_cast<std::size_t>(s) / ns];
    if (cells.empty() || cells.back() != c) cells.push_back(c);
  }
  std::reverse(cells.begin(), cells.end());
  return DiscreteCurve{std::move(cells)};
}

std::vector<std::vector<int>> cell_automorphisms(const GraphApproximation& g) {
  std::vector<std::vector<int>> out;
  std::vector<int> id(g.size());
  std::iota(id.begin(), id.end(), 0);
  out.push_back(id);
  SpaceTag tag = g.base_tag();
  if ((tag != SpaceTag::square && tag != SpaceTag::carpet && tag != SpaceTag::sponge) || g.grid_side() <= 0) {
    return out;
  }
  const int m = g.grid_side();
  std::map<std::int64_t, int> lookup;
  for (const Cell& c : g.cells()) {
    if (!lookup.emplace(grid_key(c.index, m), c.id).second) return out;
  }
  auto group = symmetry_group(g.dim());
  for (std::size_t h = 1; h < group.size(); ++h) {
    std::vector<int> perm(g.size());
    for (const Cell& c : g.cells()) {
      auto it = lookup.find(grid_key(act(group[h], c.index, m, g.dim()), m));
      if (it == lookup.end()) return {id};
      perm[static_cast<std::size_t>(c.id)] = it->second;
    }
    out.push_back(std::move(perm));
  }
  return out;
}

}  // namespace modlab
