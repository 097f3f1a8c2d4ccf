#include "modlab/tiling.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "modlab/errors.hpp"

namespace modlab {

namespace {

int pow3(int k) {
  int m = 1;
  for (int i = 0; i < k; ++i) m *= 3;
  return m;
}

std::uint64_t grid_key(const GridIndex& idx, int side) {
  auto s = static_cast<std::uint64_t>(side);
  return static_cast<std::uint64_t>(idx[0]) +
         s * (static_cast<std::uint64_t>(idx[1]) + s * static_cast<std::uint64_t>(idx[2]));
}

bool carpet_retained(int x, int y) {
  while (x > 0 || y > 0) {
    if (x % 3 == 1 && y % 3 == 1) return false;
    x /= 3;
    y /= 3;
  }
  return true;
}

bool sponge_retained(int x, int y, int z) {
  while (x > 0 || y > 0 || z > 0) {
    int ones = (x % 3 == 1) + (y % 3 == 1) + (z % 3 == 1);
    if (ones >= 2) return false;
    x /= 3;
    y /= 3;
    z /= 3;
  }
  return true;
}

void check_level(const char* name, int k, int cap) {
  if (k < 0 || k > cap) {
    throw BoundsError(std::string(name) + " level " + std::to_string(k) + " outside [0, " +
                      std::to_string(cap) + "]");
  }
}

template <typename Keep>
GraphApproximation build_grid(SpaceTag tag, int k, int dim, Keep keep) {
  const int m = pow3(k);
  const double s = 1.0 / m;
  std::vector<Cell> cells;
  const int zmax = dim == 3 ? m : 1;
  for (int z = 0; z < zmax; ++z) {
    for (int y = 0; y < m; ++y) {
      for (int x = 0; x < m; ++x) {
        if (!keep(x, y, z)) continue;
        Cell c;
        c.id = static_cast<int>(cells.size());
        c.index = {x, y, z};
        c.center = {(x + 0.5) * s, (y + 0.5) * s, dim == 3 ? (z + 0.5) * s : 0.0};
        c.half_width = s / 2;
        c.level = k;
        cells.push_back(c);
      }
    }
  }
  std::vector<std::uint64_t> keys(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) keys[i] = grid_key(cells[i].index, m);

  std::vector<std::pair<int, int>> edges;
  edges.reserve(cells.size() * (dim == 3 ? 13 : 4));
  for (const Cell& c : cells) {
    for (int dz = (dim == 3 ? -1 : 0); dz <= (dim == 3 ? 1 : 0); ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          GridIndex n{c.index[0] + dx, c.index[1] + dy, c.index[2] + dz};
          if (n[0] < 0 || n[1] < 0 || n[2] < 0 || n[0] >= m || n[1] >= m || n[2] >= (dim == 3 ? m : 1)) continue;
          auto key = grid_key(n, m);
          auto it = std::lower_bound(keys.begin(), keys.end(), key);
          if (it == keys.end() || *it != key) continue;
          int j = static_cast<int>(it - keys.begin());
          if (j > c.id) edges.emplace_back(c.id, j);
        }
      }
    }
  }
  return GraphApproximation(tag, k, s, dim, std::move(cells), std::move(edges), 2.0);
}

std::vector<std::pair<int, int>> sweep_edges(const std::vector<Cell>& cells, int dim, double scale) {
  const double eps = 1e-9 * scale;
  std::vector<int> order(cells.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    double la = cells[a].center[0] - cells[a].half_width;
    double lb = cells[b].center[0] - cells[b].half_width;
    return la < lb || (la == lb && a < b);
  });
  std::vector<std::pair<int, int>> edges;
  for (std::size_t ii = 0; ii < order.size(); ++ii) {
    const Cell& a = cells[order[ii]];
    Box ba = a.box(dim);
    for (std::size_t jj = ii + 1; jj < order.size(); ++jj) {
      const Cell& b = cells[order[jj]];
      if (b.center[0] - b.half_width > ba.hi[0] + eps) break;
      if (boxes_intersect(ba, b.box(dim), dim, eps)) {
        edges.emplace_back(std::min(a.id, b.id), std::max(a.id, b.id));
      }
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

}  // namespace

std::string to_string(SpaceTag tag) {
  switch (tag) {
    case SpaceTag::square: return "square";
    case SpaceTag::carpet: return "carpet";
    case SpaceTag::sponge: return "sponge";
    case SpaceTag::inflated_cover: return "inflated_cover";
  }
  return "unknown";
}

SpaceTag parse_space_tag(std::string_view name) {
  if (name == "square") return SpaceTag::square;
  if (name == "carpet") return SpaceTag::carpet;
  if (name == "sponge") return SpaceTag::sponge;
  if (name == "inflated_cover") return SpaceTag::inflated_cover;
  throw SpecError("unknown space '" + std::string(name) + "'");
}

GraphApproximation::GraphApproximation(SpaceTag tag, int level, double scale, int dim, std::vector<Cell> cells,
                                       std::vector<std::pair<int, int>> edges, double kappa)
    : tag_(tag), base_tag_(tag), level_(level), scale_(scale), dim_(dim), kappa_(kappa), cells_(std::move(cells)) {
  if (dim_ != 2 && dim_ != 3) throw ShapeError("dimension must be 2 or 3");
  const std::size_t n = cells_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (cells_[i].id != static_cast<int>(i)) throw ShapeError("cell ids must be 0..n-1 in order");
  }
  std::vector<std::size_t> degree(n + 1, 0);
  for (auto [a, b] : edges) {
    if (a == b) throw ShapeError("adjacency must be irreflexive");
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n) {
      throw ShapeError("edge endpoint out of range");
    }
    ++degree[static_cast<std::size_t>(a)];
    ++degree[static_cast<std::size_t>(b)];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + degree[i];
  targets_.assign(offsets_[n], 0);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (auto [a, b] : edges) {
    targets_[fill[static_cast<std::size_t>(a)]++] = b;
    targets_[fill[static_cast<std::size_t>(b)]++] = a;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto first = targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
    auto last = targets_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]);
    std::sort(first, last);
    if (std::adjacent_find(first, last) != last) throw ShapeError("duplicate edge");
  }

  grid_side_ = pow3(std::max(0, std::min(level_, 19)));
  keys_.resize(n);
  for (std::size_t i = 0; i < n; ++i) keys_[i] = grid_key(cells_[i].index, grid_side_);
  grid_sorted_ = std::is_sorted(keys_.begin(), keys_.end()) &&
                 std::adjacent_find(keys_.begin(), keys_.end()) == keys_.end();
}

bool GraphApproximation::adjacent(int a, int b) const {
  auto nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

std::vector<std::pair<int, int>> GraphApproximation::edges() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(edge_count());
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    for (int j : neighbors(static_cast<int>(i))) {
      if (j > static_cast<int>(i)) out.emplace_back(static_cast<int>(i), j);
    }
  }
  return out;
}

std::optional<int> GraphApproximation::find(const GridIndex& index) const {
  for (int i = 0; i < 3; ++i) {
    if (index[i] < 0 || index[i] >= grid_side_) return std::nullopt;
  }
  auto key = grid_key(index, grid_side_);
  if (grid_sorted_) {
    auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it == keys_.end() || *it != key) return std::nullopt;
    return static_cast<int>(it - keys_.begin());
  }
  auto it = std::find(keys_.begin(), keys_.end(), key);
  if (it == keys_.end()) return std::nullopt;
  return static_cast<int>(it - keys_.begin());
}

GraphApproximation build_square(int k, const LevelCaps& caps) {
  check_level("square", k, caps.square);
  return build_grid(SpaceTag::square, k, 2, [](int, int, int) { return true; });
}

GraphApproximation build_carpet(int k, const LevelCaps& caps) {
  check_level("carpet", k, caps.carpet);
  return build_grid(SpaceTag::carpet, k, 2, [](int x, int y, int) { return carpet_retained(x, y); });
}

GraphApproximation build_sponge(int k, const LevelCaps& caps) {
  check_level("sponge", k, caps.sponge);
  return build_grid(SpaceTag::sponge, k, 3, [](int x, int y, int z) { return sponge_retained(x, y, z); });
}

GraphApproximation build_space(SpaceTag tag, int k, const LevelCaps& caps) {
  switch (tag) {
    case SpaceTag::square: return build_square(k, caps);
    case SpaceTag::carpet: return build_carpet(k, caps);
    case SpaceTag::sponge: return build_sponge(k, caps);
    case SpaceTag::inflated_cover: break;
  }
  throw CapabilityError("inflated covers are derived with build_inflated_cover");
}

GraphApproximation build_inflated_cover(const GraphApproximation& base, double inflation) {
  if (!(inflation > 1.0 && inflation <= 3.0)) {
    throw BoundsError("inflation " + std::to_string(inflation) + " outside (1, 3]");
  }
  std::vector<Cell> cells = base.cells();
  for (Cell& c : cells) c.half_width *= inflation;
  auto edges = sweep_edges(cells, base.dim(), base.scale());
  double kappa = compute_kappa(cells, base.dim(), base.scale(), edges);
  GraphApproximation g(SpaceTag::inflated_cover, base.level(), base.scale(), base.dim(), std::move(cells),
                       std::move(edges), kappa);
  g.set_base_tag(base.base_tag());
  return g;
}

GraphApproximation from_cells(SpaceTag tag, int level, double scale, int dim, std::vector<Cell> cells,
                              std::optional<double> kappa) {
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i].id = static_cast<int>(i);
  auto edges = sweep_edges(cells, dim, scale);
  double k = kappa ? *kappa : compute_kappa(cells, dim, scale, edges);
  return GraphApproximation(tag, level, scale, dim, std::move(cells), std::move(edges), k);
}

std::vector<std::pair<int, int>> brute_force_edges(const std::vector<Cell>& cells, int dim, double scale) {
  const double eps = 1e-9 * scale;
  std::vector<std::pair<int, int>> edges;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      if (boxes_intersect(cells[i].box(dim), cells[j].box(dim), dim, eps)) {
        edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
  return edges;
}

double compute_kappa(const std::vector<Cell>& cells, int dim, double scale,
                     std::span<const std::pair<int, int>> edges) {
  double kappa = 1.0;
  double finite_max = 1.0;
  for (const Cell& c : cells) {
    double outer = c.half_width * std::sqrt(static_cast<double>(dim)) / scale;
    double inner = scale / c.half_width;
    finite_max = std::max({finite_max, outer, inner});
  }
  kappa = finite_max;
  for (auto [a, b] : edges) {
    double sep = distance(cells[a].center, cells[b].center, dim);
    if (sep > 0.0) kappa = std::max(kappa, 2.0 * scale / sep);
  }
  return kappa;
}

ValidationReport validate_approximation(const GraphApproximation& g) {
  ValidationReport r;
  const double s = g.scale();
  const double kappa = g.kappa();
  const double slack = 1e-12;
  const double root_dim = std::sqrt(static_cast<double>(g.dim()));
  for (const Cell& c : g.cells()) {
    double inner = (s / kappa) / c.half_width;
    double outer = (c.half_width * root_dim) / (kappa * s);
    r.worst_inner_ratio = std::max(r.worst_inner_ratio, inner);
    r.worst_outer_ratio = std::max(r.worst_outer_ratio, outer);
    if (inner > 1.0 + slack) r.violations.emplace_back(c.id, "inner_containment");
    if (outer > 1.0 + slack) r.violations.emplace_back(c.id, "outer_containment");
  }
  // Overlapping inner balls lie inside intersecting cells, so only edges need checking.
  r.min_center_separation = std::numeric_limits<double>::infinity();
  const double need = 2.0 * s / kappa;
  for (auto [a, b] : g.edges()) {
    double sep = distance(g.cell(a).center, g.cell(b).center, g.dim());
    r.min_center_separation = std::min(r.min_center_separation, sep);
    if (sep < need * (1.0 - slack)) {
      r.violations.emplace_back(a, "inner_disjointness");
    }
  }
  r.passed = r.violations.empty();
  return r;
}

bool is_connected(const GraphApproximation& g, std::span<const char> mask) {
  const std::size_t n = g.size();
  auto allowed = [&](int v) { return mask.empty() || mask[static_cast<std::size_t>(v)] != 0; };
  int start = -1;
  std::size_t total = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (allowed(static_cast<int>(v))) {
      ++total;
      if (start < 0) start = static_cast<int>(v);
    }
  }
  if (total == 0) return true;
  std::vector<char> seen(n, 0);
  std::deque<int> queue{start};
  seen[static_cast<std::size_t>(start)] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int w : g.neighbors(v)) {
      if (!seen[static_cast<std::size_t>(w)] && allowed(w)) {
        seen[static_cast<std::size_t>(w)] = 1;
        ++reached;
        queue.push_back(w);
      }
    }
  }
  return reached == total;
}

}  // namespace modlab
