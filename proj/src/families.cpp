#include "modlab/families.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include "modlab/errors.hpp"
#include "modlab/parallel.hpp"

namespace modlab {

namespace {

constexpr double kCoordEps = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<char> mask_of(std::span<const int> ids, std::size_t n) {
  std::vector<char> m(n, 0);
  for (int v : ids) m[static_cast<std::size_t>(v)] = 1;
  return m;
}

double far_corner_distance(const Box& b, const Point& p, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    double d = std::max(std::abs(b.lo[i] - p[i]), std::abs(b.hi[i] - p[i]));
    s += d * d;
  }
  return std::sqrt(s);
}

// Largest distance from a segment to the corners of a box; the distance to a
// segment is convex, so this bounds it over the whole box.
double box_segment_far_distance(const Box& b, const Point& a, const Point& c, int dim) {
  double worst = 0.0;
  for (int mask = 0; mask < (1 << dim); ++mask) {
    Point corner{};
    for (int i = 0; i < dim; ++i) corner[i] = (mask >> i) & 1 ? b.hi[i] : b.lo[i];
    worst = std::max(worst, point_segment_distance(corner, a, c, dim));
  }
  return worst;
}

// Reusable state for vertex-weighted Dijkstra runs; stamps avoid O(n) resets.
struct Workspace {
  std::vector<double> dist;
  std::vector<int> parent;
  std::vector<unsigned> stamp;
  std::vector<char> settled;
  std::vector<std::pair<double, int>> heap;
  unsigned current = 0;

  void reset(std::size_t n) {
    if (dist.size() != n) {
      dist.assign(n, kInf);
      parent.assign(n, -1);
      stamp.assign(n, 0);
      settled.assign(n, 0);
      current = 0;
    }
    ++current;
    heap.clear();
  }
  bool seen(int v) const { return stamp[static_cast<std::size_t>(v)] == current; }
  double get(int v) const { return seen(v) ? dist[static_cast<std::size_t>(v)] : kInf; }
  bool is_settled(int v) const { return seen(v) && settled[static_cast<std::size_t>(v)]; }
  void settle(int v) { settled[static_cast<std::size_t>(v)] = 1; }
  void set(int v, double d, int p) {
    auto i = static_cast<std::size_t>(v);
    if (stamp[i] != current) {
      stamp[i] = current;
      settled[i] = 0;
    }
    dist[i] = d;
    parent[i] = p;
  }
  void push(double d, int v) {
    heap.emplace_back(d, v);
    std::push_heap(heap.begin(), heap.end(), std::greater<>());
  }
  std::pair<double, int> pop() {
    std::pop_heap(heap.begin(), heap.end(), std::greater<>());
    auto top = heap.back();
    heap.pop_back();
    return top;
  }
  std::vector<int> path_to(int v) const {
    std::vector<int> out;
    for (int u = v; u >= 0; u = parent[static_cast<std::size_t>(u)]) out.push_back(u);
    std::reverse(out.begin(), out.end());
    return out;
  }
};

// Multi-source run over allowed cells. Stops at the first popped target when
// `targets` is non-empty, otherwise settles everything reachable.
int multi_source(const GraphApproximation& g, std::span<const double> rho, std::span<const int> sources,
                 const std::vector<char>& target_mask, const ResolvedFamily& fam, Workspace& ws) {
  ws.reset(g.size());
  for (int s : sources) {
    if (!fam.in_region(s)) continue;
    double d = rho[static_cast<std::size_t>(s)];
    if (d < ws.get(s)) {
      ws.set(s, d, -1);
      ws.push(d, s);
    }
  }
  while (!ws.heap.empty()) {
    auto [d, v] = ws.pop();
    if (ws.is_settled(v) || d > ws.get(v)) continue;
    ws.settle(v);
    if (!target_mask.empty() && target_mask[static_cast<std::size_t>(v)]) return v;
    for (int w : g.neighbors(v)) {
      if (!fam.in_region(w) || ws.is_settled(w)) continue;
      double nd = d + rho[static_cast<std::size_t>(w)];
      if (nd < ws.get(w)) {
        ws.set(w, nd, v);
        ws.push(nd, w);
      }
    }
  }
  return -1;
}

std::vector<int> canonical_set(const std::vector<int>& cells) {
  std::vector<int> s = cells;
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

OracleBatch connect_oracle(const GraphApproximation& g, std::span<const double> rho, const ResolvedFamily& fam,
                           const OracleOptions& opt) {
  OracleBatch out;
  Workspace ws;
  auto tmask = mask_of(fam.targets, g.size());
  if (!fam.through && opt.max_curves <= 1) {
    int hit = multi_source(g, rho, fam.sources, tmask, fam, ws);
    if (hit < 0) return out;
    DiscreteCurve c{ws.path_to(hit)};
    double len = rho_length(c, rho);
    out.empty = false;
    out.min_length = len;
    out.curves.emplace_back(len, std::move(c));
    return out;
  }
  if (!fam.through) {
    // Diverse cuts: after each curve, penalize its cells and search again.
    std::vector<double> bumped(rho.begin(), rho.end());
    double mean = 0.0;
    for (double x : rho) mean += x;
    mean = std::max(mean / static_cast<double>(rho.size()), 1e-12);
    std::set<std::vector<int>> keys;
    for (std::size_t round = 0; round < opt.max_curves; ++round) {
      int hit = multi_source(g, bumped, fam.sources, tmask, fam, ws);
      if (hit < 0) break;
      DiscreteCurve c{ws.path_to(hit)};
      double len = rho_length(c, rho);
      if (round == 0) {
        out.empty = false;
        out.min_length = len;
      }
      for (int v : c.cells) bumped[static_cast<std::size_t>(v)] += std::max(rho[static_cast<std::size_t>(v)], mean);
      if (round > 0 && len >= opt.report_below) continue;
      if (keys.insert(canonical_set(c.cells)).second) out.curves.emplace_back(len, std::move(c));
    }
    std::stable_sort(out.curves.begin(), out.curves.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
    return out;
  }
  // Cheapest connected set holding v, a source and a target: three shortest-path
  // trees meeting at one branch cell m, walked as a -> m -> v -> m -> b.
  int v = *fam.through;
  if (!fam.in_region(v)) return out;
  Workspace wb, wv;
  multi_source(g, rho, fam.sources, {}, fam, ws);
  multi_source(g, rho, fam.targets, {}, fam, wb);
  const int single[1] = {v};
  multi_source(g, rho, single, {}, fam, wv);
  double best = kInf;
  int branch = -1;
  for (int m = 0; m < static_cast<int>(g.size()); ++m) {
    if (!ws.seen(m) || !wb.seen(m) || !wv.seen(m)) continue;
    double c = ws.get(m) + wb.get(m) + wv.get(m) - 2 * rho[static_cast<std::size_t>(m)];
    if (c < best) {
      best = c;
      branch = m;
    }
  }
  if (branch < 0) return out;
  std::vector<int> cells = ws.path_to(branch);
  std::vector<int> to_v = wv.path_to(branch);  // v ... m
  cells.insert(cells.end(), to_v.rbegin() + 1, to_v.rend());
  cells.insert(cells.end(), to_v.begin() + 1, to_v.end());
  std::vector<int> to_b = wb.path_to(branch);  // b ... m
  cells.insert(cells.end(), to_b.rbegin() + 1, to_b.rend());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  DiscreteCurve c{std::move(cells)};
  double len = rho_length(c, rho);
  out.empty = false;
  out.min_length = len;
  out.curves.emplace_back(len, std::move(c));
  return out;
}

std::vector<int> seed_net(const GraphApproximation& g, double radius) {
  std::vector<int> net;
  const double r2 = radius * radius;
  for (const Cell& c : g.cells()) {
    bool covered = false;
    for (int s : net) {
      if (squared_distance(g.cell(s).center, c.center, g.dim()) < r2) {
        covered = true;
        break;
      }
    }
    if (!covered) net.push_back(c.id);
  }
  return net;
}

struct SourceResult {
  double length = kInf;
  std::vector<int> path;
};

OracleBatch diam_oracle(const GraphApproximation& g, std::span<const double> rho, const ResolvedFamily& fam,
                        const OracleOptions& opt, bool exact_min) {
  if (fam.through) throw CapabilityError("curves through a cell are only supported for Connect/CrossRect");
  OracleBatch out;
  std::vector<int> all;
  std::span<const int> sources = opt.sources;
  if (sources.empty()) {
    if (fam.seed_net) {
      all = seed_net(g, fam.d0 / 4);
    } else {
      all.resize(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) all[i] = static_cast<int>(i);
    }
    sources = all;
  }
  const double far2 = fam.d0 * fam.d0 * (1.0 - 1e-12);
  const int dim = g.dim();
  const unsigned workers = std::max(1u, opt.workers);
  std::vector<SourceResult> results(sources.size());
  std::vector<Workspace> spaces(workers);
  // exact_min: prune against the best length found so far within the block. Ties are
  // never pruned, so the minimum and its tie set do not depend on the blocking.
  std::vector<double> block_best(workers, kInf);

  auto search = [&](std::size_t idx, unsigned blk) {
    Workspace& ws = spaces[blk];
    double cutoff = exact_min ? block_best[blk] : opt.report_below;
    int u = sources[(opt.start + idx) % sources.size()];
    const Point& zu = g.cell(u).center;
    ws.reset(g.size());
    ws.set(u, rho[static_cast<std::size_t>(u)], -1);
    ws.push(rho[static_cast<std::size_t>(u)], u);
    while (!ws.heap.empty()) {
      auto [d, v] = ws.pop();
      if (ws.is_settled(v) || d > ws.get(v)) continue;
      if (d > cutoff) break;
      ws.settle(v);
      if (squared_distance(zu, g.cell(v).center, dim) >= far2) {
        results[idx].length = d;
        results[idx].path = ws.path_to(v);
        if (exact_min) block_best[blk] = std::min(block_best[blk], d);
        break;
      }
      for (int w : g.neighbors(v)) {
        if (ws.is_settled(w)) continue;
        double nd = d + rho[static_cast<std::size_t>(w)];
        if (nd < ws.get(w)) {
          ws.set(w, nd, v);
          ws.push(nd, w);
        }
      }
    }
  };
  const std::size_t m = sources.size();
  const bool partial = !exact_min && opt.stop_after > 0;
  const std::size_t chunk = partial ? std::max<std::size_t>(256, 8 * workers) : m;
  std::size_t scanned = 0, below = 0;
  while (scanned < m) {
    const std::size_t len = std::min(chunk, m - scanned);
    parallel_for(len, workers, [&](std::size_t i, unsigned blk) { search(scanned + i, blk); });
    for (std::size_t i = scanned; i < scanned + len; ++i) below += results[i].length < opt.report_below ? 1 : 0;
    scanned += len;
    if (partial && below >= opt.stop_after) break;
  }
  out.complete = scanned == m;
  out.scanned = scanned;

  std::vector<std::pair<double, DiscreteCurve>> found;
  for (auto& r : results) {
    if (r.path.empty()) continue;
    DiscreteCurve c{std::move(r.path)};
    double len = rho_length(c, rho);
    found.emplace_back(len, std::move(c));
  }
  if (found.empty()) return out;
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return a.first < b.first || (a.first == b.first && a.second.cells < b.second.cells);
  });
  out.empty = false;
  out.min_length = found.front().first;
  std::set<std::vector<int>> keys;
  for (auto& [len, c] : found) {
    if (out.curves.size() >= std::max<std::size_t>(1, opt.max_curves)) break;
    if (!out.curves.empty() && len >= opt.report_below) break;
    if (!keys.insert(canonical_set(c.cells)).second) continue;
    out.curves.emplace_back(len, std::move(c));
  }
  return out;
}

int advance_layer(const ResolvedFamily& fam, int cell, int layer) {
  const int m = static_cast<int>(fam.waypoint_sets.size());
  while (layer < m && fam.waypoint_sets[static_cast<std::size_t>(layer)][static_cast<std::size_t>(cell)]) ++layer;
  return layer;
}

OracleBatch tube_oracle(const GraphApproximation& g, std::span<const double> rho, const ResolvedFamily& fam) {
  if (fam.through) throw CapabilityError("curves through a cell are only supported for Connect/CrossRect");
  OracleBatch out;
  const int n = static_cast<int>(g.size());
  const int m = static_cast<int>(fam.waypoint_sets.size());
  if (m == 0) return out;
  const std::size_t states = static_cast<std::size_t>(n) * static_cast<std::size_t>(m + 1);
  std::vector<double> dist(states, kInf);
  std::vector<std::int64_t> parent(states, -1);
  std::vector<char> done(states, 0);
  using Entry = std::pair<double, std::int64_t>;
  std::vector<Entry> heap;
  auto push = [&](double d, std::int64_t s) {
    heap.emplace_back(d, s);
    std::push_heap(heap.begin(), heap.end(), std::greater<>());
  };
  for (int c = 0; c < n; ++c) {
    if (!fam.in_region(c) || !fam.waypoint_sets[0][static_cast<std::size_t>(c)]) continue;
    int layer = advance_layer(fam, c, 0);
    std::int64_t s = static_cast<std::int64_t>(layer) * n + c;
    double d = rho[static_cast<std::size_t>(c)];
    if (d < dist[static_cast<std::size_t>(s)]) {
      dist[static_cast<std::size_t>(s)] = d;
      push(d, s);
    }
  }
  std::int64_t goal = -1;
  while (!heap.empty()) {
    std::pop_heap(heap.begin(), heap.end(), std::greater<>());
    auto [d, s] = heap.back();
    heap.pop_back();
    auto si = static_cast<std::size_t>(s);
    if (done[si] || d > dist[si]) continue;
    done[si] = 1;
    int layer = static_cast<int>(s / n);
    int v = static_cast<int>(s % n);
    if (layer == m) {
      goal = s;
      break;
    }
    for (int w : g.neighbors(v)) {
      if (!fam.in_region(w)) continue;
      int nl = advance_layer(fam, w, layer);
      std::int64_t t = static_cast<std::int64_t>(nl) * n + w;
      auto ti = static_cast<std::size_t>(t);
      if (done[ti]) continue;
      double nd = d + rho[static_cast<std::size_t>(w)];
      if (nd < dist[ti]) {
        dist[ti] = nd;
        parent[ti] = s;
        push(nd, t);
      }
    }
  }
  if (goal < 0) return out;
  std::vector<int> cells;
  for (std::int64_t s = goal; s >= 0; s = parent[static_cast<std::size_t>(s)]) cells.push_back(static_cast<int>(s % n));
  std::reverse(cells.begin(), cells.end());
  DiscreteCurve c{std::move(cells)};
  double len = rho_length(c, rho);
  out.empty = false;
  out.min_length = len;
  out.curves.emplace_back(len, std::move(c));
  return out;
}

}  // namespace

Density::Density(std::vector<double> v) : values(std::move(v)) {
  for (double x : values) {
    if (!std::isfinite(x) || x < 0.0) throw SpecError("density entries must be finite and nonnegative");
  }
}

CellSet CellSet::side(int axis, double value) {
  Box b;
  b.lo = {0.0, 0.0, 0.0};
  b.hi = {1.0, 1.0, 1.0};
  b.lo[static_cast<std::size_t>(axis)] = value;
  b.hi[static_cast<std::size_t>(axis)] = value;
  return from_box(b, Mode::meets);
}

std::string CurveFamilySpec::variant_name() const {
  switch (variant.index()) {
    case 0: return "connect";
    case 1: return "cross_rect";
    case 2: return "diam_at_least";
    default: return "tube";
  }
}

std::vector<int> resolve_cells(const CellSet& set, const GraphApproximation& g) {
  std::vector<int> out;
  if (set.box) {
    for (const Cell& c : g.cells()) {
      Box cb = c.box(g.dim());
      bool hit = set.mode == CellSet::Mode::meets ? boxes_intersect(cb, *set.box, g.dim(), kCoordEps)
                                                   : box_within(cb, *set.box, g.dim(), kCoordEps);
      if (hit) out.push_back(c.id);
    }
  }
  for (int id : set.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= g.size()) {
      throw SpecError("cell id " + std::to_string(id) + " out of range");
    }
    out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ResolvedFamily resolve(const CurveFamilySpec& spec, const GraphApproximation& g) {
  ResolvedFamily f;
  const std::size_t n = g.size();
  const int dim = g.dim();
  auto restrict_to_region = [&](std::vector<int> ids) {
    std::vector<int> out;
    for (int v : ids) {
      if (f.in_region(v)) out.push_back(v);
    }
    return out;
  };

  if (const auto* c = std::get_if<ConnectSpec>(&spec.variant)) {
    f.kind = FamilyKind::connect;
    if (c->region) f.region = mask_of(resolve_cells(*c->region, g), n);
    f.sources = restrict_to_region(resolve_cells(c->a, g));
    f.targets = restrict_to_region(resolve_cells(c->b, g));
    f.empty = f.sources.empty() || f.targets.empty();
  } else if (const auto* r = std::get_if<CrossRectSpec>(&spec.variant)) {
    if (dim != 2) throw CapabilityError("CrossRect families are planar");
    f.kind = FamilyKind::cross_rect;
    // Cells overlapping the rectangle with positive area; sides are the cells
    // covering the rectangle's entry and exit edges.
    std::vector<int> inside;
    for (std::size_t v = 0; v < n; ++v) {
      Box b = g.cell(static_cast<int>(v)).box(dim);
      bool overlap = true;
      for (int i = 0; i < dim; ++i) {
        overlap = overlap && std::min(b.hi[i], r->rect.hi[i]) - std::max(b.lo[i], r->rect.lo[i]) > kCoordEps;
      }
      if (overlap) inside.push_back(static_cast<int>(v));
    }
    f.region = mask_of(inside, n);
    int axis = r->axis == CrossAxis::horizontal ? 0 : 1;
    for (int v : inside) {
      Box b = g.cell(v).box(dim);
      if (b.lo[axis] <= r->rect.lo[axis] + kCoordEps) f.sources.push_back(v);
      if (b.hi[axis] >= r->rect.hi[axis] - kCoordEps) f.targets.push_back(v);
    }
    f.empty = f.sources.empty() || f.targets.empty();
  } else if (const auto* d = std::get_if<DiamAtLeastSpec>(&spec.variant)) {
    if (!(d->d0 > 0.0)) throw SpecError("DiamAtLeast needs d0 > 0");
    f.kind = FamilyKind::diam_at_least;
    f.d0 = d->d0;
    f.seed_net = d->seed_net;
    Point lo{1, 1, 1}, hi{0, 0, 0};
    for (const Cell& c : g.cells()) {
      for (int i = 0; i < dim; ++i) {
        lo[i] = std::min(lo[i], c.center[i]);
        hi[i] = std::max(hi[i], c.center[i]);
      }
    }
    f.empty = g.size() < 2 || distance(lo, hi, dim) < d->d0 * (1.0 - 1e-12);
  } else {
    const auto& t = std::get<TubeSpec>(spec.variant);
    if (!(t.epsilon > 0.0)) throw SpecError("Tube needs epsilon > 0");
    if (t.waypoints.size() < 2) throw SpecError("Tube needs at least two waypoints");
    double step = t.spacing.value_or(t.epsilon / 2);
    if (!(step > 0.0) || step >= t.epsilon) throw SpecError("Tube waypoint spacing must lie in (0, epsilon)");
    f.kind = FamilyKind::tube;
    f.epsilon = t.epsilon;
    f.spacing = step;
    f.waypoints = densify_polyline(t.waypoints, step, dim);
    if (f.waypoints.size() < 2) throw SpecError("Tube polyline is constant");
    f.region.assign(n, 0);
    for (const Cell& c : g.cells()) {
      Box b = c.box(dim);
      for (std::size_t i = 0; i + 1 < t.waypoints.size(); ++i) {
        if (box_segment_far_distance(b, t.waypoints[i], t.waypoints[i + 1], dim) < t.epsilon) {
          f.region[static_cast<std::size_t>(c.id)] = 1;
          break;
        }
      }
    }
    f.waypoint_sets.assign(f.waypoints.size(), std::vector<char>(n, 0));
    for (std::size_t i = 0; i < f.waypoints.size(); ++i) {
      bool any = false;
      for (const Cell& c : g.cells()) {
        if (far_corner_distance(c.box(dim), f.waypoints[i], dim) < t.epsilon && f.in_region(c.id)) {
          f.waypoint_sets[i][static_cast<std::size_t>(c.id)] = 1;
          any = true;
        }
      }
      if (!any) f.empty = true;
    }
  }
  return f;
}

ResolvedFamily through_cell(const ResolvedFamily& family, int v) {
  ResolvedFamily f = family;
  f.through = v;
  return f;
}

double rho_length(const DiscreteCurve& curve, std::span<const double> rho) {
  std::vector<int> s = canonical_set(curve.cells);
  double total = 0.0;
  for (int v : s) total += rho[static_cast<std::size_t>(v)];
  return total;
}

bool is_member(const DiscreteCurve& curve, const GraphApproximation& g, const ResolvedFamily& fam) {
  const auto& c = curve.cells;
  if (c.empty() || fam.empty) return false;
  for (int v : c) {
    if (v < 0 || static_cast<std::size_t>(v) >= g.size() || !fam.in_region(v)) return false;
  }
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    if (!g.adjacent(c[i], c[i + 1])) return false;
  }
  if (fam.through && std::find(c.begin(), c.end(), *fam.through) == c.end()) return false;
  switch (fam.kind) {
    case FamilyKind::connect:
    case FamilyKind::cross_rect:
    {
      auto in = [](const std::vector<int>& s, int v) { return std::binary_search(s.begin(), s.end(), v); };
      return (in(fam.sources, c.front()) && in(fam.targets, c.back())) ||
             (in(fam.sources, c.back()) && in(fam.targets, c.front()));
    }
    case FamilyKind::diam_at_least: {
      const double far2 = fam.d0 * fam.d0 * (1.0 - 1e-12);
      for (std::size_t i = 0; i < c.size(); ++i) {
        for (std::size_t j = i + 1; j < c.size(); ++j) {
          if (squared_distance(g.cell(c[i]).center, g.cell(c[j]).center, g.dim()) >= far2) return true;
        }
      }
      return false;
    }
    case FamilyKind::tube: {
      if (!fam.waypoint_sets[0][static_cast<std::size_t>(c.front())]) return false;
      int layer = 0;
      for (int v : c) layer = advance_layer(fam, v, layer);
      return layer == static_cast<int>(fam.waypoint_sets.size());
    }
  }
  return false;
}

OracleBatch separate(const GraphApproximation& g, std::span<const double> rho, const ResolvedFamily& family,
                     const OracleOptions& options) {
  if (rho.size() != g.size()) throw ShapeError("density length does not match the approximation");
  if (family.empty) return {};
  switch (family.kind) {
    case FamilyKind::connect:
    case FamilyKind::cross_rect:
      return connect_oracle(g, rho, family, options);
    case FamilyKind::diam_at_least: {
      OracleOptions o = options;
      if (o.exact_min) o.stop_after = 0;
      OracleBatch b = diam_oracle(g, rho, family, o, false);
      if (b.empty && o.exact_min) b = diam_oracle(g, rho, family, o, true);
      return b;
    }
    case FamilyKind::tube:
      return tube_oracle(g, rho, family);
  }
  return {};
}

OracleResult min_length_curve(const GraphApproximation& g, const Density& rho, const ResolvedFamily& family) {
  if (rho.size() != g.size()) throw ShapeError("density length does not match the approximation");
  OracleResult r;
  if (family.empty) return r;
  OracleBatch b;
  if (family.kind == FamilyKind::diam_at_least) {
    OracleOptions opt;
    b = diam_oracle(g, rho.values, family, opt, true);
  } else {
    b = separate(g, rho.values, family, {});
  }
  if (b.empty) return r;
  r.empty = false;
  r.length = b.curves.front().first;
  r.curve = b.curves.front().second;
  return r;
}

std::vector<DiscreteCurve> enumerate_curves(const GraphApproximation& g, const ResolvedFamily& fam, int max_cells) {
  if (g.size() > 200) throw SizeError("enumeration limited to 200 cells");
  if (max_cells > 12) throw SizeError("enumeration limited to 12 cells per curve");
  std::vector<DiscreteCurve> out;
  if (max_cells <= 0 || fam.empty) return out;
  const int n = static_cast<int>(g.size());
  const int m = static_cast<int>(fam.waypoint_sets.size());
  const double far2 = fam.d0 * fam.d0 * (1.0 - 1e-12);
  auto tmask = mask_of(fam.targets, g.size());
  std::set<std::vector<int>> found;
  std::vector<int> path;
  std::vector<char> on(g.size(), 0);

  std::function<void(bool, int)> extend = [&](bool far, int layer) {
    int last = path.back();
    bool member = false;
    switch (fam.kind) {
      case FamilyKind::connect:
      case FamilyKind::cross_rect: member = tmask[static_cast<std::size_t>(last)] != 0; break;
      case FamilyKind::diam_at_least: member = far; break;
      case FamilyKind::tube: member = layer == m; break;
    }
    if (member && fam.through && !on[static_cast<std::size_t>(*fam.through)]) member = false;
    if (member) {
      std::vector<int> rev(path.rbegin(), path.rend());
      found.insert(std::min(path, rev));
    }
    if (static_cast<int>(path.size()) >= max_cells) return;
    for (int w : g.neighbors(last)) {
      if (on[static_cast<std::size_t>(w)] || !fam.in_region(w)) continue;
      bool nf = far;
      if (fam.kind == FamilyKind::diam_at_least && !nf) {
        for (int u : path) {
          if (squared_distance(g.cell(u).center, g.cell(w).center, g.dim()) >= far2) {
            nf = true;
            break;
          }
        }
      }
      int nl = fam.kind == FamilyKind::tube ? advance_layer(fam, w, layer) : layer;
      path.push_back(w);
      on[static_cast<std::size_t>(w)] = 1;
      extend(nf, nl);
      on[static_cast<std::size_t>(w)] = 0;
      path.pop_back();
    }
  };

  for (int s = 0; s < n; ++s) {
    if (!fam.in_region(s)) continue;
    if ((fam.kind == FamilyKind::connect || fam.kind == FamilyKind::cross_rect) &&
        !std::binary_search(fam.sources.begin(), fam.sources.end(), s)) {
      continue;
    }
    int layer = 0;
    if (fam.kind == FamilyKind::tube) {
      if (!fam.waypoint_sets[0][static_cast<std::size_t>(s)]) continue;
      layer = advance_layer(fam, s, 0);
    }
    path.assign(1, s);
    on[static_cast<std::size_t>(s)] = 1;
    extend(false, layer);
    on[static_cast<std::size_t>(s)] = 0;
  }
  out.reserve(found.size());
  for (const auto& p : found) out.push_back(DiscreteCurve{p});
  return out;
}

double cell_set_diameter(std::span<const int> cells, const GraphApproximation& g) {
  double best = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    Box bi = g.cell(cells[i]).box(g.dim());
    for (std::size_t j = i; j < cells.size(); ++j) {
      best = std::max(best, box_far_distance(bi, g.cell(cells[j]).box(g.dim()), g.dim()));
    }
  }
  return best;
}

double cell_set_distance(std::span<const int> a, std::span<const int> b, const GraphApproximation& g) {
  double best = kInf;
  for (int u : a) {
    Box bu = g.cell(u).box(g.dim());
    for (int v : b) best = std::min(best, box_distance(bu, g.cell(v).box(g.dim()), g.dim()));
  }
  return best;
}

double relative_distance(std::span<const int> a, std::span<const int> b, const GraphApproximation& g) {
  if (a.size() < 2 || b.size() < 2) throw DegenerateError("relative distance needs continua of at least two cells");
  double dist = cell_set_distance(a, b, g);
  double diam = std::min(cell_set_diameter(a, g), cell_set_diameter(b, g));
  return dist / diam;
}

double relative_distance(const CellSet& a, const CellSet& b, const GraphApproximation& g) {
  auto ra = resolve_cells(a, g);
  auto rb = resolve_cells(b, g);
  return relative_distance(ra, rb, g);
}

std::vector<Point> densify_polyline(std::span<const Point> polyline, double step, int dim) {
  std::vector<Point> out;
  if (polyline.empty()) return out;
  out.push_back(polyline[0]);
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    const Point& a = polyline[i];
    const Point& b = polyline[i + 1];
    double len = distance(a, b, dim);
    if (len <= 0.0) continue;
    int pieces = std::max(1, static_cast<int>(std::ceil(len / step - 1e-12)));
    for (int j = 1; j <= pieces; ++j) {
      double t = static_cast<double>(j) / pieces;
      Point p{};
      for (int d = 0; d < dim; ++d) p[d] = a[d] + t * (b[d] - a[d]);
      out.push_back(p);
    }
  }
  return out;
}

double ordered_waypoint_distance(const DiscreteCurve& curve, const GraphApproximation& g,
                                 std::span<const Point> polyline, double sample_step) {
  auto samples = densify_polyline(polyline, sample_step, g.dim());
  const std::size_t a = curve.cells.size();
  const std::size_t b = samples.size();
  if (a == 0 || b == 0) return kInf;
  std::vector<double> prev(b), cur(b);
  for (std::size_t i = 0; i < a; ++i) {
    const Point& z = g.cell(curve.cells[i]).center;
    for (std::size_t j = 0; j < b; ++j) {
      double d = distance(z, samples[j], g.dim());
      double best;
      if (i == 0 && j == 0) best = d;
      else if (i == 0) best = std::max(d, cur[j - 1]);
      else if (j == 0) best = std::max(d, prev[j]);
      else best = std::max(d, std::min({prev[j], cur[j - 1], prev[j - 1]}));
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  return prev[b - 1];
}

}  // namespace modlab
