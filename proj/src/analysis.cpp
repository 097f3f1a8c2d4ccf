#include "modlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "modlab/errors.hpp"
#include "modlab/parallel.hpp"

namespace modlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_face(const CellSet& s) {
  if (!s.box || !s.ids.empty() || s.mode != CellSet::Mode::meets) return false;
  int flat = -1;
  for (int i = 0; i < 3; ++i) {
    double lo = s.box->lo[i], hi = s.box->hi[i];
    if (lo == hi && (lo == 0.0 || lo == 1.0)) {
      if (flat >= 0) return false;
      flat = i;
    } else if (!(lo <= 0.0 && hi >= 1.0)) {
      return false;
    }
  }
  return flat >= 0;
}

// True when x lies in a cell of the grid-built approximation g.
bool on_space(const GraphApproximation& g, const Point& x) {
  const int m = g.grid_side();
  GridIndex idx{0, 0, 0};
  for (int d = 0; d < g.dim(); ++d) {
    if (x[d] < 0.0 || x[d] > 1.0) return false;
    idx[d] = std::min(m - 1, static_cast<int>(x[d] * m));
  }
  return g.find(idx).has_value();
}

double midpoint_log(const SeriesEntry& e) { return std::log(0.5 * (e.lower + e.upper)); }

}  // namespace

std::string to_string(GrowthVerdict v) {
  switch (v) {
    case GrowthVerdict::growing: return "growing";
    case GrowthVerdict::decaying: return "decaying";
    case GrowthVerdict::flat: return "flat";
  }
  return "flat";
}

bool is_scale_free(const CurveFamilySpec& spec) {
  if (std::holds_alternative<DiamAtLeastSpec>(spec.variant)) return true;
  if (const auto* c = std::get_if<ConnectSpec>(&spec.variant)) {
    return !c->region && is_face(c->a) && is_face(c->b);
  }
  return false;
}

void fit_constants(ScaleSeries& series) {
  std::map<int, const SeriesEntry*> by_k;
  for (const auto& e : series.entries) by_k[e.k] = &e;
  double sub = 0.0, sup = kInf;
  bool any = false;
  for (const auto& [k, ek] : by_k) {
    for (const auto& [l, el] : by_k) {
      if (k < 1 || l < 1 || l < k) continue;
      auto it = by_k.find(k + l);
      if (it == by_k.end()) continue;
      const SeriesEntry& ekl = *it->second;
      double denom_lo = ek->lower * el->lower;
      double denom_hi = ek->upper * el->upper;
      if (denom_lo <= 0.0 || denom_hi <= 0.0) continue;
      sub = std::max(sub, ekl.upper / denom_lo);
      sup = std::min(sup, ekl.lower / denom_hi);
      any = true;
    }
  }
  series.sub_constant = any ? sub : 0.0;
  series.super_constant = any ? sup : 0.0;
  if (!any) series.notes.push_back("no (k, l, k+l) triple in range; constants not fitted");
}

ScaleSeries scale_series(SpaceTag space, const CurveFamilySpec& spec, double p, int k_min, int k_max, double tol,
                         const AnalysisOptions& options) {
  if (!is_scale_free(spec)) throw SpecError("scale series need DiamAtLeast or a face-to-face Connect family");
  if (k_min < 0 || k_max < k_min) throw BoundsError("level range must satisfy 0 <= k_min <= k_max");
  ScaleSeries out;
  out.space = space;
  out.family = spec;
  out.p = p;
  out.tol = tol;
  std::vector<DiscreteCurve> previous;
  std::optional<GraphApproximation> prev_graph;
  for (int k = k_min; k <= k_max; ++k) {
    GraphApproximation g = build_space(space, k, options.caps);
    ResolvedFamily fam = resolve(spec, g);
    SolverOptions so = options.solver;
    if (options.warm_start && prev_graph) so.warm_start = snap_curves(previous, *prev_graph, g, fam);
    ModulusSolution sol = modulus(g, fam, p, tol, so);
    out.entries.push_back({k, sol.lower, sol.upper, sol.status, sol.iterations});
    if (sol.status == SolveStatus::iteration_cap) {
      out.notes.push_back("level " + std::to_string(k) + " hit the iteration cap; bracket still valid");
    }
    if (options.warm_start) {
      previous = sol.active_curves;
      prev_graph.emplace(std::move(g));
    }
  }
  fit_constants(out);
  return out;
}

TrendFit growth_trend(const std::vector<SeriesEntry>& all) {
  TrendFit fit;
  std::vector<SeriesEntry> e(all.end() - std::min<std::ptrdiff_t>(4, static_cast<std::ptrdiff_t>(all.size())), all.end());
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    double a = 0.5 * (all[i].lower + all[i].upper), b = 0.5 * (all[i + 1].lower + all[i + 1].upper);
    fit.ratios.push_back(a > 0.0 ? b / a : kInf);
  }
  if (e.size() < 2) return fit;
  for (const auto& x : e) {
    if (!(x.lower > 0.0)) {
      fit.verdict = GrowthVerdict::flat;
      return fit;
    }
  }
  const double n = static_cast<double>(e.size());
  double xbar = 0.0;
  for (const auto& x : e) xbar += x.k;
  xbar /= n;
  double sxx = 0.0;
  for (const auto& x : e) sxx += (x.k - xbar) * (x.k - xbar);
  double slope = 0.0, bracket = 0.0;
  std::vector<double> w;
  for (const auto& x : e) {
    double wi = (x.k - xbar) / sxx;
    w.push_back(wi);
    slope += wi * midpoint_log(x);
    bracket += std::abs(wi) * 0.5 * std::log(x.upper / x.lower);
  }
  double ybar = 0.0;
  for (const auto& x : e) ybar += midpoint_log(x);
  ybar /= n;
  double ssr = 0.0;
  for (const auto& x : e) {
    double r = midpoint_log(x) - (ybar + slope * (x.k - xbar));
    ssr += r * r;
  }
  double res = e.size() > 2 ? std::sqrt(ssr / (n - 2.0) / sxx) : 0.0;
  fit.slope = slope;
  fit.sigma = std::sqrt(res * res + bracket * bracket) + 1e-12;
  if (slope > 3.0 * fit.sigma) fit.verdict = GrowthVerdict::growing;
  else if (slope < -3.0 * fit.sigma) fit.verdict = GrowthVerdict::decaying;
  else fit.verdict = GrowthVerdict::flat;
  return fit;
}

QmEstimate estimate_qm(const SeriesProvider& provider, double p_lo, double p_hi, double p_tol) {
  if (!(p_lo >= 1.0)) throw ExponentError("p_lo must be at least 1");
  if (!(p_hi > p_lo)) throw BoundsError("p_hi must exceed p_lo");
  if (!(p_tol >= 0.01)) throw BoundsError("p_tol must be at least 0.01");
  QmEstimate est;
  est.p_lo = p_lo;
  est.p_hi = p_hi;
  auto probe = [&](double p) {
    QmProbe pr;
    pr.p = p;
    pr.entries = provider(p);
    pr.trend = growth_trend(pr.entries);
    est.probes.push_back(pr);
    return pr.trend.verdict;
  };
  GrowthVerdict at_lo = probe(p_lo);
  GrowthVerdict at_hi = probe(p_hi);
  if (at_lo != GrowthVerdict::growing || at_hi != GrowthVerdict::decaying) {
    est.inconclusive = true;
    return est;
  }
  double lo = p_lo, hi = p_hi;
  while (hi - lo > p_tol) {
    double mid = 0.5 * (lo + hi);
    GrowthVerdict v = probe(mid);
    if (v == GrowthVerdict::growing) {
      lo = mid;
    } else if (v == GrowthVerdict::decaying) {
      hi = mid;
    } else {
      // Flat at the midpoint: close in from both sides.
      double q1 = 0.5 * (lo + mid), q3 = 0.5 * (mid + hi);
      bool moved = false;
      if (probe(q1) == GrowthVerdict::growing) {
        lo = q1;
        moved = true;
      }
      if (probe(q3) == GrowthVerdict::decaying) {
        hi = q3;
        moved = true;
      }
      if (!moved) break;
    }
  }
  est.p_lo = lo;
  est.p_hi = hi;
  return est;
}

QmEstimate estimate_qm(SpaceTag space, const CurveFamilySpec& spec, int k_max, double p_lo, double p_hi,
                       double p_tol, double tol, const AnalysisOptions& options) {
  const int k_min = std::max(1, k_max - 3);
  if (k_max - k_min < 1) throw BoundsError("k_max must be at least 2");
  SeriesProvider provider = [&](double p) {
    return scale_series(space, spec, p, k_min, k_max, tol, options).entries;
  };
  return estimate_qm(provider, p_lo, p_hi, p_tol);
}

ClpProfile clp_profile(SpaceTag space, double p, const std::vector<SetPair>& pairs, const std::vector<int>& ks,
                       double tol, const AnalysisOptions& options) {
  ClpProfile prof;
  prof.space = space;
  prof.p = p;
  prof.tol = tol;
  for (int k : ks) {
    GraphApproximation g = build_space(space, k, options.caps);
    for (const SetPair& pair : pairs) {
      ClpRow row;
      row.pair_id = pair.id;
      row.k = k;
      auto a = resolve_cells(pair.a, g);
      auto b = resolve_cells(pair.b, g);
      bool overlap = std::find_first_of(a.begin(), a.end(), b.begin(), b.end()) != a.end();
      if (a.size() < 2 || b.size() < 2) {
        row.skipped = true;
        row.note = "degenerate continuum";
      } else if (overlap) {
        row.skipped = true;
        row.note = "sets share cells";
      } else {
        row.delta = relative_distance(a, b, g);
        double scale = g.scale();
        double diam = std::min(cell_set_diameter(a, g), cell_set_diameter(b, g));
        if (!(row.delta > 0.0)) {
          row.skipped = true;
          row.note = "touching sets";
        } else if (scale > diam) {
          row.skipped = true;
          row.note = "scale exceeds set diameter";
        }
      }
      if (!row.skipped) {
        ModulusSolution sol =
            modulus(g, CurveFamilySpec::connect(CellSet::from_ids(a), CellSet::from_ids(b)), p, tol, options.solver);
        row.lower = sol.lower;
        row.upper = sol.upper;
      }
      prof.rows.push_back(row);
    }
  }
  std::vector<double> ts;
  for (const auto& r : prof.rows) {
    if (!r.skipped) ts.push_back(1.0 / r.delta);
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  for (double t : ts) prof.envelope.push_back({t, *envelope_phi(prof, t), *envelope_psi(prof, t)});
  return prof;
}

std::optional<double> envelope_phi(const ClpProfile& profile, double t) {
  std::optional<double> out;
  for (const auto& r : profile.rows) {
    if (r.skipped || 1.0 / r.delta < t) continue;
    out = out ? std::min(*out, r.lower) : r.lower;
  }
  return out;
}

std::optional<double> envelope_psi(const ClpProfile& profile, double t) {
  std::optional<double> out;
  for (const auto& r : profile.rows) {
    if (r.skipped || 1.0 / r.delta > t) continue;
    out = out ? std::max(*out, r.upper) : r.upper;
  }
  return out;
}

BallPairReport ball_pair_check(SpaceTag space, double p, double a_param, double l_param, int sample_count,
                               const std::vector<int>& ks, std::uint64_t seed, double tol,
                               const AnalysisOptions& options) {
  if (!(a_param > 0.0)) throw BoundsError("A must be positive");
  if (!(l_param > 0.0)) throw BoundsError("L must be positive");
  if (ks.empty()) throw BoundsError("empty level range");
  BallPairReport rep;
  rep.space = space;
  rep.p = p;
  rep.a_param = a_param;
  rep.l_param = l_param;
  rep.seed = seed;
  rep.ks = ks;
  const int kmin = *std::min_element(ks.begin(), ks.end());
  const int kmax = *std::max_element(ks.begin(), ks.end());
  // Centers are drawn among the cells of the finest level so both balls sit on
  // the space; radii keep every tested scale at or below r.
  GraphApproximation finest = build_space(space, kmax, options.caps);
  const int dim = finest.dim();
  const double r_min = std::pow(3.0, -kmin);
  const double r_max = 2.0 * r_min;
  SplitMix64 rng(seed);
  struct Config {
    Point c1, c2;
    double r;
  };
  std::vector<Config> configs;
  for (int i = 0; i < sample_count; ++i) {
    Config c{};
    c.r = rng.uniform(r_min, r_max);
    c.c1 = finest.cell(static_cast<int>(rng.below(finest.size()))).center;
    // Redraw the direction until the second center lies on the space.
    for (int attempt = 0; attempt < 1000; ++attempt) {
      Point dir{};
      double norm = 0.0;
      for (int d = 0; d < dim; ++d) {
        dir[d] = rng.uniform(-1.0, 1.0);
        norm += dir[d] * dir[d];
      }
      norm = std::sqrt(std::max(norm, 1e-300));
      for (int d = 0; d < dim; ++d) c.c2[d] = c.c1[d] + (2.0 + a_param) * c.r * dir[d] / norm;
      if (on_space(finest, c.c2)) break;
    }
    configs.push_back(c);
  }
  rep.m_hat = kInf;
  for (int k : ks) {
    GraphApproximation g = k == kmax ? finest : build_space(space, k, options.caps);
    double mk = kInf;
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const Config& c = configs[i];
      Point mid{};
      for (int d = 0; d < dim; ++d) mid[d] = 0.5 * (c.c1[d] + c.c2[d]);
      std::vector<int> a, b, region;
      for (const Cell& cell : g.cells()) {
        Box box = cell.box(dim);
        Box p1{c.c1, c.c1}, p2{c.c2, c.c2};
        if (box_distance(box, p1, dim) <= c.r) a.push_back(cell.id);
        if (box_distance(box, p2, dim) <= c.r) b.push_back(cell.id);
        double far = 0.0;
        for (int mask = 0; mask < (1 << dim); ++mask) {
          Point corner{};
          for (int d = 0; d < dim; ++d) corner[d] = (mask >> d) & 1 ? box.hi[d] : box.lo[d];
          far = std::max(far, distance(corner, mid, dim));
        }
        if (far <= l_param * c.r) region.push_back(cell.id);
      }
      BallSample s;
      s.index = static_cast<int>(i);
      s.k = k;
      s.c1 = c.c1;
      s.c2 = c.c2;
      s.r = c.r;
      auto spec = CurveFamilySpec::connect(CellSet::from_ids(a), CellSet::from_ids(b), CellSet::from_ids(region));
      ResolvedFamily fam = resolve(spec, g);
      if (fam.empty) {
        s.empty = true;
      } else {
        ModulusSolution sol = modulus(g, fam, p, tol, options.solver);
        s.empty = sol.status == SolveStatus::empty_family;
        s.lower = sol.lower;
        s.upper = sol.upper;
      }
      mk = std::min(mk, s.lower);
      if (s.lower < rep.m_hat) {
        rep.m_hat = s.lower;
        rep.worst_sample = static_cast<int>(rep.samples.size());
      }
      rep.samples.push_back(s);
    }
    rep.m_hat_by_k.push_back(mk);
  }
  return rep;
}

AnnulusReport annulus_chain_bound(const GraphApproximation& g, const CellSet& a, const CellSet& b, double p,
                                  double tol, std::optional<int> balls, const SolverOptions& options) {
  if (!(p > 1.0)) throw ExponentError("the annulus chain bound needs p > 1");
  auto ca = resolve_cells(a, g);
  auto cb = resolve_cells(b, g);
  if (ca.empty() || cb.empty()) throw GeometryError("empty continuum");
  const int dim = g.dim();
  double d = cell_set_diameter(ca, g);
  double dist_ab = cell_set_distance(ca, cb, g);
  if (dist_ab < 2.0 * d) throw GeometryError("need dist(A, B) >= 2 diam(A)");
  Point z0{};
  {
    Point lo{1, 1, 1}, hi{0, 0, 0};
    for (int v : ca) {
      Box bx = g.cell(v).box(dim);
      for (int i = 0; i < dim; ++i) {
        lo[i] = std::min(lo[i], bx.lo[i]);
        hi[i] = std::max(hi[i], bx.hi[i]);
      }
    }
    for (int i = 0; i < dim; ++i) z0[i] = 0.5 * (lo[i] + hi[i]);
  }
  // Distance from z0 to B decides how many balls stay clear of B.
  double reach = kInf;
  Box pz{z0, z0};
  for (int v : cb) reach = std::min(reach, box_distance(g.cell(v).box(dim), pz, dim));
  int n = 0;
  while (std::ldexp(d, n + 1) < reach) ++n;
  if (balls) {
    if (*balls > n) throw GeometryError("requested ball count does not fit between A and B");
    n = *balls;
  }
  if (n < 2) throw GeometryError("fewer than two balls fit between A and B");

  AnnulusReport rep;
  rep.balls = n;
  rep.radius0 = d;
  std::vector<double> rho(g.size(), 0.0);
  for (int i = 1; i < n; ++i) {
    double r_in = std::ldexp(d, i), r_out = std::ldexp(d, i + 1);
    std::vector<int> inner, outer;
    for (const Cell& c : g.cells()) {
      Box bx = c.box(dim);
      if (box_distance(bx, pz, dim) <= r_in) inner.push_back(c.id);
      double far = 0.0;
      for (int mask = 0; mask < (1 << dim); ++mask) {
        Point corner{};
        for (int j = 0; j < dim; ++j) corner[j] = (mask >> j) & 1 ? bx.hi[j] : bx.lo[j];
        far = std::max(far, distance(corner, z0, dim));
      }
      if (far > r_out) outer.push_back(c.id);
    }
    auto spec = CurveFamilySpec::connect(CellSet::from_ids(inner), CellSet::from_ids(outer));
    ModulusSolution sol = modulus(g, spec, p, tol, options);
    rep.ring_upper.push_back(sol.upper);
    for (std::size_t v = 0; v < g.size(); ++v) rho[v] += sol.density[v] / (n - 1);
  }
  ResolvedFamily fam = resolve(CurveFamilySpec::connect(a, b), g);
  OracleResult check = min_length_curve(g, Density(rho), fam);
  rep.min_length = check.empty ? kInf : check.length;
  // Discrete chains may cut corners of a ring; rescale if needed so the density
  // is admissible and the mass stays a certified bound.
  double scale = (!check.empty && check.length < 1.0 && check.length > 0.0) ? 1.0 / check.length : 1.0;
  for (double& x : rho) x *= scale;
  rep.bound = mass(rho, p);
  ModulusSolution direct = modulus(g, fam, p, tol, options);
  rep.direct_lower = direct.lower;
  rep.direct_upper = direct.upper;
  return rep;
}

RectProduct rect_product(const GraphApproximation& g, const Box& rect, double tol, const SolverOptions& options) {
  if (g.dim() != 2) throw CapabilityError("rectangle products are planar");
  auto inside = resolve_cells(CellSet::from_box(rect, CellSet::Mode::within), g);
  if (inside.empty()) throw GeometryError("rectangle contains no cells");
  std::vector<char> mask(g.size(), 0);
  for (int v : inside) mask[static_cast<std::size_t>(v)] = 1;
  if (!is_connected(g, mask)) throw GeometryError("rectangle meets the space in a disconnected region");
  RectProduct out;
  out.h = modulus(g, CurveFamilySpec::cross_rect(rect, CrossAxis::horizontal), 2.0, tol, options);
  out.v = modulus(g, CurveFamilySpec::cross_rect(rect, CrossAxis::vertical), 2.0, tol, options);
  out.horizontal = out.h.midpoint();
  out.vertical = out.v.midpoint();
  out.product = out.horizontal * out.vertical;
  return out;
}

}  // namespace modlab
