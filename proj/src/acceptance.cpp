#include "modlab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <set>

#include "modlab/analysis.hpp"
#include "modlab/errors.hpp"
#include "modlab/parallel.hpp"
#include "modlab/solver.hpp"
#include "modlab/symmetry.hpp"

namespace modlab {

namespace {

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string g6(double x) { return fmt("%.6g", x); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void project_simplex(std::vector<double>& x) {
  std::vector<double> u(x);
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    css += u[i];
    double t = (css - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  for (double& v : x) v = std::max(0.0, v - theta);
}

struct Context {
  AcceptanceOptions opt;
  SolverOptions solver;
  std::optional<ScaleSeries> carpet_p2;
};

SolverOptions base_solver(const AcceptanceOptions& o) {
  SolverOptions s;
  s.workers = std::max(1u, o.workers);
  return s;
}

void log_line(const Context& ctx, const std::string& s) {
  if (ctx.opt.log) *ctx.opt.log << s << '\n' << std::flush;
}

bool admissible(const GraphApproximation& g, const ResolvedFamily& fam, std::span<const double> rho, double slack,
                double* min_length = nullptr) {
  OracleOptions oo;
  OracleBatch b = separate(g, rho, fam, oo);
  if (min_length) *min_length = b.empty ? INFINITY : b.min_length;
  return b.empty || b.min_length >= slack;
}

// Grid-modulus identity at p = 2.
CriterionResult c1_grid_identity(Context& ctx) {
  CriterionResult r{1, "grid modulus identity p=2", true, "", 0};
  auto t0 = std::chrono::steady_clock::now();
  for (int k = 1; k <= 4; ++k) {
    auto sol = modulus(build_square(k), CurveFamilySpec::left_right(), 2.0, 1e-6, ctx.solver);
    bool ok = sol.status == SolveStatus::converged && std::abs(sol.upper - 1.0) <= 1e-4 &&
              std::abs(sol.lower - 1.0) <= 1e-4;
    r.passed = r.passed && ok;
    r.detail += "k=" + std::to_string(k) + " [" + fmt("%.8f", sol.lower) + "," + fmt("%.8f", sol.upper) + "] ";
  }
  double secs = seconds_since(t0);
  if (secs >= 60.0) {
    r.passed = false;
    r.detail += "runtime limit exceeded";
  }
  return r;
}

// Min-cut identity at p = 1.
CriterionResult c2_min_cut(Context& ctx) {
  CriterionResult r{2, "min-cut identity p=1", true, "", 0};
  for (int k = 1; k <= 3; ++k) {
    double exact = std::pow(3.0, k);
    auto sol = modulus(build_square(k), CurveFamilySpec::left_right(), 1.0, 1e-4, ctx.solver);
    bool ok = std::abs(sol.upper / exact - 1.0) <= 0.01 && std::abs(sol.lower / exact - 1.0) <= 0.01;
    r.passed = r.passed && ok;
    r.detail += "k=" + std::to_string(k) + " [" + g6(sol.lower) + "," + g6(sol.upper) + "] ";
  }
  return r;
}

// Random connected sub-grid with ids, plus its left and right columns.
struct SmallInstance {
  GraphApproximation g;
  CurveFamilySpec spec;
  double p;
};

SmallInstance random_instance(SplitMix64& rng) {
  const double s = 1.0 / 9.0;
  for (;;) {
    int w = 3 + static_cast<int>(rng.below(4));  // 3..6 columns
    int h = 2 + static_cast<int>(rng.below(4));  // 2..5 rows
    std::vector<std::vector<char>> keep(static_cast<std::size_t>(w), std::vector<char>(static_cast<std::size_t>(h), 1));
    int holes = static_cast<int>(rng.below(4));
    for (int i = 0; i < holes && w > 2; ++i) {
      int x = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(w - 2)));
      int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(h)));
      keep[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] = 0;
    }
    std::vector<Cell> cells;
    std::vector<int> a, b;
    for (int x = 0; x < w; ++x) {
      for (int y = 0; y < h; ++y) {
        if (!keep[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)]) continue;
        Cell c;
        c.center = {(x + 0.5) * s, (y + 0.5) * s, 0.0};
        c.half_width = s / 2;
        c.level = 2;
        c.index = {x, y, 0};
        int id = static_cast<int>(cells.size());
        if (x == 0) a.push_back(id);
        if (x == w - 1) b.push_back(id);
        cells.push_back(c);
      }
    }
    GraphApproximation g = from_cells(SpaceTag::square, 2, s, 2, std::move(cells));
    if (!is_connected(g)) continue;
    static const double ps[] = {1.5, 2.0, 2.5, 3.0};
    double p = ps[rng.below(4)];
    return {std::move(g), CurveFamilySpec::connect(CellSet::from_ids(a), CellSet::from_ids(b)), p};
  }
}

CriterionResult c3_brute_force(Context& ctx) {
  CriterionResult r{3, "brute-force equivalence", true, "", 0};
  auto t0 = std::chrono::steady_clock::now();
  SplitMix64 rng(ctx.opt.seed ^ 0x3333u);
  int failures = 0, skipped = 0;
  double worst = 0.0;
  for (int i = 0; i < 25; ++i) {
    SmallInstance inst = random_instance(rng);
    ResolvedFamily fam = resolve(inst.spec, inst.g);
    ReferenceModulus ref = reference_modulus(inst.g, fam, inst.p, 1e-9);
    if (!ref.ok) {
      ++skipped;
      continue;
    }
    auto sol = modulus(inst.g, fam, inst.p, 1e-6, ctx.solver);
    double target = 0.5 * (ref.lower + ref.upper);
    double slack = 1e-6 * target;
    bool ok = sol.lower <= target + slack && sol.upper >= target - slack;
    double off = std::max({0.0, sol.lower - target, target - sol.upper}) / target;
    worst = std::max(worst, off);
    if (!ok) ++failures;
  }
  double secs = seconds_since(t0);
  r.passed = failures == 0 && skipped == 0 && secs < 300.0;
  r.detail = "failures=" + std::to_string(failures) + " skipped=" + std::to_string(skipped) +
             " worst_excess=" + fmt("%.3g", worst);
  return r;
}

CriterionResult c4_duality(Context& ctx) {
  CriterionResult r{4, "duality certificate", true, "", 0};
  struct Case {
    SpaceTag space;
    int k;
    CurveFamilySpec spec;
    double p;
  };
  std::vector<Case> cases;
  for (int k = 1; k <= 3; ++k) {
    for (double p : {1.0, 1.5, 2.0, 3.0}) cases.push_back({SpaceTag::square, k, CurveFamilySpec::left_right(), p});
    for (double p : {1.5, 2.0}) {
      cases.push_back({SpaceTag::carpet, k, CurveFamilySpec::left_right(), p});
      cases.push_back({SpaceTag::carpet, k, CurveFamilySpec::diam_at_least(0.5), p});
    }
  }
  Box rect{{0.2, 0.3, 0}, {0.8, 0.7, 1}};
  cases.push_back({SpaceTag::square, 2, CurveFamilySpec::cross_rect(rect, CrossAxis::vertical), 2.0});
  cases.push_back({SpaceTag::carpet, 2, CurveFamilySpec::tube({{0.1, 0.2, 0}, {0.9, 0.8, 0}}, 0.3), 2.0});
  cases.push_back({SpaceTag::sponge, 1, CurveFamilySpec::left_right(), 2.0});
  const double tol = 1e-4;
  int checked = 0, failures = 0;
  for (const Case& c : cases) {
    GraphApproximation g = build_space(c.space, c.k);
    ResolvedFamily fam = resolve(c.spec, g);
    auto sol = modulus(g, fam, c.p, tol, ctx.solver);
    if (sol.status != SolveStatus::converged) continue;
    ++checked;
    double len = 0.0;
    bool ok = sol.lower <= sol.upper && sol.upper <= (1.0 + tol) * sol.lower &&
              admissible(g, fam, sol.density.values, 1.0 - 1e-9, &len);
    if (!ok) {
      ++failures;
      r.detail += "fail(" + to_string(c.space) + " k=" + std::to_string(c.k) + " " + c.spec.variant_name() +
                  " p=" + g6(c.p) + ") ";
    }
  }
  r.passed = failures == 0 && checked > 0;
  r.detail += "converged=" + std::to_string(checked) + "/" + std::to_string(cases.size()) +
              " failures=" + std::to_string(failures);
  return r;
}

Box random_box(SplitMix64& rng, double lo_size, double hi_size) {
  double w = rng.uniform(lo_size, hi_size), h = rng.uniform(lo_size, hi_size);
  double x = rng.uniform(0.0, 1.0 - w), y = rng.uniform(0.0, 1.0 - h);
  return Box{{x, y, 0}, {x + w, y + h, 1}};
}

CriterionResult c5_monotonicity(Context& ctx) {
  CriterionResult r{5, "monotonicity in p and family", true, "", 0};
  SplitMix64 rng(ctx.opt.seed ^ 0x5555u);
  const double tol = 1e-4;
  static const double ps[] = {1.0, 1.5, 2.0, 2.5, 3.0, 4.0};
  int violations = 0, nontrivial = 0;
  for (int i = 0; i < 100; ++i) {
    SpaceTag space = rng.below(2) ? SpaceTag::carpet : SpaceTag::square;
    int k = 1 + static_cast<int>(rng.below(3));
    GraphApproximation g = build_space(space, k);
    CurveFamilySpec small, large;
    double p1 = 2.0, p2 = 2.0;
    int shape = static_cast<int>(rng.below(3));
    if (i % 2 == 0) {
      // Same family, two exponents p1 < p2.
      std::size_t a = rng.below(6), b = rng.below(5);
      if (b >= a) ++b;
      p1 = ps[std::min(a, b)];
      p2 = ps[std::max(a, b)];
      if (shape == 0) {
        small = CurveFamilySpec::left_right();
      } else if (shape == 1) {
        small = CurveFamilySpec::diam_at_least(rng.uniform(0.3, 0.9));
      } else {
        small = CurveFamilySpec::connect(CellSet::from_box(random_box(rng, 0.1, 0.3)),
                                         CellSet::from_box(random_box(rng, 0.1, 0.3)));
      }
      large = small;
    } else {
      p1 = p2 = ps[1 + rng.below(5)];
      if (shape == 0) {
        double d = rng.uniform(0.3, 0.9), d2 = rng.uniform(0.3, 0.9);
        small = CurveFamilySpec::diam_at_least(std::max(d, d2));
        large = CurveFamilySpec::diam_at_least(std::min(d, d2));
      } else if (shape == 1) {
        Box region = random_box(rng, 0.5, 1.0);
        region.lo[0] = 0.0;
        region.hi[0] = 1.0;
        small = CurveFamilySpec::connect(CellSet::side(0, 0.0), CellSet::side(0, 1.0), CellSet::from_box(region));
        large = CurveFamilySpec::left_right();
      } else {
        Box a = random_box(rng, 0.1, 0.3);
        Box a2 = a;
        for (int d = 0; d < 2; ++d) {
          a2.lo[d] = std::max(0.0, a.lo[d] - 0.1);
          a2.hi[d] = std::min(1.0, a.hi[d] + 0.1);
        }
        CellSet b = CellSet::from_box(random_box(rng, 0.1, 0.3));
        small = CurveFamilySpec::connect(CellSet::from_box(a), b);
        large = CurveFamilySpec::connect(CellSet::from_box(a2), b);
      }
    }
    // Mod(small, p2) <= Mod(large, p1).
    auto s = modulus(g, small, p2, tol, ctx.solver);
    auto l = modulus(g, large, p1, tol, ctx.solver);
    if (s.upper > 0.0 && l.upper > 0.0) ++nontrivial;
    if (s.lower > l.upper * (1.0 + 1e-12)) {
      ++violations;
      r.detail += "case" + std::to_string(i) + " ";
    }
  }
  r.passed = violations == 0;
  r.detail += "violations=" + std::to_string(violations) + " nontrivial=" + std::to_string(nontrivial);
  return r;
}

CriterionResult c6_robustness(Context& ctx) {
  CriterionResult r{6, "approximation robustness", true, "", 0};
  auto t0 = std::chrono::steady_clock::now();
  const double tol = 1e-3;
  double lo_ratio = INFINITY, hi_ratio = 0.0;
  for (int k = 1; k <= 4; ++k) {
    GraphApproximation g = build_carpet(k);
    GraphApproximation h = build_inflated_cover(g, 2.0);
    for (double p : {1.5, 2.0}) {
      auto a = modulus(g, CurveFamilySpec::left_right(), p, tol, ctx.solver);
      auto b = modulus(h, CurveFamilySpec::left_right(), p, tol, ctx.solver);
      hi_ratio = std::max(hi_ratio, a.upper / b.lower);
      lo_ratio = std::min(lo_ratio, a.lower / b.upper);
    }
  }
  double secs = seconds_since(t0);
  r.passed = lo_ratio >= 1.0 / 50 && hi_ratio <= 50.0 && secs < 600.0;
  r.detail = "ratio range [" + g6(lo_ratio) + "," + g6(hi_ratio) + "]";
  if (secs >= 600.0) r.detail += " runtime limit exceeded";
  return r;
}

const ScaleSeries& carpet_series(Context& ctx) {
  if (!ctx.carpet_p2) {
    AnalysisOptions ao;
    ao.solver = ctx.solver;
    ctx.carpet_p2 = scale_series(SpaceTag::carpet, CurveFamilySpec::diam_at_least(0.5), 2.0, 1, 5, 1e-3, ao);
  }
  return *ctx.carpet_p2;
}

ScaleSeries capped(const ScaleSeries& s, int cap) {
  ScaleSeries out = s;
  out.entries.clear();
  for (const auto& e : s.entries) {
    if (e.k <= cap) out.entries.push_back(e);
  }
  fit_constants(out);
  return out;
}

std::string series_detail(const ScaleSeries& s) {
  std::string d;
  for (const auto& e : s.entries) d += "M" + std::to_string(e.k) + "=[" + g6(e.lower) + "," + g6(e.upper) + "] ";
  return d;
}

CriterionResult c7_submult(Context& ctx) {
  CriterionResult r{7, "submultiplicativity", true, "", 0};
  const ScaleSeries& s = carpet_series(ctx);
  ScaleSeries s4 = capped(s, 4), s5 = capped(s, 5);
  bool converged = std::all_of(s.entries.begin(), s.entries.end(),
                               [](const SeriesEntry& e) { return e.status == SolveStatus::converged; });
  // Every pair with k + l <= 5 must satisfy the inequality with the global constant.
  bool holds = true;
  for (const auto& a : s.entries) {
    for (const auto& b : s.entries) {
      for (const auto& c : s.entries) {
        if (a.k + b.k == c.k && c.upper > s5.sub_constant * a.lower * b.lower * (1.0 + 1e-12)) holds = false;
      }
    }
  }
  double ratio = s5.sub_constant / s4.sub_constant;
  r.passed = converged && holds && std::isfinite(s5.sub_constant) && ratio >= 0.5 && ratio <= 2.0;
  r.detail = series_detail(s) + "C4=" + g6(s4.sub_constant) + " C5=" + g6(s5.sub_constant);
  return r;
}

CriterionResult c8_supermult(Context& ctx) {
  CriterionResult r{8, "supermultiplicativity", true, "", 0};
  const ScaleSeries& s = carpet_series(ctx);
  ScaleSeries s4 = capped(s, 4), s5 = capped(s, 5);
  double ratio = s5.super_constant / s4.super_constant;
  r.passed = s5.super_constant >= 1e-3 && s4.super_constant >= 1e-3 && ratio >= 0.5 && ratio <= 2.0;
  r.detail = "C'4=" + g6(s4.super_constant) + " C'5=" + g6(s5.super_constant);
  return r;
}

CriterionResult c9_mod1_growth(Context& ctx) {
  CriterionResult r{9, "Mod_1 growth on the carpet", true, "", 0};
  AnalysisOptions ao;
  ao.solver = ctx.solver;
  ScaleSeries s = scale_series(SpaceTag::carpet, CurveFamilySpec::diam_at_least(0.5), 1.0, 2, 5, 1e-3, ao);
  for (std::size_t i = 0; i + 1 < s.entries.size(); ++i) {
    if (!(s.entries[i + 1].lower > s.entries[i].upper)) r.passed = false;
  }
  r.detail = series_detail(s);
  return r;
}

CriterionResult c10_qm(Context& ctx) {
  CriterionResult r{10, "Q_M brackets", true, "", 0};
  AnalysisOptions ao;
  ao.solver = ctx.solver;
  QmEstimate sq = estimate_qm(SpaceTag::square, CurveFamilySpec::left_right(), 4, 1.5, 2.5, 0.1, 1e-4, ao);
  bool sq_ok = !sq.inconclusive && sq.p_lo <= 2.0 && sq.p_hi >= 2.0 && sq.p_hi - sq.p_lo <= 0.1;
  auto t0 = std::chrono::steady_clock::now();
  const double upper = std::log(8.0) / std::log(3.0);
  QmEstimate cp = estimate_qm(SpaceTag::carpet, CurveFamilySpec::left_right(), 5, 1.1, upper, 0.1, 1e-3, ao);
  double secs = seconds_since(t0);
  log_line(ctx, "  carpet sweep " + fmt("%.1f", secs) + " s");
  bool cp_ok = !cp.inconclusive && cp.p_lo > 1.0 && cp.p_hi <= 1.8928;
  r.passed = sq_ok && cp_ok && secs < 2700.0;
  r.detail = "square [" + fmt("%.4f", sq.p_lo) + "," + fmt("%.4f", sq.p_hi) + "]" + (sq.inconclusive ? "?" : "") +
             " carpet [" + fmt("%.4f", cp.p_lo) + "," + fmt("%.4f", cp.p_hi) + "]" + (cp.inconclusive ? "?" : "");
  if (secs >= 2700.0) r.detail += " runtime limit exceeded";
  return r;
}

std::vector<Point> random_polyline(SplitMix64& rng, int points) {
  std::vector<Point> w;
  for (int i = 0; i < points; ++i) w.push_back({rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), 0.0});
  return w;
}

CriterionResult c11_symmetrization(Context& ctx) {
  CriterionResult r{11, "symmetrization transfer", true, "", 0};
  SplitMix64 rng(ctx.opt.seed ^ 0xBBBBu);
  const double p = 2.0;
  const int ell = 1;
  const double d0 = 2.0 * std::pow(3.0, -ell);
  int failures = 0;
  double worst_len = INFINITY, worst_mass = 0.0;
  for (int i = 0; i < 10; ++i) {
    int k = i < 5 ? 3 : 4;
    GraphApproximation g = build_carpet(k);
    FoldingMap fm = build_folding(g, ell);
    double eps = rng.uniform(d0, 0.9);
    auto spec = CurveFamilySpec::tube(random_polyline(rng, 2 + static_cast<int>(rng.below(2))), eps);
    auto sol = modulus(g, spec, p, 1e-3, ctx.solver);
    if (sol.status == SolveStatus::empty_family) continue;
    Density sym = symmetrize(sol.density, fm);
    std::vector<double> scaled(sym.values);
    for (double& x : scaled) x *= fm.max_overlap;
    double len = 0.0;
    bool adm = admissible(g, resolve(CurveFamilySpec::diam_at_least(d0), g), scaled, 1.0 - 1e-9, &len);
    double factor = std::pow(static_cast<double>(fm.tile_count() * fm.group.size()), p);
    double ratio = mass(sym, p) / (factor * mass(sol.density, p));
    worst_len = std::min(worst_len, len);
    worst_mass = std::max(worst_mass, ratio);
    if (!adm || ratio > 1.0 + 1e-12) ++failures;
  }
  r.passed = failures == 0;
  r.detail = "failures=" + std::to_string(failures) + " min_length=" + g6(worst_len) +
             " worst_mass_ratio=" + g6(worst_mass);
  return r;
}

// Shortest hop path between two cells.
DiscreteCurve hop_path(const GraphApproximation& g, int s, int t) {
  std::vector<int> parent(g.size(), -2);
  std::queue<int> q;
  parent[static_cast<std::size_t>(s)] = -1;
  q.push(s);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    if (u == t) break;
    for (int w : g.neighbors(u)) {
      if (parent[static_cast<std::size_t>(w)] != -2) continue;
      parent[static_cast<std::size_t>(w)] = u;
      q.push(w);
    }
  }
  DiscreteCurve c;
  for (int v = t; v != -1; v = parent[static_cast<std::size_t>(v)]) c.cells.push_back(v);
  std::reverse(c.cells.begin(), c.cells.end());
  return c;
}

// Random polyline whose densified points all lie in cells of g.
std::vector<Point> polyline_in_space(SplitMix64& rng, const GraphApproximation& g, int points) {
  const double step = g.scale() / 4;
  while (true) {
    auto w = random_polyline(rng, points);
    bool inside = true;
    for (const Point& q : densify_polyline(w, step, g.dim())) {
      bool hit = false;
      for (const Cell& c : g.cells()) {
        bool in = true;
        for (int i = 0; i < g.dim(); ++i) in = in && std::abs(q[i] - c.center[i]) <= c.half_width + 1e-12;
        if (in) {
          hit = true;
          break;
        }
      }
      if (!hit) {
        inside = false;
        break;
      }
    }
    if (inside) return w;
  }
}

double center_diameter(const DiscreteCurve& c, const GraphApproximation& g) {
  double d = 0.0;
  for (int a : c.cells) {
    for (int b : c.cells) d = std::max(d, distance(g.cell(a).center, g.cell(b).center, g.dim()));
  }
  return d;
}

CriterionResult c12_lifting(Context& ctx) {
  CriterionResult r{12, "curve lifting", true, "", 0};
  SplitMix64 rng(ctx.opt.seed ^ 0xCCCCu);
  GraphApproximation g = build_carpet(3);
  FoldingMap fm = build_folding(g, 1);
  const double bound = lift_bound(fm);
  const double small_diam = 2.0 * std::pow(3.0, -fm.base_level);
  const double step = std::pow(3.0, -fm.fine_level) / 2;
  int spanning = 0, lifts = 0, failures = 0, small = 0, small_failures = 0;
  double worst = 0.0;
  for (int attempt = 0; attempt < 5000 && spanning < 20; ++attempt) {
    int s = static_cast<int>(rng.below(g.size())), t = static_cast<int>(rng.below(g.size()));
    DiscreteCurve gamma = hop_path(g, s, t);
    if (classify_curve(gamma, fm) != CurveClass::spanning) continue;
    ++spanning;
    for (int j = 0; j < 5; ++j) {
      auto eta = polyline_in_space(rng, g, 2 + static_cast<int>(rng.below(2)));
      ++lifts;
      try {
        DiscreteCurve lifted = lift_curve(gamma, eta, fm, g);
        auto copies = reflected_copies(gamma, eta, fm, g);
        std::set<int> allowed(copies.begin(), copies.end());
        bool ok = !lifted.cells.empty();
        for (std::size_t i = 0; i < lifted.cells.size(); ++i) {
          if (!allowed.count(lifted.cells[i])) ok = false;
          if (i > 0 && lifted.cells[i] != lifted.cells[i - 1] && !g.adjacent(lifted.cells[i - 1], lifted.cells[i])) {
            ok = false;
          }
        }
        double d = ordered_waypoint_distance(lifted, g, eta, step);
        worst = std::max(worst, d);
        if (!ok || d > bound + 1e-12) ++failures;
      } catch (const Error&) {
        ++failures;
      }
    }
  }
  // Short random walks classified as small.
  for (int attempt = 0; attempt < 2000; ++attempt) {
    DiscreteCurve c;
    c.cells.push_back(static_cast<int>(rng.below(g.size())));
    int len = 1 + static_cast<int>(rng.below(12));
    for (int i = 1; i < len; ++i) {
      auto nb = g.neighbors(c.cells.back());
      c.cells.push_back(nb[rng.below(nb.size())]);
    }
    if (classify_curve(c, fm) != CurveClass::small) continue;
    ++small;
    if (center_diameter(c, g) > small_diam + 1e-12) ++small_failures;
  }
  r.passed = spanning == 20 && failures == 0 && small_failures == 0 && small > 0;
  r.detail = "spanning=" + std::to_string(spanning) + " lifts=" + std::to_string(lifts) +
             " failures=" + std::to_string(failures) + " worst=" + g6(worst) + " bound=" + g6(bound) +
             " small=" + std::to_string(small) + " small_failures=" + std::to_string(small_failures);
  return r;
}

CriterionResult c13_annulus(Context& ctx) {
  CriterionResult r{13, "annulus-chain bound", true, "", 0};
  const double p = 2.0, tol = 1e-3;
  int failures = 0;
  // Several configurations on the square at k = 4.
  {
    GraphApproximation g = build_square(4);
    const double s = g.scale();
    struct Conf {
      Box a;
      CellSet b;
    };
    std::vector<Conf> confs = {
        {Box{{27 * s, 40 * s, 0}, {29 * s, 42 * s, 1}}, CellSet::side(0, 1.0)},
        {Box{{10 * s, 10 * s, 0}, {12 * s, 12 * s, 1}}, CellSet::side(1, 1.0)},
        {Box{{40 * s, 20 * s, 0}, {41 * s, 21 * s, 1}}, CellSet::side(1, 1.0)},
    };
    for (const auto& c : confs) {
      auto rep = annulus_chain_bound(g, CellSet::from_box(c.a, CellSet::Mode::within), c.b, p, tol, std::nullopt,
                                     ctx.solver);
      if (rep.bound < rep.direct_lower) ++failures;
      r.detail += "k4 n=" + std::to_string(rep.balls) + " bound=" + g6(rep.bound) + " direct=" + g6(rep.direct_lower) +
                  "; ";
    }
  }
  GraphApproximation g = build_square(5);
  const double s = g.scale();
  CellSet a = CellSet::from_box(Box{{60 * s, 120 * s, 0}, {62 * s, 122 * s, 1}}, CellSet::Mode::within);
  CellSet b = CellSet::side(0, 1.0);
  double prev = INFINITY;
  bool decreasing = true;
  for (int n = 2; n <= 4; ++n) {
    auto rep = annulus_chain_bound(g, a, b, p, tol, n, ctx.solver);
    if (rep.bound < rep.direct_lower) ++failures;
    if (!(rep.bound < prev)) decreasing = false;
    prev = rep.bound;
    r.detail += "k5 n=" + std::to_string(n) + " bound=" + g6(rep.bound) + " direct=" + g6(rep.direct_lower) + "; ";
  }
  r.passed = failures == 0 && decreasing;
  return r;
}

CriterionResult c14_rectangles(Context& ctx) {
  CriterionResult r{14, "rectangle reciprocity", true, "", 0};
  auto sq = rect_product(build_square(3), Box{{0, 0, 0}, {1, 1, 1}}, 1e-4, ctx.solver);
  auto rect = rect_product(build_square(4), Box{{0, 1.0 / 3, 0}, {2.0 / 3, 2.0 / 3, 1}}, 1e-4, ctx.solver);
  r.passed = std::abs(sq.product - 1.0) <= 0.05 && std::abs(rect.product - 1.0) <= 0.1;
  r.detail = "square " + g6(sq.horizontal) + "*" + g6(sq.vertical) + "=" + g6(sq.product) + " rect2:1 " +
             g6(rect.horizontal) + "*" + g6(rect.vertical) + "=" + g6(rect.product);
  return r;
}

CriterionResult c15_ball_pairs(Context& ctx) {
  CriterionResult r{15, "ball-pair hypothesis", true, "", 0};
  AnalysisOptions ao;
  ao.solver = ctx.solver;
  struct Run {
    SpaceTag space;
    double p;
  };
  for (Run run : {Run{SpaceTag::square, 2.0}, Run{SpaceTag::carpet, 1.75}}) {
    auto rep = ball_pair_check(run.space, run.p, 1.0, 6.0, 20, {2, 3, 4}, ctx.opt.seed, 1e-3, ao);
    double lo = *std::min_element(rep.m_hat_by_k.begin(), rep.m_hat_by_k.end());
    double hi = *std::max_element(rep.m_hat_by_k.begin(), rep.m_hat_by_k.end());
    bool ok = lo > 0.0 && (hi - lo) < 0.5 * lo;
    r.passed = r.passed && ok;
    r.detail += to_string(run.space) + " p=" + g6(run.p) + " m_hat_by_k=";
    for (double m : rep.m_hat_by_k) r.detail += g6(m) + ",";
    r.detail += " ";
  }
  return r;
}

}  // namespace

std::vector<DiscreteCurve> minimal_connect_curves(const GraphApproximation& g, const ResolvedFamily& family,
                                                  std::size_t limit, bool& ok) {
  ok = true;
  std::vector<DiscreteCurve> out;
  if (family.kind != FamilyKind::connect && family.kind != FamilyKind::cross_rect) {
    throw CapabilityError("reference curves need a connecting family");
  }
  if (family.empty) return out;
  std::vector<char> is_src(g.size(), 0), is_dst(g.size(), 0), on_path(g.size(), 0);
  std::vector<int> blocked(g.size(), 0);  // neighbors on the path, excluding the last cell
  for (int v : family.sources) is_src[static_cast<std::size_t>(v)] = 1;
  for (int v : family.targets) is_dst[static_cast<std::size_t>(v)] = 1;
  std::vector<int> path;
  std::function<void()> extend = [&]() {
    if (!ok) return;
    int u = path.back();
    for (int w : g.neighbors(u)) {
      auto wi = static_cast<std::size_t>(w);
      if (on_path[wi] || is_src[wi] || !family.in_region(w) || blocked[wi] > 0) continue;
      if (is_dst[wi]) {
        DiscreteCurve c;
        c.cells = path;
        c.cells.push_back(w);
        out.push_back(std::move(c));
        if (out.size() > limit) {
          ok = false;
          return;
        }
        continue;
      }
      // w joins; every neighbor of u becomes blocked for later cells.
      for (int x : g.neighbors(u)) ++blocked[static_cast<std::size_t>(x)];
      on_path[wi] = 1;
      path.push_back(w);
      extend();
      path.pop_back();
      on_path[wi] = 0;
      for (int x : g.neighbors(u)) --blocked[static_cast<std::size_t>(x)];
      if (!ok) return;
    }
  };
  for (int s : family.sources) {
    if (!family.in_region(s)) continue;
    if (is_dst[static_cast<std::size_t>(s)]) {
      out.push_back(DiscreteCurve{{s}});
      continue;
    }
    path = {s};
    on_path[static_cast<std::size_t>(s)] = 1;
    extend();
    on_path[static_cast<std::size_t>(s)] = 0;
    if (!ok) return {};
  }
  return out;
}

ReferenceModulus reference_modulus(const GraphApproximation& g, const ResolvedFamily& family, double p, double tol,
                                   std::size_t curve_limit) {
  ReferenceModulus ref;
  if (!(p > 1.0)) throw ExponentError("reference modulus needs p > 1");
  bool ok = true;
  auto curves = minimal_connect_curves(g, family, curve_limit, ok);
  if (!ok) return ref;
  ref.curves = curves.size();
  if (curves.empty()) {
    ref.ok = true;
    return ref;
  }
  const double q = p / (p - 1.0);
  const std::size_t m = curves.size(), n = g.size();
  // Minimize G(mu) = sum_v eta_v^q over the simplex, eta = N^T mu.
  auto eta_of = [&](const std::vector<double>& mu) {
    std::vector<double> eta(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      for (int v : curves[i].cells) eta[static_cast<std::size_t>(v)] += mu[i];
    }
    return eta;
  };
  auto value = [&](const std::vector<double>& eta) {
    double s = 0.0;
    for (double e : eta) s += std::pow(e, q);
    return s;
  };
  auto gradient = [&](const std::vector<double>& eta) {
    std::vector<double> gr(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (int v : curves[i].cells) s += std::pow(eta[static_cast<std::size_t>(v)], q - 1.0);
      gr[i] = q * s;
    }
    return gr;
  };
  // Bounds from the current measure: lower = ||eta||_q^-p, upper from the dual density.
  auto bounds = [&](const std::vector<double>& eta) {
    double gq = value(eta);
    double lower = std::pow(gq, -p / q);
    std::vector<double> rho(n);
    for (std::size_t v = 0; v < n; ++v) rho[v] = std::pow(eta[v], q - 1.0);
    double min_len = INFINITY;
    for (const auto& c : curves) min_len = std::min(min_len, rho_length(c, rho));
    double upper = mass(rho, p) / std::pow(min_len, p);
    return std::make_pair(lower, upper);
  };
  std::vector<double> x(m, 1.0 / static_cast<double>(m)), y = x, x_prev = x;
  double t = 1.0, step = 1.0;
  std::vector<double> eta = eta_of(x);
  double best_lower = 0.0, best_upper = INFINITY;
  for (int it = 0; it < 200000; ++it) {
    std::vector<double> ey = eta_of(y);
    double fy = value(ey);
    auto gr = gradient(ey);
    std::vector<double> xn(m);
    // Backtracking on the projected step.
    for (;;) {
      for (std::size_t i = 0; i < m; ++i) xn[i] = y[i] - step * gr[i];
      project_simplex(xn);
      std::vector<double> en = eta_of(xn);
      double fx = value(en);
      double lin = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        double d = xn[i] - y[i];
        lin += gr[i] * d;
        sq += d * d;
      }
      if (fx <= fy + lin + sq / (2.0 * step) + 1e-15 * std::abs(fy) || step < 1e-20) {
        eta = std::move(en);
        break;
      }
      step *= 0.5;
    }
    double fx_prev = value(eta_of(x_prev));
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    // Adaptive restart when the objective goes up.
    bool restart = value(eta) > fx_prev;
    for (std::size_t i = 0; i < m; ++i) {
      y[i] = restart ? xn[i] : xn[i] + ((t - 1.0) / t_next) * (xn[i] - x_prev[i]);
    }
    t = restart ? 1.0 : t_next;
    x_prev = xn;
    x = xn;
    step *= 1.5;
    if (it % 20 == 0) {
      auto [lo, up] = bounds(eta);
      best_lower = std::max(best_lower, lo);
      best_upper = std::min(best_upper, up);
      if (best_upper - best_lower <= tol * best_upper) break;
    }
  }
  ref.lower = best_lower;
  ref.upper = best_upper;
  ref.ok = best_upper - best_lower <= tol * best_upper;
  return ref;
}

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
  Context ctx;
  ctx.opt = options;
  ctx.solver = base_solver(options);
  using Fn = CriterionResult (*)(Context&);
  static const Fn table[] = {c1_grid_identity, c2_min_cut,       c3_brute_force,  c4_duality,
                             c5_monotonicity,  c6_robustness,    c7_submult,      c8_supermult,
                             c9_mod1_growth,   c10_qm,           c11_symmetrization, c12_lifting,
                             c13_annulus,      c14_rectangles,   c15_ball_pairs};
  std::vector<CriterionResult> out;
  for (int id = 1; id <= 15; ++id) {
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), id) == options.only.end()) {
      continue;
    }
    auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = table[id - 1](ctx);
    } catch (const std::exception& e) {
      r.id = id;
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = seconds_since(t0);
    log_line(ctx, "criterion " + std::to_string(id) + (r.passed ? " PASS " : " FAIL ") + fmt("%.1f s", r.seconds));
    out.push_back(std::move(r));
  }
  return out;
}

std::string acceptance_table(const std::vector<CriterionResult>& results) {
  std::string out;
  for (const auto& r : results) {
    char head[96];
    std::snprintf(head, sizeof head, "%-2d %-34s %s  ", r.id, r.name.c_str(), r.passed ? "PASS" : "FAIL");
    out += head + r.detail + "\n";
  }
  return out;
}

}  // namespace modlab
