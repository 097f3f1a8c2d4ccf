#include "modlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <map>
#include <queue>
#include <set>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/boykov_kolmogorov_max_flow.hpp>

#include "modlab/errors.hpp"
#include "modlab/symmetry.hpp"

namespace modlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();


struct ActiveCurve {
  std::vector<int> path;
  std::vector<int> cells;  // sorted, distinct
  double lambda = 0.0;
};

// Restricted program min sum rho^p s.t. L_rho(gamma) >= 1 over the active curves,
// solved in the dual by cyclic coordinate ascent on the multipliers.
class Restricted {
 public:
  explicit Restricted(std::size_t n) : s_(n, 0.0), rho_(n, 0.0) {}

  void set_exponent(double p) {
    p_ = p;
    r_ = 1.0 / (p - 1.0);
    refresh();
  }

  bool add(const std::vector<int>& path) {
    std::vector<int> cells = path;
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    if (!keys_.insert(cells).second) return false;
    curves_.push_back({path, std::move(cells), 0.0});
    return true;
  }

  // Cycles through the curves until no multiplier moves the constraint residual by
  // more than tol. Returns false when the sweep cap was hit.
  bool solve(double tol, long max_sweeps) {
    refresh();
    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
      double worst = 0.0;
      for (auto& c : curves_) worst = std::max(worst, step(c, tol));
      if (worst <= tol) return true;
    }
    return false;
  }

  // Dual objective at the best rescaling of the multipliers (p > 1).
  double lower_bound() const {
    double A = 0.0;
    for (const auto& c : curves_) A += c.lambda;
    double B = 0.0;
    for (double x : rho_) B += std::pow(x, p_);
    if (A <= 0.0 || B <= 0.0) return 0.0;
    return (A / p_) * std::exp((p_ - 1.0) * std::log(A / (p_ * B)));
  }

  const std::vector<double>& rho() const { return rho_; }
  bool any_positive() const {
    return std::any_of(curves_.begin(), curves_.end(), [](const ActiveCurve& c) { return c.lambda > 0.0; });
  }
  std::vector<DiscreteCurve> support() const {
    std::vector<DiscreteCurve> out;
    for (const auto& c : curves_) {
      if (c.lambda > 0.0) out.push_back(DiscreteCurve{c.path});
    }
    return out;
  }
  std::size_t size() const { return curves_.size(); }

 private:
  double rho_of(double s) const {
    if (s <= 0.0) return 0.0;
    if (p_ == 2.0) return 0.5 * s;
    return std::pow(s / p_, r_);
  }
  double drho_of(double s) const {
    if (s <= 0.0) return r_ >= 1.0 ? 0.0 : kInf;
    if (p_ == 2.0) return 0.5;
    return r_ / p_ * std::pow(s / p_, r_ - 1.0);
  }

  void refresh() {
    std::fill(s_.begin(), s_.end(), 0.0);
    for (const auto& c : curves_) {
      if (c.lambda <= 0.0) continue;
      for (int v : c.cells) s_[static_cast<std::size_t>(v)] += c.lambda;
    }
    for (std::size_t v = 0; v < s_.size(); ++v) rho_[v] = rho_of(s_[v]);
  }

  double residual(const ActiveCurve& c, double x) const {
    double f = -1.0;
    for (int v : c.cells) f += rho_of(s_[static_cast<std::size_t>(v)] + x);
    return f;
  }

  // Maximizes the dual in lambda_c; returns the residual it started from.
  double step(ActiveCurve& c, double tol) {
    double L = 0.0;
    double smin = kInf, smax = 0.0;
    for (int v : c.cells) {
      double sv = s_[static_cast<std::size_t>(v)];
      L += rho_[static_cast<std::size_t>(v)];
      smin = std::min(smin, sv);
      smax = std::max(smax, sv);
    }
    double viol = c.lambda > 0.0 ? std::abs(1.0 - L) : std::max(0.0, 1.0 - L);
    if (viol <= 0.25 * tol) return viol;
    const double len = static_cast<double>(c.cells.size());
    double delta;
    if (p_ == 2.0) {
      delta = std::max(2.0 * (1.0 - L) / len, -c.lambda);
    } else {
      // Every term equals 1/len at s = p len^(1-p); this brackets the root.
      const double s_eq = p_ * std::pow(len, 1.0 - p_);
      double lo, hi, fx = L - 1.0;
      if (fx < 0.0) {
        lo = 0.0;
        hi = std::max(0.0, s_eq - smin);
      } else {
        hi = 0.0;
        lo = std::max(-c.lambda, s_eq - smax);
        if (lo == -c.lambda && residual(c, lo) >= 0.0) {
          apply(c, lo);
          return viol;
        }
      }
      double x = 0.0;
      double df = 0.0;
      for (int v : c.cells) {
        auto i = static_cast<std::size_t>(v);
        if (s_[i] > 0.0) df += r_ * rho_[i] / s_[i];
      }
      const double target = std::max(1e-15, 1e-3 * tol);
      scratch_.resize(c.cells.size());
      bool fresh = false;
      for (int it = 0; it < 60; ++it) {
        double nx = (df > 0.0 && std::isfinite(df)) ? x - fx / df : lo - 1.0;
        if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
        x = nx;
        fx = -1.0;
        df = 0.0;
        for (std::size_t j = 0; j < c.cells.size(); ++j) {
          double sv = s_[static_cast<std::size_t>(c.cells[j])] + x;
          double rv = sv > 0.0 ? std::pow(sv / p_, r_) : 0.0;
          scratch_[j] = rv;
          fx += rv;
          if (sv > 0.0) df += r_ * rv / sv;
        }
        fresh = true;
        if (fx < 0.0) lo = x;
        else hi = x;
        if (std::abs(fx) <= target || hi - lo <= 1e-16 * (std::abs(x) + smax + 1e-300)) break;
      }
      delta = x;
      if (fresh && delta > -c.lambda) {
        c.lambda += delta;
        for (std::size_t j = 0; j < c.cells.size(); ++j) {
          auto i = static_cast<std::size_t>(c.cells[j]);
          s_[i] = std::max(0.0, s_[i] + delta);
          rho_[i] = scratch_[j];
        }
        return viol;
      }
    }
    delta = std::max(delta, -c.lambda);
    apply(c, delta);
    return viol;
  }

  void apply(ActiveCurve& c, double delta) {
    if (delta == 0.0) return;
    c.lambda += delta;
    if (c.lambda < 0.0) c.lambda = 0.0;
    for (int v : c.cells) {
      auto i = static_cast<std::size_t>(v);
      s_[i] = std::max(0.0, s_[i] + delta);
      rho_[i] = rho_of(s_[i]);
    }
  }

  double p_ = 2.0;
  double r_ = 1.0;
  std::vector<ActiveCurve> curves_;
  std::set<std::vector<int>> keys_;
  std::vector<double> s_;
  std::vector<double> rho_;
  std::vector<double> scratch_;
};

// Restricted covering program min sum(rho) s.t. L_rho(gamma) >= 1 over the active
// curves, solved by a restarted primal-dual hybrid gradient method. Cells in one
// orbit share a variable weighted by the orbit size, so each curve stands for all
// of its images. The best primal and dual iterates are kept as certificates.
class CoveringLP {
 public:
  CoveringLP(std::vector<int> orbit, std::size_t orbits) : orbit_(std::move(orbit)), n_(orbits), w_(orbits, 0.0) {
    for (int o : orbit_) w_[static_cast<std::size_t>(o)] += 1.0;
    x_.assign(n_, 0.0);
    best_x_.assign(n_, 0.0);
  }

  bool add(const std::vector<int>& path) {
    std::map<int, double> count;
    std::vector<int> cells = path;
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    for (int v : cells) count[orbit_[static_cast<std::size_t>(v)]] += 1.0;
    Row row;
    std::vector<int> key;
    for (auto [o, c] : count) {
      row.idx.push_back(o);
      row.coef.push_back(c);
      key.push_back(o);
      key.push_back(static_cast<int>(c));
    }
    if (!keys_.insert(std::move(key)).second) return false;
    paths_.push_back(path);
    rows_.push_back(std::move(row));
    y_.push_back(0.0);
    best_y_.push_back(0.0);
    norm_ = 0.0;
    return true;
  }

  std::size_t size() const { return rows_.size(); }

  void solve(double tol, long max_iters) {
    const std::size_t m = rows_.size();
    if (m == 0) return;
    if (norm_ == 0.0) estimate_norm();
    if (weight_ == 0.0) weight_ = std::sqrt(static_cast<double>(n_) / static_cast<double>(m));
    const double eta = 0.9 / norm_;
    std::vector<double> kx(m), kty(n_), xn(n_), xbar(n_);
    std::vector<double> sx(n_, 0.0), sy(m, 0.0);
    std::vector<double> x0 = x_, y0 = y_;
    long since = 0;
    double restart_score = kInf;
    best_upper_ = kInf;
    best_lower_ = 0.0;
    score(x_, y_);
    restart_score = gap();
    for (long it = 1; it <= max_iters; ++it) {
      const double tau = eta / weight_, sigma = eta * weight_;
      apply_t(y_, kty);
      for (std::size_t v = 0; v < n_; ++v) {
        xn[v] = std::max(0.0, x_[v] - tau * (w_[v] - kty[v]));
        xbar[v] = 2.0 * xn[v] - x_[v];
      }
      apply(xbar, kx);
      for (std::size_t c = 0; c < m; ++c) y_[c] = std::max(0.0, y_[c] + sigma * (1.0 - kx[c]));
      x_.swap(xn);
      for (std::size_t v = 0; v < n_; ++v) sx[v] += x_[v];
      for (std::size_t c = 0; c < m; ++c) sy[c] += y_[c];
      ++since;
      if (it % 64 != 0 && it != max_iters) continue;
      score(x_, y_);
      std::vector<double> ax(n_), ay(m);
      for (std::size_t v = 0; v < n_; ++v) ax[v] = sx[v] / static_cast<double>(since);
      for (std::size_t c = 0; c < m; ++c) ay[c] = sy[c] / static_cast<double>(since);
      double cur = pair_gap(x_, y_);
      double avg = pair_gap(ax, ay);
      score(ax, ay);
      if (gap() <= tol) break;
      // Restart from the better of the current and averaged iterates once the
      // gap has decayed enough, re-balancing the primal weight.
      double cand = std::min(cur, avg);
      if (cand <= 0.2 * restart_score || since >= 4096) {
        if (avg < cur) {
          x_ = ax;
          y_ = ay;
        }
        double dx = 0.0, dy = 0.0;
        for (std::size_t v = 0; v < n_; ++v) dx += (x_[v] - x0[v]) * (x_[v] - x0[v]);
        for (std::size_t c = 0; c < m; ++c) dy += (y_[c] - y0[c]) * (y_[c] - y0[c]);
        if (dx > 1e-30 && dy > 1e-30) weight_ = std::exp(0.5 * std::log(std::sqrt(dy / dx)) + 0.5 * std::log(weight_));
        x0 = x_;
        y0 = y_;
        std::fill(sx.begin(), sx.end(), 0.0);
        std::fill(sy.begin(), sy.end(), 0.0);
        since = 0;
        restart_score = cand;
      }
    }
  }

  // sum(y) / max relative load: the dual measure scaled to a feasible packing.
  double lower_bound() const { return best_lower_; }

  // Best primal iterate on cells, scaled so every active curve has length >= 1.
  std::vector<double> density() const {
    std::vector<double> out(orbit_.size());
    for (std::size_t v = 0; v < orbit_.size(); ++v) out[v] = best_x_[static_cast<std::size_t>(orbit_[v])];
    return out;
  }

  std::vector<DiscreteCurve> support() const {
    std::vector<DiscreteCurve> out;
    for (std::size_t c = 0; c < rows_.size(); ++c) {
      if (best_y_[c] > 0.0) out.push_back(DiscreteCurve{paths_[c]});
    }
    return out;
  }

 private:
  struct Row {
    std::vector<int> idx;
    std::vector<double> coef;
  };

  void apply(const std::vector<double>& x, std::vector<double>& out) const {
    for (std::size_t c = 0; c < rows_.size(); ++c) {
      const Row& r = rows_[c];
      double acc = 0.0;
      for (std::size_t j = 0; j < r.idx.size(); ++j) acc += r.coef[j] * x[static_cast<std::size_t>(r.idx[j])];
      out[c] = acc;
    }
  }
  void apply_t(const std::vector<double>& y, std::vector<double>& out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t c = 0; c < rows_.size(); ++c) {
      if (y[c] == 0.0) continue;
      const Row& r = rows_[c];
      for (std::size_t j = 0; j < r.idx.size(); ++j) out[static_cast<std::size_t>(r.idx[j])] += r.coef[j] * y[c];
    }
  }

  void estimate_norm() {
    std::vector<double> x(n_, 1.0), kx(rows_.size()), ktkx(n_);
    double lambda = 1.0;
    for (int it = 0; it < 40; ++it) {
      apply(x, kx);
      apply_t(kx, ktkx);
      double nrm = 0.0;
      for (double t : ktkx) nrm += t * t;
      nrm = std::sqrt(nrm);
      if (nrm == 0.0) break;
      double xn = 0.0;
      for (double t : x) xn += t * t;
      lambda = nrm / std::sqrt(xn);
      for (std::size_t v = 0; v < n_; ++v) x[v] = ktkx[v] / nrm;
    }
    norm_ = 1.05 * std::sqrt(lambda);
  }

  double upper_of(const std::vector<double>& x, double& scale) const {
    std::vector<double> kx(rows_.size());
    apply(x, kx);
    double minlen = kx.empty() ? kInf : *std::min_element(kx.begin(), kx.end());
    scale = minlen;
    if (!(minlen > 0.0)) return kInf;
    double total = 0.0;
    for (std::size_t v = 0; v < n_; ++v) total += w_[v] * x[v];
    return total / minlen;
  }
  double lower_of(const std::vector<double>& y) const {
    std::vector<double> load(n_, 0.0);
    apply_t(y, load);
    double total = 0.0, mx = 0.0;
    for (double t : y) total += t;
    for (std::size_t v = 0; v < n_; ++v) mx = std::max(mx, load[v] / w_[v]);
    return mx > 0.0 ? total / mx : 0.0;
  }
  double pair_gap(const std::vector<double>& x, const std::vector<double>& y) const {
    double sc;
    double u = upper_of(x, sc), l = lower_of(y);
    return std::isfinite(u) && u > 0.0 ? (u - l) / u : kInf;
  }
  void score(const std::vector<double>& x, const std::vector<double>& y) {
    double sc;
    double u = upper_of(x, sc);
    if (u < best_upper_) {
      best_upper_ = u;
      for (std::size_t v = 0; v < n_; ++v) best_x_[v] = x[v] / sc;
    }
    double l = lower_of(y);
    if (l > best_lower_) {
      best_lower_ = l;
      best_y_ = y;
    }
  }
  double gap() const { return std::isfinite(best_upper_) ? (best_upper_ - best_lower_) / best_upper_ : kInf; }

  std::vector<int> orbit_;
  std::size_t n_;
  std::vector<double> w_;
  std::vector<Row> rows_;
  std::vector<std::vector<int>> paths_;
  std::set<std::vector<int>> keys_;
  std::vector<double> x_, y_;
  std::vector<double> best_x_, best_y_;
  double best_upper_ = kInf, best_lower_ = 0.0;
  double norm_ = 0.0;
  double weight_ = 0.0;
};

std::vector<std::vector<int>> family_symmetries(const GraphApproximation& g, const ResolvedFamily& fam) {
  auto all = cell_automorphisms(g);
  if (all.size() <= 1 || fam.kind == FamilyKind::tube) return {all.front()};
  std::vector<std::vector<int>> out;
  const std::size_t n = g.size();
  std::vector<char> smask(n, 0), tmask(n, 0);
  for (int v : fam.sources) smask[static_cast<std::size_t>(v)] = 1;
  for (int v : fam.targets) tmask[static_cast<std::size_t>(v)] = 1;
  for (auto& perm : all) {
    bool keep = true;
    for (std::size_t v = 0; v < n && keep; ++v) {
      if (fam.in_region(static_cast<int>(v)) != fam.in_region(perm[v])) keep = false;
    }
    if (keep && fam.through) keep = perm[static_cast<std::size_t>(*fam.through)] == *fam.through;
    if (keep && fam.kind != FamilyKind::diam_at_least) {
      bool fixes = true, swaps = true;
      for (std::size_t v = 0; v < n; ++v) {
        auto w = static_cast<std::size_t>(perm[v]);
        if (smask[v] != smask[w] || tmask[v] != tmask[w]) fixes = false;
        if (smask[v] != tmask[w] || tmask[v] != smask[w]) swaps = false;
      }
      keep = fixes || swaps;
    }
    if (keep) out.push_back(std::move(perm));
  }
  return out;
}

std::vector<double> average_over(const std::vector<double>& rho, const std::vector<std::vector<int>>& perms) {
  if (perms.size() <= 1) return rho;
  std::vector<double> out(rho.size(), 0.0);
  for (const auto& perm : perms) {
    for (std::size_t v = 0; v < rho.size(); ++v) out[v] += rho[static_cast<std::size_t>(perm[v])];
  }
  const double inv = 1.0 / static_cast<double>(perms.size());
  for (double& x : out) x *= inv;
  return out;
}

// Exact Mod_1 for Connect-type families: minimum vertex cut between the end
// sets, certified by the matching number of vertex-disjoint curves.
ModulusSolution connect_min_cut(const GraphApproximation& g, const ResolvedFamily& fam, double tol) {
  using Traits = boost::adjacency_list_traits<boost::vecS, boost::vecS, boost::directedS>;
  using Net = boost::adjacency_list<
      boost::vecS, boost::vecS, boost::directedS,
      boost::property<boost::vertex_color_t, boost::default_color_type,
                      boost::property<boost::vertex_distance_t, long,
                                      boost::property<boost::vertex_predecessor_t, Traits::edge_descriptor>>>,
      boost::property<boost::edge_capacity_t, long,
                      boost::property<boost::edge_residual_capacity_t, long,
                                      boost::property<boost::edge_reverse_t, Traits::edge_descriptor>>>>;
  const int n = static_cast<int>(g.size());
  const long big = 4L * n + 4;
  Net net(static_cast<std::size_t>(2 * n + 2));
  auto cap = boost::get(boost::edge_capacity, net);
  auto res = boost::get(boost::edge_residual_capacity, net);
  auto rev = boost::get(boost::edge_reverse, net);
  auto add = [&](int u, int v, long c) {
    auto e = boost::add_edge(static_cast<std::size_t>(u), static_cast<std::size_t>(v), net).first;
    auto r = boost::add_edge(static_cast<std::size_t>(v), static_cast<std::size_t>(u), net).first;
    cap[e] = c;
    cap[r] = 0;
    rev[e] = r;
    rev[r] = e;
  };
  const int s = 2 * n, t = 2 * n + 1;
  for (int v = 0; v < n; ++v) {
    if (!fam.in_region(v)) continue;
    add(2 * v, 2 * v + 1, 1);
    for (int w : g.neighbors(v)) {
      if (fam.in_region(w)) add(2 * v + 1, 2 * w, big);
    }
  }
  for (int v : fam.sources) {
    if (fam.in_region(v)) add(s, 2 * v, big);
  }
  for (int v : fam.targets) {
    if (fam.in_region(v)) add(2 * v + 1, t, big);
  }
  const long flow = boost::boykov_kolmogorov_max_flow(net, static_cast<std::size_t>(s), static_cast<std::size_t>(t));

  ModulusSolution sol;
  sol.p = 1.0;
  sol.tol = tol;
  sol.iterations = 1;
  std::vector<double> rho(static_cast<std::size_t>(n), 0.0);
  if (flow == 0) {
    sol.status = SolveStatus::empty_family;
    sol.density = Density(std::move(rho));
    return sol;
  }
  // Source side of the residual network; cut cells have their split edge crossing it.
  std::vector<char> reach(static_cast<std::size_t>(2 * n + 2), 0);
  std::vector<std::size_t> stack{static_cast<std::size_t>(s)};
  reach[static_cast<std::size_t>(s)] = 1;
  while (!stack.empty()) {
    auto u = stack.back();
    stack.pop_back();
    for (auto [e, end] = boost::out_edges(u, net); e != end; ++e) {
      auto w = boost::target(*e, net);
      if (res[*e] > 0 && !reach[w]) {
        reach[w] = 1;
        stack.push_back(w);
      }
    }
  }
  for (int v = 0; v < n; ++v) {
    if (reach[static_cast<std::size_t>(2 * v)] && !reach[static_cast<std::size_t>(2 * v + 1)]) {
      rho[static_cast<std::size_t>(v)] = 1.0;
    }
  }
  // Flow decomposition into vertex-disjoint curves.
  auto flow_on = [&](const Traits::edge_descriptor& e) { return cap[e] - res[e]; };
  std::map<Traits::edge_descriptor, long> taken;
  for (long f = 0; f < flow; ++f) {
    std::vector<int> path;
    std::size_t u = static_cast<std::size_t>(s);
    while (u != static_cast<std::size_t>(t)) {
      bool moved = false;
      for (auto [e, end] = boost::out_edges(u, net); e != end; ++e) {
        if (cap[*e] <= 0 || flow_on(*e) - taken[*e] <= 0) continue;
        ++taken[*e];
        u = boost::target(*e, net);
        if (u < static_cast<std::size_t>(2 * n) && u % 2 == 0) path.push_back(static_cast<int>(u / 2));
        moved = true;
        break;
      }
      if (!moved) break;
    }
    if (!path.empty()) sol.active_curves.push_back(DiscreteCurve{std::move(path)});
  }
  sol.density = Density(std::move(rho));
  sol.upper = mass(sol.density, 1.0);
  sol.lower = static_cast<double>(flow);
  sol.status = sol.gap() <= tol ? SolveStatus::converged : SolveStatus::iteration_cap;
  return sol;
}

void check_arguments(double p, double tol) {
  if (!(p >= 1.0 && p <= 4.0)) throw ExponentError("p must lie in [1, 4]");
  if (!(tol >= 1e-10 && tol <= 1e-2)) throw BoundsError("tol must lie in [1e-10, 1e-2]");
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::iteration_cap: return "iteration_cap";
    case SolveStatus::empty_family: return "empty_family";
  }
  return "unknown";
}

double mass(std::span<const double> rho, double p) {
  if (!(p >= 1.0)) throw ExponentError("p must be at least 1");
  double total = 0.0;
  if (p == 1.0) {
    for (double x : rho) total += x;
  } else if (p == 2.0) {
    for (double x : rho) total += x * x;
  } else {
    for (double x : rho) total += std::pow(x, p);
  }
  return total;
}

double mass(const Density& rho, double p) { return mass(std::span<const double>(rho.values), p); }

ModulusSolution modulus(const GraphApproximation& g, const CurveFamilySpec& spec, double p, double tol,
                        const SolverOptions& options) {
  check_arguments(p, tol);
  return modulus(g, resolve(spec, g), p, tol, options);
}

ModulusSolution modulus(const GraphApproximation& g, const ResolvedFamily& fam, double p, double tol,
                        const SolverOptions& options) {
  check_arguments(p, tol);
  const std::size_t n = g.size();
  ModulusSolution sol;
  sol.p = p;
  sol.tol = tol;
  sol.spacing = fam.kind == FamilyKind::tube ? fam.spacing : 0.0;
  if (fam.empty) {
    sol.status = SolveStatus::empty_family;
    sol.density = Density(std::vector<double>(n, 0.0));
    return sol;
  }
  if (p == 1.0 && !fam.through && (fam.kind == FamilyKind::connect || fam.kind == FamilyKind::cross_rect)) {
    ModulusSolution cut = connect_min_cut(g, fam, tol);
    cut.spacing = sol.spacing;
    return cut;
  }

  auto perms = options.use_symmetry ? family_symmetries(g, fam) : std::vector<std::vector<int>>{};
  std::vector<int> reps;
  if (perms.size() > 1 && fam.kind == FamilyKind::diam_at_least && !fam.seed_net) {
    for (std::size_t v = 0; v < n; ++v) {
      bool minimal = true;
      for (const auto& perm : perms) minimal = minimal && perm[v] >= static_cast<int>(v);
      if (minimal) reps.push_back(static_cast<int>(v));
    }
  }

  const bool linear = p == 1.0;
  std::vector<int> orbit(n, -1);
  std::size_t orbits = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (orbit[v] >= 0) continue;
    if (!linear || perms.empty()) {
      orbit[v] = static_cast<int>(orbits++);
      continue;
    }
    for (const auto& perm : perms) orbit[static_cast<std::size_t>(perm[v])] = static_cast<int>(orbits);
    ++orbits;
  }
  Restricted R(n);
  CoveringLP lp(std::move(orbit), orbits);
  auto add_with_images = [&](const std::vector<int>& path) {
    if (linear) return lp.add(path) ? 1 : 0;
    auto add_one = [&](const std::vector<int>& c) { return R.add(c); };
    int added = add_one(path) ? 1 : 0;
    for (std::size_t h = 1; h < perms.size(); ++h) {
      std::vector<int> img(path.size());
      for (std::size_t i = 0; i < path.size(); ++i) img[i] = perms[h][static_cast<std::size_t>(path[i])];
      added += add_one(img) ? 1 : 0;
    }
    return added;
  };
  for (const auto& c : options.warm_start) {
    if (is_member(c, g, fam)) add_with_images(c.cells);
  }
  if (!linear) R.set_exponent(p);

  double best_upper = kInf;
  double best_lower = 0.0;
  std::vector<double> best_density(n, 0.0);
  long calls = 0;
  bool capped = false;
  const long max_sweeps = 200000;
  double inner_tol = 1e-2;
  bool probe_restricted = false;
  std::size_t offset = 0;
  const std::size_t source_count = reps.empty() ? n : reps.size();
  while (true) {
    bool have = linear ? lp.size() > 0 : R.any_positive();
    if (linear && have) {
      lp.solve(inner_tol, options.p1_lp_iterations);
    } else if (!linear) {
      R.solve(inner_tol, max_sweeps);
      have = R.any_positive();
    }
    std::vector<double> rho = have ? (linear ? lp.density() : R.rho()) : std::vector<double>(n, 1.0);
    rho = average_over(rho, perms);
    const double a = options.stabilization;
    const bool mixed = have && a > 0.0 && std::isfinite(best_upper) && !probe_restricted;
    if (mixed) {
      for (std::size_t v = 0; v < n; ++v) rho[v] = a * best_density[v] + (1.0 - a) * rho[v];
    }
    OracleOptions oo;
    oo.max_curves = options.cuts_per_round;
    oo.report_below = 1.0;
    oo.sources = reps;
    oo.workers = options.workers;
    oo.exact_min = calls == 0;
    // Every eighth scan is complete so the upper bound keeps improving.
    oo.stop_after = (calls + 1) % 8 == 0 ? 0 : options.partial_pricing * options.cuts_per_round;
    oo.start = offset;
    OracleBatch batch = separate(g, rho, fam, oo);
    offset = (offset + batch.scanned) % source_count;
    ++calls;
    if (calls == 1 && batch.empty) {
      sol.status = SolveStatus::empty_family;
      sol.iterations = calls;
      sol.density = Density(std::vector<double>(n, 0.0));
      return sol;
    }
    // With exact_min off, an empty batch certifies every curve has length >= 1.
    const double ell = batch.empty ? 1.0 : batch.min_length;
    if (batch.complete && ell > 0.0) {
      double up = mass(rho, p) / std::pow(ell, p);
      if (up < best_upper) {
        best_upper = up;
        for (std::size_t v = 0; v < n; ++v) best_density[v] = rho[v] / ell;
      }
    }
    best_lower = std::max(best_lower, linear ? lp.lower_bound() : R.lower_bound());
    const double gap = std::isfinite(best_upper) ? (best_upper - best_lower) / best_upper : kInf;
    if (options.log) {
      *options.log << "  call " << calls << (batch.complete ? "" : " partial") << " active " << (linear ? lp.size() : R.size()) << " min_length "
                   << (batch.empty ? 1.0 : batch.min_length) << " bracket [" << best_lower << ", " << best_upper
                   << "]" << std::endl;
    }
    if (gap <= tol) break;
    if (calls >= options.max_oracle_calls) {
      capped = true;
      break;
    }
    int added = 0;
    const bool seeding = !have;
    for (const auto& [len, curve] : batch.curves) {
      if (len < 1.0 || seeding) added += add_with_images(curve.cells);
    }
    probe_restricted = mixed && added == 0;
    if (probe_restricted) continue;
    if (added == 0) {
      inner_tol *= 0.1;
      if (inner_tol < 1e-14) {
        capped = true;
        break;
      }
    } else {
      inner_tol = std::min(inner_tol, std::max(0.1 * gap, 1e-13));
    }
  }

  sol.iterations = calls;
  sol.density = Density(std::move(best_density));
  sol.upper = mass(sol.density, p);
  sol.lower = std::min(best_lower, sol.upper);
  sol.active_curves = linear ? lp.support() : R.support();
  sol.status = (!capped && sol.gap() <= tol) ? SolveStatus::converged : SolveStatus::iteration_cap;
  return sol;
}

PointwiseReport pointwise_bound_check(const ModulusSolution& sol, const GraphApproximation& g,
                                      const CurveFamilySpec& spec, std::span<const int> sample,
                                      const SolverOptions& options) {
  if (sol.status != SolveStatus::converged || sol.tol > 1e-4) {
    throw PreconditionError("pointwise check needs a converged solve with tol <= 1e-4");
  }
  if (sol.density.size() != g.size()) throw ShapeError("solution does not match the approximation");
  ResolvedFamily fam = resolve(spec, g);
  PointwiseReport report;
  for (int v : sample) {
    if (v < 0 || static_cast<std::size_t>(v) >= g.size()) throw SpecError("sample cell out of range");
    ModulusSolution fv = modulus(g, through_cell(fam, v), sol.p, sol.tol, options);
    PointwiseRow row;
    row.cell = v;
    row.density = sol.density[static_cast<std::size_t>(v)];
    row.mod_fv = fv.upper;
    row.bound = std::pow(fv.upper, 1.0 / sol.p) + 10.0 * sol.tol;
    row.ok = row.density <= row.bound;
    report.passed = report.passed && row.ok;
    report.rows.push_back(row);
  }
  return report;
}

std::vector<DiscreteCurve> snap_curves(std::span<const DiscreteCurve> curves, const GraphApproximation& from,
                                       const GraphApproximation& g, const ResolvedFamily& family) {
  auto nearest = [&](const Point& z) {
    if (g.grid_side() > 0) {
      GridIndex idx{0, 0, 0};
      for (int i = 0; i < g.dim(); ++i) {
        idx[i] = std::clamp(static_cast<int>(std::floor(z[i] * g.grid_side())), 0, g.grid_side() - 1);
      }
      if (auto hit = g.find(idx)) return *hit;
    }
    int best = 0;
    double bd = kInf;
    for (const Cell& c : g.cells()) {
      double d = squared_distance(c.center, z, g.dim());
      if (d < bd) {
        bd = d;
        best = c.id;
      }
    }
    return best;
  };
  auto hop_path = [&](int a, int b) {
    std::vector<int> parent(g.size(), -2);
    std::queue<int> q;
    parent[static_cast<std::size_t>(a)] = -1;
    q.push(a);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      if (u == b) break;
      for (int w : g.neighbors(u)) {
        if (parent[static_cast<std::size_t>(w)] != -2 || !family.in_region(w)) continue;
        parent[static_cast<std::size_t>(w)] = u;
        q.push(w);
      }
    }
    std::vector<int> path;
    if (parent[static_cast<std::size_t>(b)] == -2) return path;
    for (int u = b; u >= 0; u = parent[static_cast<std::size_t>(u)]) path.push_back(u);
    std::reverse(path.begin(), path.end());
    return path;
  };
  std::vector<DiscreteCurve> out;
  for (const auto& c : curves) {
    std::vector<int> cells;
    bool broken = false;
    for (int v : c.cells) {
      int w = nearest(from.cell(v).center);
      if (cells.empty()) {
        cells.push_back(w);
        continue;
      }
      if (w == cells.back()) continue;
      auto seg = hop_path(cells.back(), w);
      if (seg.empty()) {
        broken = true;
        break;
      }
      cells.insert(cells.end(), seg.begin() + 1, seg.end());
    }
    if (broken || cells.empty()) continue;
    DiscreteCurve d{std::move(cells)};
    if (is_member(d, g, family)) out.push_back(std::move(d));
  }
  return out;
}

}  // namespace modlab
