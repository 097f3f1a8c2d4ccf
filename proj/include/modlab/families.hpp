#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "modlab/geometry.hpp"
#include "modlab/tiling.hpp"

namespace modlab {

// Chain of cells met by a continuum curve; consecutive cells are adjacent.
struct DiscreteCurve {
  std::vector<int> cells;

  bool operator==(const DiscreteCurve&) const = default;
};

// Nonnegative weight per cell.
struct Density {
  std::vector<double> values;

  Density() = default;
  explicit Density(std::vector<double> v);
  static Density constant(std::size_t n, double c) { return Density(std::vector<double>(n, c)); }
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

// A set of cells given by an axis-aligned box (cells meeting it, or cells inside it)
// or by explicit ids.
struct CellSet {
  enum class Mode { meets, within };

  std::optional<Box> box;
  std::vector<int> ids;
  Mode mode = Mode::meets;

  static CellSet from_box(const Box& b, Mode m = Mode::meets) { return CellSet{b, {}, m}; }
  static CellSet from_ids(std::vector<int> ids) { return CellSet{std::nullopt, std::move(ids), Mode::meets}; }
  // Cells touching the face {x_axis = value} of the unit cube.
  static CellSet side(int axis, double value);
};

std::vector<int> resolve_cells(const CellSet& set, const GraphApproximation& g);

enum class CrossAxis { horizontal, vertical };

struct ConnectSpec {
  CellSet a;
  CellSet b;
  std::optional<CellSet> region;
};

struct CrossRectSpec {
  Box rect;
  CrossAxis axis = CrossAxis::horizontal;
};

struct DiamAtLeastSpec {
  double d0 = 0.5;
  // Restrict shortest-path sources to a d0/4-separated net (faster, not exact).
  bool seed_net = false;
};

struct TubeSpec {
  std::vector<Point> waypoints;  // polyline vertices
  double epsilon = 0.0;
  std::optional<double> spacing;  // densification step, default epsilon/2
};

struct CurveFamilySpec {
  std::variant<ConnectSpec, CrossRectSpec, DiamAtLeastSpec, TubeSpec> variant;

  static CurveFamilySpec connect(CellSet a, CellSet b, std::optional<CellSet> region = std::nullopt) {
    return {ConnectSpec{std::move(a), std::move(b), std::move(region)}};
  }
  static CurveFamilySpec cross_rect(const Box& rect, CrossAxis axis) { return {CrossRectSpec{rect, axis}}; }
  static CurveFamilySpec diam_at_least(double d0) { return {DiamAtLeastSpec{d0, false}}; }
  static CurveFamilySpec tube(std::vector<Point> waypoints, double epsilon) {
    return {TubeSpec{std::move(waypoints), epsilon, std::nullopt}};
  }
  // Curves joining the x=0 and x=1 faces.
  static CurveFamilySpec left_right() { return connect(CellSet::side(0, 0.0), CellSet::side(0, 1.0)); }

  std::string variant_name() const;
};

enum class FamilyKind { connect, cross_rect, diam_at_least, tube };

// A family bound to concrete cell sets of one approximation.
struct ResolvedFamily {
  FamilyKind kind = FamilyKind::connect;
  bool empty = false;
  std::vector<int> sources;  // Connect / CrossRect
  std::vector<int> targets;
  std::vector<char> region;  // per-cell mask; empty means every cell
  double d0 = 0.0;
  bool seed_net = false;
  std::vector<Point> waypoints;  // densified, Tube only
  std::vector<std::vector<char>> waypoint_sets;
  double epsilon = 0.0;
  double spacing = 0.0;
  // Restricts to curves through this cell (the family F_v).
  std::optional<int> through;

  bool in_region(int v) const { return region.empty() || region[static_cast<std::size_t>(v)] != 0; }
};

ResolvedFamily resolve(const CurveFamilySpec& spec, const GraphApproximation& g);

// Copy of `family` restricted to curves meeting cell v.
ResolvedFamily through_cell(const ResolvedFamily& family, int v);

// Sum of rho over the distinct cells of the curve.
double rho_length(const DiscreteCurve& curve, std::span<const double> rho);

// True when `curve` is a chain of the graph belonging to the family.
bool is_member(const DiscreteCurve& curve, const GraphApproximation& g, const ResolvedFamily& family);

struct OracleResult {
  bool empty = true;
  DiscreteCurve curve;
  double length = 0.0;
};

OracleResult min_length_curve(const GraphApproximation& g, const Density& rho, const ResolvedFamily& family);

struct OracleOptions {
  // Additional near-minimal curves to report (DiamAtLeast: best curve per source;
  // Connect: best curve per target cell).
  std::size_t max_curves = 1;
  // Only curves of length below this are returned beyond the minimum.
  double report_below = 1.0;
  // Restrict DiamAtLeast sources; empty means all cells (or the seed net).
  std::span<const int> sources;
  unsigned workers = 1;
  // When false and no DiamAtLeast curve is shorter than report_below, the batch
  // comes back empty instead of paying for the exact minimum.
  bool exact_min = true;
  // DiamAtLeast without exact_min: when positive, sources are scanned in chunks
  // starting at position `start` (cyclically), stopping once this many curves below
  // report_below were found.
  std::size_t stop_after = 0;
  std::size_t start = 0;
};

struct OracleBatch {
  bool empty = true;
  double min_length = 0.0;
  // Sorted by length, ties by cell sequence; first entry attains min_length.
  std::vector<std::pair<double, DiscreteCurve>> curves;
  // False when a partial scan stopped early; min_length then only covers the
  // `scanned` sources that were searched.
  bool complete = true;
  std::size_t scanned = 0;
};

OracleBatch separate(const GraphApproximation& g, std::span<const double> rho, const ResolvedFamily& family,
                     const OracleOptions& options);

// Exhaustive list of simple family curves with at most max_cells cells, one per
// reversal class.
std::vector<DiscreteCurve> enumerate_curves(const GraphApproximation& g, const ResolvedFamily& family,
                                            int max_cells);

double relative_distance(const CellSet& a, const CellSet& b, const GraphApproximation& g);
double relative_distance(std::span<const int> a, std::span<const int> b, const GraphApproximation& g);

// Euclidean diameter of the union of the cells.
double cell_set_diameter(std::span<const int> cells, const GraphApproximation& g);
double cell_set_distance(std::span<const int> a, std::span<const int> b, const GraphApproximation& g);

// Discrete Frechet distance between the curve's cell centers and a polyline
// sampled at step `sample_step`.
double ordered_waypoint_distance(const DiscreteCurve& curve, const GraphApproximation& g,
                                 std::span<const Point> polyline, double sample_step);

std::vector<Point> densify_polyline(std::span<const Point> polyline, double step, int dim);

}  // namespace modlab
