#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "modlab/families.hpp"
#include "modlab/tiling.hpp"

namespace modlab {

enum class SolveStatus { converged, iteration_cap, empty_family };

std::string to_string(SolveStatus s);

struct ModulusSolution {
  double p = 2.0;
  double upper = 0.0;
  double lower = 0.0;
  Density density;  // admissible: every family curve has length >= 1
  std::vector<DiscreteCurve> active_curves;
  long iterations = 0;  // oracle calls
  double tol = 1e-6;
  SolveStatus status = SolveStatus::converged;
  // Tube waypoint spacing (0 for other families).
  double spacing = 0.0;

  double gap() const { return upper > 0.0 ? (upper - lower) / upper : 0.0; }
  double midpoint() const { return 0.5 * (upper + lower); }
};

struct SolverOptions {
  long max_oracle_calls = 100000;
  unsigned workers = 1;
  // Violated curves added per oracle call, before symmetry images.
  std::size_t cuts_per_round = 16;
  // Exploit symmetries of the space that preserve the family.
  bool use_symmetry = true;
  // Curves (members of the family on this graph) seeding the active set.
  std::vector<DiscreteCurve> warm_start;
  // Iteration cap for each restricted linear program solve at p = 1.
  long p1_lp_iterations = 20000;
  // Weight of the best admissible density in the oracle query point. Cuts found
  // at the blend are also violated by the restricted solution.
  double stabilization = 0.5;
  // DiamAtLeast: stop each oracle scan once this many multiples of cuts_per_round
  // violated curves were found (0 scans every source). Upper bounds only use
  // complete scans.
  std::size_t partial_pricing = 1;
  // Optional progress line per oracle call.
  std::ostream* log = nullptr;
};

// Sum of rho(v)^p in index order.
double mass(const Density& rho, double p);
double mass(std::span<const double> rho, double p);

ModulusSolution modulus(const GraphApproximation& g, const CurveFamilySpec& spec, double p, double tol,
                        const SolverOptions& options = {});
ModulusSolution modulus(const GraphApproximation& g, const ResolvedFamily& family, double p, double tol,
                        const SolverOptions& options = {});

struct PointwiseRow {
  int cell = 0;
  double density = 0.0;
  double mod_fv = 0.0;  // certified upper bound on Mod_p(F_v)
  double bound = 0.0;   // mod_fv^(1/p) + 10 tol
  bool ok = true;
};

struct PointwiseReport {
  bool passed = true;
  std::vector<PointwiseRow> rows;
};

// Checks rho(v) <= Mod_p(F_v)^(1/p) + 10 tol on the sampled cells.
PointwiseReport pointwise_bound_check(const ModulusSolution& sol, const GraphApproximation& g,
                                      const CurveFamilySpec& spec, std::span<const int> sample,
                                      const SolverOptions& options = {});

// Re-expresses curves of another approximation on g: each cell is replaced by the
// cell of g nearest its center and gaps are filled with shortest hop paths.
// Curves that are not members of `family` afterwards are dropped.
std::vector<DiscreteCurve> snap_curves(std::span<const DiscreteCurve> curves, const GraphApproximation& from,
                                       const GraphApproximation& g, const ResolvedFamily& family);

}  // namespace modlab
