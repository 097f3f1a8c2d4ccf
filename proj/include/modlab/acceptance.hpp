#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "modlab/families.hpp"
#include "modlab/tiling.hpp"

namespace modlab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;  // deterministic summary of the measured quantities
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t seed = 7;
  unsigned workers = 1;
  std::vector<int> only;  // criterion ids to run; empty runs all
  std::ostream* log = nullptr;  // progress and timings
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

// Table with one line per criterion; excludes timings.
std::string acceptance_table(const std::vector<CriterionResult>& results);

// Reference modulus of a Connect family by projected gradient on the dual problem
// over probability measures on the enumerated minimal curves.
struct ReferenceModulus {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t curves = 0;
  bool ok = false;
};

// Induced chains from sources to targets whose interior avoids both sets and lies
// in the region. Empty result with ok=false when more than `limit` exist.
std::vector<DiscreteCurve> minimal_connect_curves(const GraphApproximation& g, const ResolvedFamily& family,
                                                  std::size_t limit, bool& ok);

ReferenceModulus reference_modulus(const GraphApproximation& g, const ResolvedFamily& family, double p,
                                   double tol, std::size_t curve_limit = 200000);

}  // namespace modlab
