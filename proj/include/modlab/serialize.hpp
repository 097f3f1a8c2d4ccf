#pragma once

#include <string>

#include "json.hpp"
#include "modlab/analysis.hpp"
#include "modlab/families.hpp"
#include "modlab/solver.hpp"
#include "modlab/symmetry.hpp"
#include "modlab/tiling.hpp"

namespace modlab {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Byte-stable approximation document (17 significant digits, edges i<j sorted).
std::string approximation_json(const GraphApproximation& g);
GraphApproximation approximation_from_json(const std::string& text);

Json to_json(const ValidationReport& r);
Json to_json(const CellSet& s);
CellSet cell_set_from_json(const Json& j);
Json to_json(const CurveFamilySpec& spec);
CurveFamilySpec family_from_json(const Json& j);
Json to_json(const ModulusSolution& s);
Json to_json(const ScaleSeries& s);
Json to_json(const QmEstimate& q);
Json to_json(const ClpProfile& c);
Json to_json(const BallPairReport& b);
Json to_json(const AnnulusReport& a);
Json to_json(const RectProduct& r);
Json to_json(const FoldingMap& fm);

// One row per level / (k, pair) / sample with bracket columns.
std::string series_csv(const ScaleSeries& s);
std::string clp_csv(const ClpProfile& c);
std::string ball_csv(const BallPairReport& b);
std::string qm_csv(const QmEstimate& q);

// Shortest round-trip formatting used by every writer.
std::string format_double(double x);

}  // namespace modlab
