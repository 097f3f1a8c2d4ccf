#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "modlab/families.hpp"
#include "modlab/solver.hpp"
#include "modlab/tiling.hpp"

namespace modlab {

struct SeriesEntry {
  int k = 0;
  double lower = 0.0;
  double upper = 0.0;
  SolveStatus status = SolveStatus::converged;
  long iterations = 0;
};

struct ScaleSeries {
  SpaceTag space = SpaceTag::square;
  CurveFamilySpec family;
  double p = 2.0;
  double tol = 1e-4;
  std::vector<SeriesEntry> entries;  // sorted by k
  double sub_constant = 0.0;         // C-hat
  double super_constant = 0.0;       // C'-hat
  std::vector<std::string> notes;
};

struct AnalysisOptions {
  SolverOptions solver;
  LevelCaps caps;
  // Seed each level's active set with the previous level's curves.
  bool warm_start = false;
};

// True for DiamAtLeast and for Connect between two faces of the unit cube.
bool is_scale_free(const CurveFamilySpec& spec);

ScaleSeries scale_series(SpaceTag space, const CurveFamilySpec& spec, double p, int k_min, int k_max, double tol,
                         const AnalysisOptions& options = {});

// Fills sub_constant and super_constant from the entries: over k, l >= 1 with
// k + l in range, C-hat = max upper(M_{k+l}) / (lower M_k lower M_l) and
// C'-hat = min lower(M_{k+l}) / (upper M_k upper M_l).
void fit_constants(ScaleSeries& series);

enum class GrowthVerdict { growing, decaying, flat };

std::string to_string(GrowthVerdict v);

struct TrendFit {
  GrowthVerdict verdict = GrowthVerdict::flat;
  double slope = 0.0;  // of log M_k per level
  double sigma = 0.0;
  std::vector<double> ratios;  // M_{k+1} / M_k at bracket midpoints
};

// Log-linear regression over the last four levels with a 3 sigma sign test.
TrendFit growth_trend(const std::vector<SeriesEntry>& entries);

struct QmProbe {
  double p = 0.0;
  TrendFit trend;
  std::vector<SeriesEntry> entries;
};

struct QmEstimate {
  double p_lo = 0.0;
  double p_hi = 0.0;
  bool inconclusive = false;
  std::vector<QmProbe> probes;  // in evaluation order
};

// Brackets for levels [k_max - 3, k_max] at exponent p.
using SeriesProvider = std::function<std::vector<SeriesEntry>(double p)>;

QmEstimate estimate_qm(const SeriesProvider& provider, double p_lo, double p_hi, double p_tol);
QmEstimate estimate_qm(SpaceTag space, const CurveFamilySpec& spec, int k_max, double p_lo, double p_hi,
                       double p_tol, double tol, const AnalysisOptions& options = {});

struct SetPair {
  int id = 0;
  CellSet a;
  CellSet b;
};

struct ClpRow {
  int pair_id = 0;
  int k = 0;
  double delta = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool skipped = false;
  std::string note;
};

struct EnvelopePoint {
  double t = 0.0;    // inverse relative distance
  double phi = 0.0;  // min lower bound over rows with 1/delta >= t
  double psi = 0.0;  // max upper bound over rows with 1/delta <= t
};

struct ClpProfile {
  SpaceTag space = SpaceTag::square;
  double p = 2.0;
  double tol = 1e-4;
  std::vector<ClpRow> rows;
  std::vector<EnvelopePoint> envelope;
};

ClpProfile clp_profile(SpaceTag space, double p, const std::vector<SetPair>& pairs, const std::vector<int>& ks,
                       double tol, const AnalysisOptions& options = {});

// Envelope values at t (phi from rows with 1/delta >= t, psi from rows with
// 1/delta <= t); nullopt when the corresponding row set is empty.
std::optional<double> envelope_phi(const ClpProfile& profile, double t);
std::optional<double> envelope_psi(const ClpProfile& profile, double t);

struct BallSample {
  int index = 0;
  int k = 0;
  Point c1{};
  Point c2{};
  double r = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool empty = false;
};

struct BallPairReport {
  SpaceTag space = SpaceTag::square;
  double p = 2.0;
  double a_param = 1.0;
  double l_param = 4.0;
  std::uint64_t seed = 0;
  std::vector<int> ks;
  double m_hat = 0.0;
  std::vector<double> m_hat_by_k;
  int worst_sample = -1;  // index into samples
  std::vector<BallSample> samples;
};

// Samples pairs of balls of radius r with gap A r and bounds the modulus of the
// joining curves confined to the ball of radius L r about their midpoint.
BallPairReport ball_pair_check(SpaceTag space, double p, double a_param, double l_param, int sample_count,
                               const std::vector<int>& ks, std::uint64_t seed, double tol,
                               const AnalysisOptions& options = {});

struct AnnulusReport {
  double bound = 0.0;  // mass of the averaged ring density (admissible for F(A,B))
  int balls = 0;       // n; the chain uses n - 1 rings
  double radius0 = 0.0;
  std::vector<double> ring_upper;
  double direct_lower = 0.0;
  double direct_upper = 0.0;
  double min_length = 0.0;  // oracle minimum of the averaged density
};

// Nested balls B_i = B(z0, 2^i d) for i = 1..n around A (d = diam A); n is the
// largest count whose outer ball stays clear of B, or `balls` when given.
AnnulusReport annulus_chain_bound(const GraphApproximation& g, const CellSet& a, const CellSet& b, double p,
                                  double tol, std::optional<int> balls = std::nullopt,
                                  const SolverOptions& options = {});

struct RectProduct {
  double horizontal = 0.0;
  double vertical = 0.0;
  double product = 0.0;
  ModulusSolution h;
  ModulusSolution v;
};

RectProduct rect_product(const GraphApproximation& g, const Box& rect, double tol, const SolverOptions& options = {});

}  // namespace modlab
