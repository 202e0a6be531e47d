#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rankone/correlation.hpp"
#include "rankone/level_set.hpp"
#include "rankone/point.hpp"

namespace rankone {

/// The cylinder {configurations with exactly `count` points in `set`}.
struct CountEvent {
  LevelSet set;
  std::uint64_t count = 0;
};

/// A count event transported by T^shift: its set becomes T^shift(set).
struct ShiftedEvent {
  CountEvent event;
  BigInt shift = 0;
};

/// e^-mean mean^k / k!.
long double poisson_pmf(long double mean, std::uint64_t k);

struct PoissonTerm {
  Rational mean;
  std::uint64_t count = 0;
  double value = 0.0;
};

/// Product of Poisson point masses over pairwise disjoint sets, kept as
/// exact (mean, count) terms plus a float rendering.
struct CylinderProb {
  std::vector<PoissonTerm> terms;
  double value = 0.0;
};

/// Throws ValidationError when two of the sets intersect.
CylinderProb cylinder_prob(const Tower &tower,
                           const std::vector<CountEvent> &events);

struct Normalization {
  double sum = 0.0;        // sum_{a <= maxCount} P(count = a)
  double tailBound = 0.0;  // Chernoff bound on P(count > maxCount)
};

Normalization cylinder_normalization(const Rational &mean,
                                     std::uint64_t maxCount);

/// Interval on a probability, rounded outward unless exact.
struct ProbEnclosure {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
};

struct JointResult {
  ProbEnclosure prob;
  /// Pairwise overlaps of the shifted sets, in (0,1), (0,2), (1,2) order.
  std::vector<MeasureEnclosure> overlaps;
  std::optional<MeasureEnclosure> triple;
  bool stageLimited = false;
  std::vector<std::string> warnings;
};

/// Joint probability of two or three shifted count events under the
/// Poisson suspension, via the disjoint atoms of the shifted sets.
JointResult joint_prob(const Tower &tower,
                       const std::vector<ShiftedEvent> &events,
                       const Rational &eps);

/// Product of the marginal probabilities (shift invariant).
double marginal_product(const Tower &tower,
                        const std::vector<ShiftedEvent> &events);

/// Poisson(mu(region)) many i.i.d. uniform points of `region`.
std::vector<PointState> sample_configuration(const Tower &tower,
                                             const LevelSet &region, Rng &rng);

/// Monte-Carlo frequency of the joint event over sampled configurations
/// of the union of the shifted sets.
McEstimate mc_joint_prob(const Tower &tower,
                         const std::vector<ShiftedEvent> &events,
                         std::uint64_t samples, std::uint64_t seed);

struct MixingRow {
  BigInt n;
  std::size_t interval = 0;  // j with h_j < n <= h_{j+1}, 0 if none
  MeasureEnclosure overlap;
  ProbEnclosure joint;
  double product = 0.0;
  double devLo = 0.0;
  double devHi = 0.0;
  double devAbs = 0.0;  // max |joint - product| over the enclosure
  bool stageLimited = false;
};

/// Rows n: mu_*(V ∩ T_*^n W) against mu_*(V) mu_*(W).
std::vector<MixingRow> mixing_report(const Tower &tower, const CountEvent &v,
                                     const CountEvent &w,
                                     const std::vector<BigInt> &nGrid,
                                     const Rational &eps);

void write_mixing_csv(std::ostream &out, const std::vector<MixingRow> &rows);

struct TripleMixingRow {
  BigInt m;
  BigInt n;
  std::array<MeasureEnclosure, 3> overlaps;
  MeasureEnclosure triple;
  ProbEnclosure joint;
  double product = 0.0;
  double devLo = 0.0;
  double devHi = 0.0;
  double devAbs = 0.0;
  bool pairwiseZero = false;  // all pairwise overlaps certified [0, 0]
  bool stageLimited = false;
};

/// Rows (m, n): mu_*(U ∩ T_*^m V ∩ T_*^(m+n) W) against the product.
std::vector<TripleMixingRow>
triple_mixing_report(const Tower &tower, const CountEvent &u,
                     const CountEvent &v, const CountEvent &w,
                     const std::vector<std::pair<BigInt, BigInt>> &grid,
                     const Rational &eps);

void write_triple_mixing_csv(std::ostream &out,
                             const std::vector<TripleMixingRow> &rows);

} // namespace rankone
