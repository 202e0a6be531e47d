#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rankone/correlation.hpp"
#include "rankone/level_set.hpp"
#include "rankone/point.hpp"

namespace rankone {

/// One new block D_k: X_1 levels first, then the spacer levels of each
/// stage in ascending level order.
struct NewBlock {
  BigInt k;
  std::size_t birthStage = 0;
  Level levelAtBirth = 0;
  Rational measure;
  BigInt s;
};

/// All blocks born at one stage share measure and sub-block count.
struct StageBlocks {
  std::size_t stage = 0;
  BigInt first;          // global index of the first block
  BigInt count;          // number of blocks
  Rational blockMeasure;  // mu(E_stage)
  Rational mass;          // count * blockMeasure
  BigInt s;               // max(2, ceil(mass))
  Rational subMeasure;    // blockMeasure / s
  Rational contribution;  // mass / s
  Rational partialSum;    // running sum of contributions
};

struct Schedule {
  std::vector<StageBlocks> stages;
};

Schedule s_schedule(const Tower &tower, std::size_t J);

/// Explicit block list through stage J; throws ValidationError past `limit`.
std::vector<NewBlock> enumerate_new_blocks(const Tower &tower, std::size_t J,
                                           std::size_t limit = 1000000);

void write_schedule_csv(std::ostream &out, const Schedule &s);

/// A point of a block seen on the signed axis: `x` is where the point
/// would sit if it were in the first sub-block of its block, `sub` is its
/// sub-block index (0-based).
struct AxisPoint {
  Rational x;
  BigInt sub;
  bool operator==(const AxisPoint &) const = default;
};

/// Half-open axis interval of first sub-blocks together with a uniform
/// sub-block index.
struct AxisPiece {
  Rational lo;
  Rational hi;
  BigInt sub;
};

/// S = P S~: S~ cycles the sub-blocks of every block, P translates the
/// union of first sub-blocks by delta along the signed axis (even blocks
/// on [0, inf), odd blocks on (-inf, 0), in block order).
class HomoclinicMap {
public:
  explicit HomoclinicMap(const Tower &tower, bool identity = false);

  const Tower &tower() const { return *tower_; }
  const Schedule &schedule() const { return schedule_; }
  const Rational &delta() const { return delta_; }
  bool identity() const { return identity_; }
  /// Covered axis range [axisLo, axisHi).
  const Rational &axisLo() const { return axisLo_; }
  const Rational &axisHi() const { return axisHi_; }

  AxisPoint toAxis(const PointState &p) const;
  PointState fromAxis(const AxisPoint &a) const;
  /// Throws DepthError("needs more blocks") when the image leaves the
  /// enumerated blocks.
  AxisPoint applyAxis(const AxisPoint &a, Direction dir) const;
  PointState apply(const PointState &p, Direction dir) const;

  /// Image pieces of one piece. Parts that leave the covered axis are
  /// appended to `escaped`.
  std::vector<AxisPiece> applyPiece(const AxisPiece &piece, Direction dir,
                                    std::vector<AxisPiece> &escaped) const;

  /// Axis intervals of the first sub-blocks of the stage-`stage` blocks
  /// whose levels are in `levels` (spacer levels of that stage).
  std::vector<std::pair<Rational, Rational>>
  firstSubBlocks(std::size_t stage, const LevelSet &levels) const;

  /// Sub-block count and run of the block at axis position x.
  std::optional<std::size_t> stageAt(const Rational &x) const;
  const BigInt &subBlocks(std::size_t stage) const;

private:
  struct Run {
    std::size_t stage = 0;
    bool positive = true;
    Rational lo;
    Rational hi;
    BigInt firstIndex;  // first global block index of this parity
  };

  const Run *runAt(const Rational &x) const;
  Level spacerRank(std::size_t stage, Level level) const;
  Level spacerLevel(std::size_t stage, Level rank) const;
  void splitIntoRuns(const Rational &lo, const Rational &hi, Direction dir,
                     std::vector<AxisPiece> &out,
                     std::vector<AxisPiece> &escaped) const;

  const Tower *tower_;
  bool identity_;
  Schedule schedule_;
  Rational delta_;
  std::vector<Run> runs_;  // positive runs ascending, then negative runs
  std::vector<LevelSet> spacers_;  // index = stage
  std::vector<std::vector<Level>> prefix_;
  Rational axisLo_;
  Rational axisHi_;
};

struct RetentionRow {
  std::size_t stage = 0;
  BigInt blocks;
  BigInt s;
  Rational ratio;  // mu(S D ∩ D) / mu(D) for every block of the stage
  Rational bound;  // 1 - 1/s
  bool pass = true;
};

/// Exact per-block retention; all blocks of one stage share the value.
std::vector<RetentionRow> retention_audit(const HomoclinicMap &map);

struct WanderingLedgerRow {
  std::int64_t z = 0;
  std::size_t pieces = 0;
  Rational covered;
  Rational escaped;
};

struct WanderingReport {
  std::int64_t zmax = 0;
  bool disjoint = true;
  bool complete = true;  // no piece left the enumerated blocks
  bool pass = true;
  Rational coveredMass;
  Rational totalMass;  // mass of all enumerated blocks
  std::vector<WanderingLedgerRow> ledger;
};

/// S^z Y for |z| <= zmax with Y the first sub-block of block 0, tracked
/// as exact axis pieces.
WanderingReport wandering_check(const HomoclinicMap &map, std::int64_t zmax);

struct DefectResult {
  MeasureEnclosure defect;
  Rational fullLeaving;  // leaving mass of the full-block part
  Rational partialMass;  // mass in X_j copies and partial blocks
  Rational escapedMass;  // unresolved image mass
  std::size_t startStage = 0;
  std::size_t endStage = 0;
  std::optional<McEstimate> mc;
};

/// 1 - mu(S B | B) for B = T^(n+k) E_j with 0 <= k <= h_j,
/// h_j <= n <= h_{j+1}.
DefectResult block_defect(const HomoclinicMap &map, std::size_t j,
                            const BigInt &k, const BigInt &n,
                            std::optional<std::size_t> maxStage = {},
                            std::uint64_t mcSamples = 0,
                            std::uint64_t seed = 1);

struct SweepRow {
  std::size_t j = 0;
  BigInt k;
  BigInt n;
  MeasureEnclosure defect;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<std::pair<std::size_t, Rational>> maxHi;  // per stage
};

SweepReport homoclinic_sweep(const HomoclinicMap &map, std::size_t jFrom,
                             std::size_t jTo, std::size_t samplesPerStage,
                             std::uint64_t seed);

void write_sweep_csv(std::ostream &out, const SweepReport &report);

struct FlowParams {
  enum class Phi { Reciprocal, Exp };
  Phi phi = Phi::Reciprocal;
  double a = 0.0;
  double b = 1.0;
  double c = 0.0;
  double d = 1.0;

  static Phi parsePhi(const std::string &name);
  static std::string phiName(Phi phi);
  double operator()(double y) const;
  void validate() const;
};

/// Cumulative block coordinate of a point of the y-axis tower.
Rational concatenation_coordinate(const Tower &tower, const PointState &p);
PointState point_at_coordinate(const Tower &tower, const Rational &y);

struct FlowEstimate {
  BigInt n;
  double t = 0.0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};

/// Monte-Carlo estimate of || f - f o (T^-n S^t T^n) ||_2 for f the
/// indicator of [a,b] x [c,d].
FlowEstimate flow_defect(const Tower &tower, const FlowParams &params,
                         double t, const BigInt &n, std::uint64_t samples,
                         std::uint64_t seed);

void write_flow_csv(std::ostream &out, const std::vector<FlowEstimate> &rows);

} // namespace rankone
