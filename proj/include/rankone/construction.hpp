#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "rankone/types.hpp"

namespace rankone {

/// Cutting parameters of one step: the tower is cut into `r` equal columns
/// and `s[i]` spacer levels are stacked above column i.
struct StageParams {
  std::int64_t r = 0;
  std::vector<BigInt> s;
};

/// Full description of a rank-one construction: initial height plus the
/// cutting parameters of stages 1, 2, ...
struct ConstructionSpec {
  BigInt h1 = 1;
  std::vector<StageParams> stages;

  /// Throws ValidationError naming the first offending stage.
  void validate() const;
};

/// Derived data of the tower at stage j (1-based).
///
/// `offsets` holds the bottom level of each stage-j column inside the
/// stage-(j+1) tower and is empty for the last built stage.
struct TowerStage {
  std::size_t j = 0;
  BigInt height;
  Rational baseMeasure;
  std::vector<BigInt> offsets;
  Rational towerMeasure;
};

/// Builds stages 1..stageCount. Requires stageCount <= spec.stages.size()+1.
std::vector<TowerStage> build_stages(const ConstructionSpec &spec,
                                     std::size_t stageCount);

struct MeasureGrowth {
  std::vector<Rational> towerMeasures;  // mu(X_1..X_J)
  std::vector<Rational> partialSums;    // J-1 partial sums of the series
};

/// Tower measures and partial sums of sum_j (sum_i s_j(i)) / (h_j r_j).
MeasureGrowth measure_growth(const ConstructionSpec &spec,
                             std::size_t stageCount);

/// An immutable built construction. Stage indices are 1-based throughout.
///
/// Heights and offsets are exact; the `*64` accessors give the same values
/// as 64-bit integers for the level-set machinery and throw when a stage is
/// too tall for it.
class Tower {
public:
  Tower(ConstructionSpec spec, std::size_t stageCount);
  explicit Tower(ConstructionSpec spec);

  const ConstructionSpec &spec() const { return spec_; }
  std::size_t stageCount() const { return stages_.size(); }
  const TowerStage &stage(std::size_t j) const;

  /// True when stage j has cutting parameters, i.e. stage j+1 is built.
  bool hasNext(std::size_t j) const { return j >= 1 && j < stages_.size(); }

  std::int64_t columns(std::size_t j) const;
  const BigInt &heightExact(std::size_t j) const { return stage(j).height; }
  const Rational &baseMeasure(std::size_t j) const {
    return stage(j).baseMeasure;
  }

  Level height(std::size_t j) const;
  const std::vector<Level> &offsets(std::size_t j) const;

  /// Index (0-based) of the column of stage j whose copy in stage j+1
  /// contains level `level`, or nullopt when the level is a spacer.
  std::optional<std::size_t> columnContaining(std::size_t j,
                                              Level level) const;

  /// Smallest stage J >= from with h_J > m, or nullopt.
  std::optional<std::size_t> firstStageTallerThan(std::size_t from,
                                                  const BigInt &m) const;

  void requireStage(std::size_t j, const char *module) const;

private:
  void cache64();

  ConstructionSpec spec_;
  std::vector<TowerStage> stages_;
  std::vector<std::optional<Level>> heights64_;
  std::vector<std::optional<std::vector<Level>>> offsets64_;
};

/// CSV with columns j,h_j,r_j,mu_Ej_num,mu_Ej_den,mu_Xj_num,mu_Xj_den.
void write_stage_table(std::ostream &out, const Tower &tower);

} // namespace rankone
