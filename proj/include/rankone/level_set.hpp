#pragma once

#include <cstddef>
#include <vector>

#include "rankone/construction.hpp"

namespace rankone {

/// Half-open range [begin, end) of level indices.
struct LevelRange {
  Level begin = 0;
  Level end = 0;

  Level size() const { return end - begin; }
  bool operator==(const LevelRange &) const = default;
};

/// A finite union of levels of the stage-`stage` tower, stored as sorted,
/// disjoint, non-adjacent ranges.
class LevelSet {
public:
  LevelSet() = default;
  LevelSet(std::size_t stage, std::vector<LevelRange> ranges);

  static LevelSet full(const Tower &tower, std::size_t stage);
  static LevelSet single(std::size_t stage, Level level);

  std::size_t stage() const { return stage_; }
  const std::vector<LevelRange> &ranges() const { return ranges_; }
  bool empty() const { return ranges_.empty(); }
  Level count() const;
  Level minLevel() const { return ranges_.front().begin; }
  Level maxLevel() const { return ranges_.back().end - 1; }
  bool contains(Level level) const;

  /// The `index`-th level in increasing order (0-based).
  Level nth(Level index) const;

  Rational measure(const Tower &tower) const;

  /// Throws ValidationError when a level lies outside [0, h_stage).
  void validate(const Tower &tower) const;

  bool operator==(const LevelSet &) const = default;

private:
  std::size_t stage_ = 1;
  std::vector<LevelRange> ranges_;
};

/// Sorts and merges overlapping or adjacent ranges; drops empty ones.
std::vector<LevelRange> normalize_ranges(std::vector<LevelRange> ranges);

LevelSet intersect(const LevelSet &a, const LevelSet &b);
LevelSet unite(const LevelSet &a, const LevelSet &b);
LevelSet subtract(const LevelSet &a, const LevelSet &b);

/// Levels of `a` inside [lo, hi).
LevelSet clip(const LevelSet &a, Level lo, Level hi);

/// Levels of `a` translated by d (no clipping; callers keep the result in
/// range). Used for shifted-set bookkeeping.
LevelSet translate(const LevelSet &a, Level d);

/// |(A + d) ∩ B| by a linear merge; A and B need not share a stage tag.
Level shifted_intersection_count(const LevelSet &a, Level d,
                                 const LevelSet &b);

/// Image of A under one cutting step: each level l becomes o_i + l.
LevelSet lift_one(const Tower &tower, const LevelSet &a);

/// Re-express A (stage j) at stage `target` >= j. Measure is preserved.
LevelSet lift_level_set(const Tower &tower, const LevelSet &a,
                        std::size_t target);

/// Spacer levels stacked in the cutting of stage j-1 (j >= 2): the
/// complement of the column copies inside the stage-j tower.
LevelSet spacer_levels(const Tower &tower, std::size_t j);

} // namespace rankone
