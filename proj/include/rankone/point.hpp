#pragma once

#include <cstddef>
#include <optional>

#include "rankone/level_set.hpp"
#include "rankone/rng.hpp"

namespace rankone {

/// Exact location of a point: stage J, level in [0, h_J), and position
/// inside the level in measure coordinates, offset in [0, mu(E_J)).
///
/// Column i of stage J is the i-th equal sub-interval of every level, so
/// re-expressing a point one stage up is pure arithmetic on `offset`.
struct PointState {
  std::size_t stage = 1;
  BigInt level = 0;
  Rational offset = 0;

  bool operator==(const PointState &o) const {
    return stage == o.stage && level == o.level && offset == o.offset;
  }
};

enum class Direction { Forward, Backward };

/// Same point at the next stage. Throws DepthError when stage J+1 is not
/// built.
PointState raise(const Tower &tower, const PointState &p);
PointState raise_to(const Tower &tower, const PointState &p,
                    std::size_t stage);

/// Same point at the smallest stage that contains it (stage 1, or the stage
/// where its level is a spacer).
PointState normalize(const Tower &tower, const PointState &p);

PointState step(const Tower &tower, const PointState &p, Direction dir);

/// T^n p for any signed n, jumping whole runs of levels at once.
PointState iterate(const Tower &tower, const PointState &p, const BigInt &n);

/// Membership of a point in a level set (any stage relation).
bool contains(const Tower &tower, const LevelSet &set, const PointState &p);

/// Uniform point in `set`: uniform level, offset on the grid with spacing
/// mu(E_R) where R = resolutionStage (default: two stages below the set,
/// capped at the last built stage).
PointState sample_uniform(const Tower &tower, const LevelSet &set, Rng &rng,
                          std::optional<std::size_t> resolutionStage = {});

void check_point(const Tower &tower, const PointState &p);

} // namespace rankone
