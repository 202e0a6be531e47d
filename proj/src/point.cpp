#include "rankone/point.hpp"

#include <algorithm>

namespace rankone {

namespace {

constexpr const char *kModule = "core-construction";

BigInt floor_div(const Rational &q) {
  BigInt out;
  mpz_fdiv_q(out.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return out;
}

} // namespace

void check_point(const Tower &tower, const PointState &p) {
  tower.requireStage(p.stage, kModule);
  if (p.level < 0 || p.level >= tower.heightExact(p.stage) || p.offset < 0 ||
      p.offset >= tower.baseMeasure(p.stage)) {
    throw ValidationError(kModule, "point outside its stage tower");
  }
}

PointState raise(const Tower &tower, const PointState &p) {
  if (!tower.hasNext(p.stage)) {
    throw DepthError(kModule,
                     "needs more stages: point at stage " +
                         std::to_string(p.stage) + " must be lifted",
                     p.stage + 1);
  }
  const Rational &sub = tower.baseMeasure(p.stage + 1);
  const BigInt col = floor_div(p.offset / sub);
  PointState out;
  out.stage = p.stage + 1;
  out.level = tower.stage(p.stage).offsets[col.get_ui()] + p.level;
  out.offset = p.offset - Rational(col) * sub;
  out.offset.canonicalize();
  return out;
}

PointState raise_to(const Tower &tower, const PointState &p,
                    std::size_t stage) {
  PointState cur = p;
  while (cur.stage < stage) {
    cur = raise(tower, cur);
  }
  return cur;
}

PointState normalize(const Tower &tower, const PointState &p) {
  PointState cur = p;
  while (cur.stage > 1) {
    const auto &below = tower.stage(cur.stage - 1);
    const auto &o = below.offsets;
    auto it = std::upper_bound(o.begin(), o.end(), cur.level);
    const auto col = static_cast<std::size_t>(it - o.begin() - 1);
    const BigInt within = cur.level - o[col];
    if (within >= below.height) {
      break;
    }
    cur.offset += Rational(BigInt(col)) * tower.baseMeasure(cur.stage);
    cur.offset.canonicalize();
    cur.level = within;
    --cur.stage;
  }
  return cur;
}

PointState iterate(const Tower &tower, const PointState &p, const BigInt &n) {
  PointState cur = p;
  if (n > 0) {
    BigInt left = n;
    for (;;) {
      const BigInt &h = tower.heightExact(cur.stage);
      const BigInt room = h - 1 - cur.level;
      if (left <= room) {
        cur.level += left;
        break;
      }
      left -= room;
      cur.level = h - 1;
      cur = raise(tower, cur);
    }
  } else if (n < 0) {
    BigInt left = -n;
    for (;;) {
      if (left <= cur.level) {
        cur.level -= left;
        break;
      }
      left -= cur.level;
      cur.level = 0;
      cur = raise(tower, cur);
    }
  }
  return normalize(tower, cur);
}

PointState step(const Tower &tower, const PointState &p, Direction dir) {
  return iterate(tower, p, dir == Direction::Forward ? BigInt(1) : BigInt(-1));
}

bool contains(const Tower &tower, const LevelSet &set, const PointState &p) {
  const PointState n = normalize(tower, p);
  if (n.stage > set.stage()) {
    return false;
  }
  const PointState at = raise_to(tower, n, set.stage());
  return set.contains(at.level.get_si());
}

PointState sample_uniform(const Tower &tower, const LevelSet &set, Rng &rng,
                          std::optional<std::size_t> resolutionStage) {
  if (set.empty()) {
    throw ValidationError(kModule, "cannot sample from an empty level set");
  }
  const std::size_t j = set.stage();
  const std::size_t res = std::clamp<std::size_t>(
      resolutionStage.value_or(j + 2), j, tower.stageCount());
  PointState out;
  out.stage = j;
  out.level = BigInt(static_cast<long>(set.nth(static_cast<Level>(
      rng.below(static_cast<std::uint64_t>(set.count()))))));
  Rational cells = tower.baseMeasure(j) / tower.baseMeasure(res);
  cells.canonicalize();
  const BigInt k = rng.below(cells.get_num());
  out.offset = Rational(k) * tower.baseMeasure(res);
  out.offset.canonicalize();
  return out;
}

} // namespace rankone
