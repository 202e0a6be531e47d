#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "rankone/construction.hpp"
#include "rankone/level_set.hpp"
#include "rankone/point.hpp"
#include "rankone/rng.hpp"

namespace rankone {

inline void PrintTo(const PointState &p, std::ostream *os) {
  *os << "(stage " << p.stage << ", level " << p.level.get_str() << ", offset "
      << p.offset.get_str() << ")";
}

} // namespace rankone

namespace rankone::testing {

// Plain int64 tower recomputed from the stage parameters, independent of
// Tower and lift_level_set.
struct ExplicitTower {
  std::vector<std::int64_t> h;                     // index = stage - 1
  std::vector<std::vector<std::int64_t>> offsets;  // index = stage - 1
  std::vector<Rational> muE;

  explicit ExplicitTower(const ConstructionSpec &spec) {
    std::int64_t height = spec.h1.get_si();
    Rational mu(1);
    for (const auto &st : spec.stages) {
      h.push_back(height);
      muE.push_back(mu);
      std::vector<std::int64_t> off{0};
      std::int64_t total = height * st.r;
      for (std::int64_t i = 0; i + 1 < st.r; ++i) {
        off.push_back(off.back() + height + st.s[i].get_si());
      }
      for (const auto &s : st.s) {
        total += s.get_si();
      }
      offsets.push_back(off);
      height = total;
      mu /= st.r;
    }
    h.push_back(height);
    muE.push_back(mu);
  }

  std::size_t stages() const { return h.size(); }

  // Membership bitmap of a stage-`from` level set carried to stage `to`.
  std::vector<bool> lift(const std::vector<bool> &levels, std::size_t from,
                         std::size_t to) const {
    std::vector<bool> cur = levels;
    for (std::size_t j = from; j < to; ++j) {
      std::vector<bool> next(static_cast<std::size_t>(h[j]), false);
      for (const auto o : offsets[j - 1]) {
        for (std::int64_t p = 0; p < h[j - 1]; ++p) {
          if (cur[static_cast<std::size_t>(p)]) {
            next[static_cast<std::size_t>(o + p)] = true;
          }
        }
      }
      cur = std::move(next);
    }
    return cur;
  }
};

inline std::vector<bool> bitmap(const LevelSet &set, std::int64_t height) {
  std::vector<bool> out(static_cast<std::size_t>(height), false);
  for (const auto &r : set.ranges()) {
    for (Level p = r.begin; p < r.end; ++p) {
      out[static_cast<std::size_t>(p)] = true;
    }
  }
  return out;
}

// mu(A ∩ T^m B) counted on stage K: `lo` counts levels p in B with p + m in
// A, `hi` adds the levels of B whose image leaves the stage-K tower.
struct BruteCount {
  Rational lo;
  Rational hi;
};

inline BruteCount brute_pair(const ExplicitTower &ex, const LevelSet &a,
                             const LevelSet &b, std::int64_t m, std::size_t K) {
  const auto A = ex.lift(bitmap(a, ex.h[a.stage() - 1]), a.stage(), K);
  const auto B = ex.lift(bitmap(b, ex.h[b.stage() - 1]), b.stage(), K);
  const std::int64_t hk = ex.h[K - 1];
  std::int64_t hits = 0;
  std::int64_t esc = 0;
  for (std::int64_t p = 0; p < hk; ++p) {
    if (!B[static_cast<std::size_t>(p)]) {
      continue;
    }
    if (p + m >= hk) {
      ++esc;
    } else if (A[static_cast<std::size_t>(p + m)]) {
      ++hits;
    }
  }
  return {Rational(hits) * ex.muE[K - 1], Rational(hits + esc) * ex.muE[K - 1]};
}

// mu(A ∩ T^m B ∩ T^(m+n) C) on stage K with the same escape accounting.
inline BruteCount brute_triple(const ExplicitTower &ex, const LevelSet &a,
                               const LevelSet &b, const LevelSet &c,
                               std::int64_t m, std::int64_t n, std::size_t K) {
  const auto A = ex.lift(bitmap(a, ex.h[a.stage() - 1]), a.stage(), K);
  const auto B = ex.lift(bitmap(b, ex.h[b.stage() - 1]), b.stage(), K);
  const auto C = ex.lift(bitmap(c, ex.h[c.stage() - 1]), c.stage(), K);
  const std::int64_t hk = ex.h[K - 1];
  std::int64_t hits = 0;
  std::int64_t esc = 0;
  for (std::int64_t p = 0; p < hk; ++p) {
    if (!C[static_cast<std::size_t>(p)]) {
      continue;
    }
    if (p + m + n >= hk) {
      ++esc;
    } else if (B[static_cast<std::size_t>(p + n)] &&
               A[static_cast<std::size_t>(p + n + m)]) {
      ++hits;
    }
  }
  return {Rational(hits) * ex.muE[K - 1], Rational(hits + esc) * ex.muE[K - 1]};
}

// Small random construction. The last stage ends with a spacer of at least
// `tailGuard` levels so shifts below it never escape the top stage.
inline ConstructionSpec random_spec(Rng &rng, std::size_t stageParams,
                                    std::int64_t tailGuard = 0) {
  ConstructionSpec spec;
  spec.h1 = BigInt(1 + static_cast<long>(rng.below(3)));
  for (std::size_t j = 0; j < stageParams; ++j) {
    StageParams p;
    p.r = 2 + static_cast<std::int64_t>(rng.below(3));
    for (std::int64_t i = 0; i < p.r; ++i) {
      p.s.push_back(BigInt(static_cast<long>(rng.below(7))));
    }
    if (j + 1 == stageParams) {
      p.s.back() += tailGuard;
    }
    spec.stages.push_back(std::move(p));
  }
  return spec;
}

inline LevelSet random_level_set(Rng &rng, const Tower &tower,
                                 std::size_t stage) {
  const Level h = tower.height(stage);
  std::vector<LevelRange> ranges;
  for (Level p = 0; p < h; ++p) {
    if (rng.below(2) == 1) {
      ranges.push_back({p, p + 1});
    }
  }
  return LevelSet(stage, normalize_ranges(std::move(ranges)));
}

inline ConstructionSpec running_example() {
  ConstructionSpec spec;
  spec.h1 = 1;
  spec.stages = {{2, {BigInt(0), BigInt(1)}},
                 {3, {BigInt(0), BigInt(6), BigInt(15)}}};
  return spec;
}

} // namespace rankone::testing
