#include "rankone/level_set.hpp"

#include <algorithm>
#include <string>

namespace rankone {

namespace {
constexpr const char *kModule = "core-construction";
}

std::vector<LevelRange> normalize_ranges(std::vector<LevelRange> ranges) {
  std::erase_if(ranges, [](const LevelRange &r) { return r.end <= r.begin; });
  std::sort(ranges.begin(), ranges.end(),
            [](const LevelRange &a, const LevelRange &b) {
              return a.begin < b.begin;
            });
  std::vector<LevelRange> out;
  out.reserve(ranges.size());
  for (const auto &r : ranges) {
    if (!out.empty() && r.begin <= out.back().end) {
      out.back().end = std::max(out.back().end, r.end);
    } else {
      out.push_back(r);
    }
  }
  return out;
}

LevelSet::LevelSet(std::size_t stage, std::vector<LevelRange> ranges)
    : stage_(stage), ranges_(normalize_ranges(std::move(ranges))) {
  if (stage_ < 1) {
    throw ValidationError(kModule, "level set stage must be >= 1");
  }
}

LevelSet LevelSet::full(const Tower &tower, std::size_t stage) {
  return LevelSet(stage, {{0, tower.height(stage)}});
}

LevelSet LevelSet::single(std::size_t stage, Level level) {
  return LevelSet(stage, {{level, level + 1}});
}

Level LevelSet::count() const {
  Level n = 0;
  for (const auto &r : ranges_) {
    n += r.size();
  }
  return n;
}

bool LevelSet::contains(Level level) const {
  auto it = std::upper_bound(
      ranges_.begin(), ranges_.end(), level,
      [](Level v, const LevelRange &r) { return v < r.begin; });
  if (it == ranges_.begin()) {
    return false;
  }
  --it;
  return level < it->end;
}

Level LevelSet::nth(Level index) const {
  for (const auto &r : ranges_) {
    if (index < r.size()) {
      return r.begin + index;
    }
    index -= r.size();
  }
  throw ValidationError(kModule, "level index out of range");
}

Rational LevelSet::measure(const Tower &tower) const {
  Rational m = tower.baseMeasure(stage_) * Rational(BigInt(count()));
  m.canonicalize();
  return m;
}

void LevelSet::validate(const Tower &tower) const {
  tower.requireStage(stage_, kModule);
  if (ranges_.empty()) {
    return;
  }
  if (ranges_.front().begin < 0 || ranges_.back().end > tower.height(stage_)) {
    throw ValidationError(kModule, "level set at stage " +
                                       std::to_string(stage_) +
                                       " leaves [0, h_j)");
  }
}

LevelSet intersect(const LevelSet &a, const LevelSet &b) {
  std::vector<LevelRange> out;
  const auto &x = a.ranges();
  const auto &y = b.ranges();
  std::size_t i = 0;
  std::size_t k = 0;
  while (i < x.size() && k < y.size()) {
    const Level lo = std::max(x[i].begin, y[k].begin);
    const Level hi = std::min(x[i].end, y[k].end);
    if (lo < hi) {
      out.push_back({lo, hi});
    }
    if (x[i].end < y[k].end) {
      ++i;
    } else {
      ++k;
    }
  }
  return LevelSet(a.stage(), std::move(out));
}

LevelSet unite(const LevelSet &a, const LevelSet &b) {
  std::vector<LevelRange> all = a.ranges();
  all.insert(all.end(), b.ranges().begin(), b.ranges().end());
  return LevelSet(a.stage(), std::move(all));
}

LevelSet subtract(const LevelSet &a, const LevelSet &b) {
  std::vector<LevelRange> out;
  const auto &y = b.ranges();
  std::size_t k = 0;
  for (const auto &r : a.ranges()) {
    Level cur = r.begin;
    while (k < y.size() && y[k].end <= cur) {
      ++k;
    }
    std::size_t t = k;
    while (cur < r.end && t < y.size() && y[t].begin < r.end) {
      if (y[t].begin > cur) {
        out.push_back({cur, y[t].begin});
      }
      cur = std::max(cur, y[t].end);
      ++t;
    }
    if (cur < r.end) {
      out.push_back({cur, r.end});
    }
  }
  return LevelSet(a.stage(), std::move(out));
}

LevelSet clip(const LevelSet &a, Level lo, Level hi) {
  std::vector<LevelRange> out;
  for (const auto &r : a.ranges()) {
    const Level b = std::max(r.begin, lo);
    const Level e = std::min(r.end, hi);
    if (b < e) {
      out.push_back({b, e});
    }
  }
  return LevelSet(a.stage(), std::move(out));
}

LevelSet translate(const LevelSet &a, Level d) {
  std::vector<LevelRange> out = a.ranges();
  for (auto &r : out) {
    r.begin += d;
    r.end += d;
  }
  return LevelSet(a.stage(), std::move(out));
}

Level shifted_intersection_count(const LevelSet &a, Level d,
                                 const LevelSet &b) {
  const auto &x = a.ranges();
  const auto &y = b.ranges();
  Level total = 0;
  std::size_t i = 0;
  std::size_t k = 0;
  while (i < x.size() && k < y.size()) {
    const Level xb = x[i].begin + d;
    const Level xe = x[i].end + d;
    const Level lo = std::max(xb, y[k].begin);
    const Level hi = std::min(xe, y[k].end);
    if (lo < hi) {
      total += hi - lo;
    }
    if (xe < y[k].end) {
      ++i;
    } else {
      ++k;
    }
  }
  return total;
}

LevelSet lift_one(const Tower &tower, const LevelSet &a) {
  const std::size_t j = a.stage();
  const auto &o = tower.offsets(j);
  std::vector<LevelRange> out;
  out.reserve(a.ranges().size() * o.size());
  for (const Level off : o) {
    for (const auto &r : a.ranges()) {
      out.push_back({r.begin + off, r.end + off});
    }
  }
  return LevelSet(j + 1, std::move(out));
}

LevelSet lift_level_set(const Tower &tower, const LevelSet &a,
                        std::size_t target) {
  if (target < a.stage()) {
    throw ValidationError(kModule, "lift target stage below source stage");
  }
  tower.requireStage(target, kModule);
  LevelSet cur = a;
  while (cur.stage() < target) {
    cur = lift_one(tower, cur);
  }
  return cur;
}

LevelSet spacer_levels(const Tower &tower, std::size_t j) {
  if (j < 2) {
    throw ValidationError(kModule, "stage 1 has no spacers");
  }
  const LevelSet copies = lift_one(tower, LevelSet::full(tower, j - 1));
  return subtract(LevelSet::full(tower, j), copies);
}

} // namespace rankone
