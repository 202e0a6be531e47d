#include "rankone/homoclinic.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rankone/csv.hpp"

namespace rankone {

namespace {

constexpr const char *kModule = "homoclinic";

BigInt floor_q(const Rational &q) {
  BigInt r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

BigInt ceil_q(const Rational &q) {
  BigInt r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

Rational canon(Rational q) {
  q.canonicalize();
  return q;
}

bool is_odd(const BigInt &v) { return mpz_odd_p(v.get_mpz_t()) != 0; }

// Number of even integers in [a, a + n), a >= 0.
BigInt evens_in(const BigInt &a, const BigInt &n) {
  const BigInt hi = a + n;
  return (hi + 1) / 2 - (a + 1) / 2;
}

BigInt first_with_parity(const BigInt &a, bool odd) {
  return is_odd(a) == odd ? a : a + 1;
}

std::vector<Level> prefix_counts(const LevelSet &set) {
  std::vector<Level> p;
  Level acc = 0;
  for (const auto &r : set.ranges()) {
    p.push_back(acc);
    acc += r.size();
  }
  return p;
}

Level rank_in(const LevelSet &set, const std::vector<Level> &prefix,
              Level level) {
  const auto &rs = set.ranges();
  auto it = std::upper_bound(
      rs.begin(), rs.end(), level,
      [](Level v, const LevelRange &r) { return v < r.begin; });
  if (it == rs.begin() || level >= std::prev(it)->end) {
    throw Error(kModule, "level " + std::to_string(level) +
                             " is not a block level of its stage");
  }
  const auto idx = static_cast<std::size_t>(it - rs.begin() - 1);
  return prefix[idx] + (level - rs[idx].begin);
}

Level level_at(const LevelSet &set, const std::vector<Level> &prefix,
               Level rank) {
  auto it = std::upper_bound(prefix.begin(), prefix.end(), rank);
  const auto idx = static_cast<std::size_t>(it - prefix.begin() - 1);
  const auto &r = set.ranges()[idx];
  if (rank - prefix[idx] >= r.size()) {
    throw Error(kModule, "block rank out of range");
  }
  return r.begin + (rank - prefix[idx]);
}

/// Block levels of every stage: X_1 at stage 1, spacers afterwards.
struct BlockIndex {
  std::vector<LevelSet> sets;  // index = stage
  std::vector<std::vector<Level>> prefix;

  explicit BlockIndex(const Tower &tower) {
    const std::size_t J = tower.stageCount();
    sets.resize(J + 1);
    prefix.resize(J + 1);
    for (std::size_t b = 1; b <= J; ++b) {
      sets[b] = b == 1 ? LevelSet::full(tower, 1) : spacer_levels(tower, b);
      prefix[b] = prefix_counts(sets[b]);
    }
  }

  Level rank(std::size_t b, Level level) const {
    return rank_in(sets[b], prefix[b], level);
  }
  Level level(std::size_t b, Level rank) const {
    return level_at(sets[b], prefix[b], rank);
  }
};

} // namespace

Schedule s_schedule(const Tower &tower, std::size_t J) {
  tower.requireStage(J, kModule);
  Schedule out;
  BigInt first = 0;
  Rational partial = 0;
  for (std::size_t b = 1; b <= J; ++b) {
    StageBlocks st;
    st.stage = b;
    st.first = first;
    if (b == 1) {
      st.count = tower.heightExact(1);
    } else {
      st.count = 0;
      for (const auto &s : tower.spec().stages[b - 2].s) {
        st.count += s;
      }
    }
    st.blockMeasure = tower.baseMeasure(b);
    st.mass = canon(st.blockMeasure * Rational(st.count));
    st.s = std::max(BigInt(2), ceil_q(st.mass));
    st.subMeasure = canon(st.blockMeasure / Rational(st.s));
    st.contribution = canon(st.mass / Rational(st.s));
    partial += st.contribution;
    st.partialSum = partial;
    first += st.count;
    out.stages.push_back(std::move(st));
  }
  return out;
}

std::vector<NewBlock> enumerate_new_blocks(const Tower &tower, std::size_t J,
                                           std::size_t limit) {
  const Schedule sched = s_schedule(tower, J);
  BigInt total = 0;
  for (const auto &st : sched.stages) {
    total += st.count;
  }
  if (total > BigInt(static_cast<unsigned long>(limit))) {
    throw ValidationError(kModule, "block list of " + total.get_str() +
                                       " entries exceeds the limit");
  }
  std::vector<NewBlock> out;
  for (const auto &st : sched.stages) {
    const LevelSet levels = st.stage == 1 ? LevelSet::full(tower, 1)
                                          : spacer_levels(tower, st.stage);
    BigInt k = st.first;
    for (const auto &r : levels.ranges()) {
      for (Level l = r.begin; l < r.end; ++l) {
        out.push_back({k, st.stage, l, st.blockMeasure, st.s});
        ++k;
      }
    }
  }
  return out;
}

void write_schedule_csv(std::ostream &out, const Schedule &s) {
  csv::Writer w(out);
  w.header({"stage", "first_block", "blocks", "mass_num", "mass_den", "mass",
            "s", "contribution_num", "contribution_den", "contribution",
            "partial_sum_num", "partial_sum_den", "partial_sum"});
  for (const auto &st : s.stages) {
    w.field(st.stage).field(st.first).field(st.count);
    w.rational(st.mass).field(st.s);
    w.rational(st.contribution).rational(st.partialSum);
    w.endRow();
  }
}

HomoclinicMap::HomoclinicMap(const Tower &tower, bool identity)
    : tower_(&tower), identity_(identity),
      schedule_(s_schedule(tower, tower.stageCount())) {
  delta_ = schedule_.stages.front().subMeasure;
  const BlockIndex idx(tower);
  spacers_ = idx.sets;
  prefix_ = idx.prefix;
  Rational pos = 0;
  Rational neg = 0;
  std::vector<Run> positive;
  std::vector<Run> negative;
  for (const auto &st : schedule_.stages) {
    if (st.count == 0) {
      continue;
    }
    const BigInt evens = evens_in(st.first, st.count);
    const BigInt odds = st.count - evens;
    if (evens > 0) {
      Run r;
      r.stage = st.stage;
      r.positive = true;
      r.lo = pos;
      pos += st.subMeasure * Rational(evens);
      r.hi = pos;
      r.firstIndex = first_with_parity(st.first, false);
      positive.push_back(r);
    }
    if (odds > 0) {
      Run r;
      r.stage = st.stage;
      r.positive = false;
      r.hi = -neg;
      neg += st.subMeasure * Rational(odds);
      r.lo = -neg;
      r.firstIndex = first_with_parity(st.first, true);
      negative.push_back(r);
    }
  }
  std::reverse(negative.begin(), negative.end());
  runs_ = negative;
  runs_.insert(runs_.end(), positive.begin(), positive.end());
  axisLo_ = canon(-neg);
  axisHi_ = canon(pos);
}

const HomoclinicMap::Run *HomoclinicMap::runAt(const Rational &x) const {
  auto it = std::upper_bound(
      runs_.begin(), runs_.end(), x,
      [](const Rational &v, const Run &r) { return v < r.lo; });
  if (it == runs_.begin()) {
    return nullptr;
  }
  const Run &r = *std::prev(it);
  return x < r.hi ? &r : nullptr;
}

std::optional<std::size_t> HomoclinicMap::stageAt(const Rational &x) const {
  const Run *r = runAt(x);
  if (!r) {
    return std::nullopt;
  }
  return r->stage;
}

const BigInt &HomoclinicMap::subBlocks(std::size_t stage) const {
  return schedule_.stages.at(stage - 1).s;
}

Level HomoclinicMap::spacerRank(std::size_t stage, Level level) const {
  return rank_in(spacers_[stage], prefix_[stage], level);
}

Level HomoclinicMap::spacerLevel(std::size_t stage, Level rank) const {
  return level_at(spacers_[stage], prefix_[stage], rank);
}

AxisPoint HomoclinicMap::toAxis(const PointState &p) const {
  check_point(*tower_, p);
  const PointState q = normalize(*tower_, p);
  const StageBlocks &st = schedule_.stages.at(q.stage - 1);
  const Level level = toInt64(q.level, kModule, "level");
  const BigInt k = st.first + BigInt(static_cast<long>(spacerRank(q.stage, level)));
  const bool odd = is_odd(k);
  const BigInt pos = (k - first_with_parity(st.first, odd)) / 2;
  const Rational &beta = st.subMeasure;
  AxisPoint a;
  a.sub = floor_q(q.offset / beta);
  const Rational rel = q.offset - Rational(a.sub) * beta;
  for (const auto &r : runs_) {
    if (r.stage == q.stage && r.positive == !odd) {
      a.x = r.positive ? Rational(r.lo + Rational(pos) * beta + rel)
                       : Rational(r.hi - Rational(pos + 1) * beta + rel);
      a.x.canonicalize();
      return a;
    }
  }
  throw Error(kModule, "no axis run for stage " + std::to_string(q.stage));
}

PointState HomoclinicMap::fromAxis(const AxisPoint &a) const {
  const Run *r = runAt(a.x);
  if (!r) {
    throw DepthError(kModule,
                     "needs more blocks: axis position " + a.x.get_str() +
                         " is outside the enumerated blocks",
                     tower_->stageCount() + 1);
  }
  const StageBlocks &st = schedule_.stages.at(r->stage - 1);
  const Rational &beta = st.subMeasure;
  if (a.sub < 0 || a.sub >= st.s) {
    throw ValidationError(kModule, "sub-block index out of range");
  }
  BigInt pos;
  Rational rel;
  if (r->positive) {
    pos = floor_q((a.x - r->lo) / beta);
    rel = a.x - r->lo - Rational(pos) * beta;
  } else {
    pos = ceil_q((r->hi - a.x) / beta) - 1;
    rel = a.x - (r->hi - Rational(pos + 1) * beta);
  }
  const BigInt k = r->firstIndex + 2 * pos;
  const Level rank = toInt64(k - st.first, kModule, "block rank");
  PointState p;
  p.stage = r->stage;
  p.level = BigInt(static_cast<long>(spacerLevel(r->stage, rank)));
  p.offset = canon(Rational(a.sub) * beta + rel);
  return p;
}

AxisPoint HomoclinicMap::applyAxis(const AxisPoint &a, Direction dir) const {
  if (identity_) {
    return a;
  }
  const auto stage = stageAt(a.x);
  if (!stage) {
    throw DepthError(kModule, "needs more blocks", tower_->stageCount() + 1);
  }
  const BigInt &s = subBlocks(*stage);
  if (dir == Direction::Forward) {
    if (a.sub + 1 < s) {
      return {a.x, a.sub + 1};
    }
    AxisPoint b{canon(a.x + delta_), 0};
    if (!runAt(b.x)) {
      throw DepthError(kModule, "needs more blocks: translation leaves the axis",
                       tower_->stageCount() + 1);
    }
    return b;
  }
  if (a.sub > 0) {
    return {a.x, a.sub - 1};
  }
  const Rational x = canon(a.x - delta_);
  const auto st = stageAt(x);
  if (!st) {
    throw DepthError(kModule, "needs more blocks: translation leaves the axis",
                     tower_->stageCount() + 1);
  }
  return {x, subBlocks(*st) - 1};
}

PointState HomoclinicMap::apply(const PointState &p, Direction dir) const {
  if (identity_) {
    return p;
  }
  return fromAxis(applyAxis(toAxis(p), dir));
}

void HomoclinicMap::splitIntoRuns(const Rational &lo, const Rational &hi,
                                  Direction dir, std::vector<AxisPiece> &out,
                                  std::vector<AxisPiece> &escaped) const {
  if (lo < axisLo_) {
    escaped.push_back({lo, std::min(hi, axisLo_), 0});
  }
  if (hi > axisHi_) {
    escaped.push_back({std::max(lo, axisHi_), hi, 0});
  }
  for (const auto &r : runs_) {
    const Rational a = std::max(lo, r.lo);
    const Rational b = std::min(hi, r.hi);
    if (a < b) {
      const BigInt sub =
          dir == Direction::Forward ? BigInt(0) : subBlocks(r.stage) - 1;
      out.push_back({a, b, sub});
    }
  }
}

std::vector<AxisPiece>
HomoclinicMap::applyPiece(const AxisPiece &piece, Direction dir,
                          std::vector<AxisPiece> &escaped) const {
  std::vector<AxisPiece> out;
  if (identity_) {
    out.push_back(piece);
    return out;
  }
  const auto stage = stageAt(piece.lo);
  if (!stage) {
    throw Error(kModule, "piece outside the enumerated blocks");
  }
  const BigInt &s = subBlocks(*stage);
  if (dir == Direction::Forward) {
    if (piece.sub + 1 < s) {
      out.push_back({piece.lo, piece.hi, piece.sub + 1});
    } else {
      splitIntoRuns(canon(piece.lo + delta_), canon(piece.hi + delta_), dir,
                    out, escaped);
    }
  } else if (piece.sub > 0) {
    out.push_back({piece.lo, piece.hi, piece.sub - 1});
  } else {
    splitIntoRuns(canon(piece.lo - delta_), canon(piece.hi - delta_), dir, out,
                  escaped);
  }
  return out;
}

std::vector<std::pair<Rational, Rational>>
HomoclinicMap::firstSubBlocks(std::size_t stage, const LevelSet &levels) const {
  std::vector<std::pair<Rational, Rational>> out;
  const StageBlocks &st = schedule_.stages.at(stage - 1);
  const Rational &beta = st.subMeasure;
  const Run *pos = nullptr;
  const Run *neg = nullptr;
  for (const auto &r : runs_) {
    if (r.stage == stage) {
      (r.positive ? pos : neg) = &r;
    }
  }
  for (const auto &range : levels.ranges()) {
    const BigInt k0 =
        st.first + BigInt(static_cast<long>(spacerRank(stage, range.begin)));
    const BigInt count(static_cast<long>(range.size()));
    const BigInt evens = evens_in(k0, count);
    const BigInt odds = count - evens;
    if (evens > 0) {
      const BigInt p0 =
          (first_with_parity(k0, false) - pos->firstIndex) / 2;
      out.emplace_back(canon(pos->lo + Rational(p0) * beta),
                       canon(pos->lo + Rational(p0 + evens) * beta));
    }
    if (odds > 0) {
      const BigInt p0 = (first_with_parity(k0, true) - neg->firstIndex) / 2;
      out.emplace_back(canon(neg->hi - Rational(p0 + odds) * beta),
                       canon(neg->hi - Rational(p0) * beta));
    }
  }
  return out;
}

std::vector<RetentionRow> retention_audit(const HomoclinicMap &map) {
  std::vector<RetentionRow> out;
  for (const auto &st : map.schedule().stages) {
    if (st.count == 0) {
      continue;
    }
    RetentionRow row;
    row.stage = st.stage;
    row.blocks = st.count;
    row.s = st.s;
    row.bound = canon(1 - Rational(1) / Rational(st.s));
    if (map.identity()) {
      row.ratio = 1;
    } else {
      // Only the first sub-block moves under P; its translate can overlap
      // itself when it is longer than delta.
      const Rational self = std::max(Rational(0), Rational(st.subMeasure - map.delta()));
      row.ratio = canon(row.bound + self / st.blockMeasure);
    }
    row.pass = row.ratio >= row.bound;
    out.push_back(std::move(row));
  }
  return out;
}

WanderingReport wandering_check(const HomoclinicMap &map, std::int64_t zmax) {
  if (zmax < 0) {
    throw ValidationError(kModule, "zmax must be >= 0");
  }
  WanderingReport rep;
  rep.zmax = zmax;
  for (const auto &st : map.schedule().stages) {
    rep.totalMass += st.mass;
  }
  std::vector<AxisPiece> all;
  const AxisPiece y{0, map.delta(), 0};
  all.push_back(y);
  rep.ledger.push_back({0, 1, map.delta(), 0});
  for (const Direction dir : {Direction::Forward, Direction::Backward}) {
    std::vector<AxisPiece> cur{y};
    Rational escaped = 0;
    for (std::int64_t z = 1; z <= zmax; ++z) {
      std::vector<AxisPiece> next;
      std::vector<AxisPiece> lost;
      for (const auto &p : cur) {
        auto img = map.applyPiece(p, dir, lost);
        next.insert(next.end(), img.begin(), img.end());
      }
      for (const auto &l : lost) {
        escaped += l.hi - l.lo;
      }
      Rational covered = 0;
      for (const auto &p : next) {
        covered += p.hi - p.lo;
      }
      all.insert(all.end(), next.begin(), next.end());
      rep.ledger.push_back({dir == Direction::Forward ? z : -z, next.size(),
                            canon(covered), canon(escaped)});
      cur = std::move(next);
    }
    if (escaped > 0) {
      rep.complete = false;
    }
  }
  std::sort(rep.ledger.begin(), rep.ledger.end(),
            [](const WanderingLedgerRow &a, const WanderingLedgerRow &b) {
              return a.z < b.z;
            });
  std::sort(all.begin(), all.end(), [](const AxisPiece &a, const AxisPiece &b) {
    if (a.sub != b.sub) {
      return a.sub < b.sub;
    }
    return a.lo < b.lo;
  });
  for (std::size_t i = 0; i < all.size(); ++i) {
    rep.coveredMass += all[i].hi - all[i].lo;
    if (i > 0 && all[i].sub == all[i - 1].sub && all[i].lo < all[i - 1].hi) {
      rep.disjoint = false;
    }
  }
  rep.coveredMass.canonicalize();
  rep.pass = rep.disjoint && rep.complete;
  return rep;
}

namespace {

// Measure of (U + d) ∩ U for a union U of intervals.
Rational self_overlap(std::vector<std::pair<Rational, Rational>> u,
                      const Rational &d) {
  std::sort(u.begin(), u.end());
  std::vector<std::pair<Rational, Rational>> merged;
  for (auto &iv : u) {
    if (!merged.empty() && iv.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, iv.second);
    } else {
      merged.push_back(iv);
    }
  }
  Rational total = 0;
  std::size_t k = 0;
  for (const auto &a : merged) {
    const Rational lo = a.first + d;
    const Rational hi = a.second + d;
    while (k < merged.size() && merged[k].second <= lo) {
      ++k;
    }
    for (std::size_t t = k; t < merged.size() && merged[t].first < hi; ++t) {
      const Rational x = std::max(lo, merged[t].first);
      const Rational y = std::min(hi, merged[t].second);
      if (x < y) {
        total += y - x;
      }
    }
  }
  return canon(total);
}

} // namespace

DefectResult block_defect(const HomoclinicMap &map, std::size_t j,
                            const BigInt &k, const BigInt &n,
                            std::optional<std::size_t> maxStage,
                            std::uint64_t mcSamples, std::uint64_t seed) {
  const Tower &tower = map.tower();
  if (j < 1 || !tower.hasNext(j)) {
    throw DepthError(kModule, "needs more stages for stage " + std::to_string(j),
                     j + 1);
  }
  const BigInt &hj = tower.heightExact(j);
  const BigInt &hn = tower.heightExact(j + 1);
  if (k < 0 || k > hj) {
    throw ValidationError(kModule, "k must lie in [0, h_j]");
  }
  if (n < hj || n > hn) {
    throw ValidationError(kModule, "n must lie in [h_j, h_{j+1}]");
  }
  const BigInt total = n + k;
  const std::size_t last = maxStage.value_or(tower.stageCount());
  const auto start = tower.firstStageTallerThan(j, total);
  if (!start || *start > last) {
    throw DepthError(kModule,
                     "needs more stages: no built stage taller than n + k = " +
                         total.get_str(),
                     start ? *start : tower.stageCount() + 1);
  }
  const Level t = toInt64(total, kModule, "n + k");

  DefectResult res;
  res.startStage = *start;
  std::vector<std::pair<Rational, Rational>> firsts;

  std::size_t L = *start;
  const LevelSet e = lift_level_set(tower, LevelSet::single(j, 0), L);
  Level h = tower.height(L);
  LevelSet escaped = clip(e, h - t, h);
  LevelSet image = translate(clip(e, 0, h - t), t);
  for (;;) {
    const LevelSet spacers = spacer_levels(tower, L);
    const LevelSet full = intersect(image, spacers);
    const LevelSet partial = subtract(image, spacers);
    res.partialMass += partial.measure(tower);
    if (!full.empty()) {
      auto iv = map.firstSubBlocks(L, full);
      firsts.insert(firsts.end(), iv.begin(), iv.end());
    }
    if (escaped.empty() || L >= last || !tower.hasNext(L)) {
      break;
    }
    const auto &o = tower.offsets(L);
    const Level H = tower.height(L + 1);
    std::vector<LevelRange> stay;
    std::vector<LevelRange> up;
    for (const Level oi : o) {
      for (const auto &r : escaped.ranges()) {
        const Level b = r.begin + oi;
        const Level en = r.end + oi;
        const Level cut = std::clamp(H - t, b, en);
        if (b < cut) {
          stay.push_back({b + t, cut + t});
        }
        if (cut < en) {
          up.push_back({cut, en});
        }
      }
    }
    ++L;
    h = H;
    image = LevelSet(L, std::move(stay));
    escaped = LevelSet(L, std::move(up));
  }
  res.endStage = L;
  res.escapedMass = escaped.measure(tower);

  Rational firstMass = 0;
  for (const auto &iv : firsts) {
    firstMass += iv.second - iv.first;
  }
  res.fullLeaving = map.identity()
                        ? Rational(0)
                        : canon(firstMass - self_overlap(firsts, map.delta()));
  const Rational slack = res.partialMass + res.escapedMass;
  const Rational muB = tower.baseMeasure(j);
  res.defect.lo = canon(std::max(Rational(0), Rational(res.fullLeaving - slack)) / muB);
  res.defect.hi =
      canon(std::min(Rational(1), Rational((res.fullLeaving + slack) / muB)));

  if (mcSamples > 0) {
    Rng rng(seed);
    const LevelSet ej = LevelSet::single(j, 0);
    McEstimate mc;
    mc.samples = mcSamples;
    std::uint64_t leaving = 0;
    for (std::uint64_t s = 0; s < mcSamples; ++s) {
      const PointState x = sample_uniform(tower, ej, rng, tower.stageCount());
      try {
        const PointState y = iterate(tower, x, total);
        const PointState sy = map.apply(y, Direction::Forward);
        if (!contains(tower, ej, iterate(tower, sy, -total))) {
          ++leaving;
        }
      } catch (const DepthError &) {
        ++leaving;
      }
    }
    mc.hits = leaving;
    const double f = static_cast<double>(leaving) / mcSamples;
    mc.estimate = f;
    mc.stderr_ = std::sqrt(f * (1 - f) / mcSamples);
    res.mc = mc;
  }
  return res;
}

SweepReport homoclinic_sweep(const HomoclinicMap &map, std::size_t jFrom,
                             std::size_t jTo, std::size_t samplesPerStage,
                             std::uint64_t seed) {
  const Tower &tower = map.tower();
  SweepReport rep;
  const Rng root(seed);
  for (std::size_t j = jFrom; j <= jTo; ++j) {
    if (!tower.hasNext(j)) {
      throw DepthError(kModule, "needs more stages for stage " +
                                    std::to_string(j),
                       j + 1);
    }
    Rng rng = root.split(j);
    const BigInt &hj = tower.heightExact(j);
    const BigInt &hn = tower.heightExact(j + 1);
    Rational best = -1;
    for (std::size_t s = 0; s < samplesPerStage; ++s) {
      BigInt k = 0;
      BigInt n = hj;
      if (s > 0) {
        k = rng.below(BigInt(hj + 1));
        n = hj + rng.below(BigInt(hn - hj + 1));
      }
      const DefectResult d = block_defect(map, j, k, n);
      best = std::max(best, d.defect.hi);
      rep.rows.push_back({j, k, n, d.defect});
    }
    if (samplesPerStage > 0) {
      rep.maxHi.emplace_back(j, best);
    }
  }
  return rep;
}

void write_sweep_csv(std::ostream &out, const SweepReport &report) {
  csv::Writer w(out);
  w.header({"j", "k", "n", "defect_lo", "defect_hi", "slack"});
  for (const auto &r : report.rows) {
    w.field(r.j).field(r.k).field(r.n);
    w.field(r.defect.lo.get_d()).field(r.defect.hi.get_d());
    w.field(r.defect.slack().get_d());
    w.endRow();
  }
}

FlowParams::Phi FlowParams::parsePhi(const std::string &name) {
  if (name == "reciprocal") {
    return Phi::Reciprocal;
  }
  if (name == "exp") {
    return Phi::Exp;
  }
  throw ValidationError(kModule, "unknown phi '" + name +
                                     "' (expected reciprocal or exp)");
}

std::string FlowParams::phiName(Phi phi) {
  return phi == Phi::Reciprocal ? "reciprocal" : "exp";
}

double FlowParams::operator()(double y) const {
  return phi == Phi::Reciprocal ? 1.0 / (1.0 + y) : std::exp(-y);
}

void FlowParams::validate() const {
  if (!(a < b) || !(c < d)) {
    throw ValidationError(kModule, "rectangle needs a < b and c < d");
  }
  if (c < 0) {
    throw ValidationError(kModule, "rectangle must lie in y >= 0");
  }
}

namespace {

Rational coordinate_with(const Tower &tower, const BlockIndex &idx,
                         const PointState &p) {
  const PointState q = normalize(tower, p);
  Rational base = q.stage == 1 ? Rational(0)
                               : tower.stage(q.stage - 1).towerMeasure;
  const Level rank = idx.rank(q.stage, toInt64(q.level, kModule, "level"));
  return canon(base + Rational(BigInt(static_cast<long>(rank))) *
                          tower.baseMeasure(q.stage) +
               q.offset);
}

PointState point_with(const Tower &tower, const BlockIndex &idx,
                      const Rational &y) {
  if (y < 0) {
    throw ValidationError(kModule, "coordinate must be >= 0");
  }
  Rational below = 0;
  for (std::size_t b = 1; b <= tower.stageCount(); ++b) {
    const Rational &upto = tower.stage(b).towerMeasure;
    if (y < upto) {
      const Rational rel = y - below;
      const BigInt rank = floor_q(rel / tower.baseMeasure(b));
      PointState p;
      p.stage = b;
      p.level = BigInt(static_cast<long>(
          idx.level(b, toInt64(rank, kModule, "rank"))));
      p.offset = canon(rel - Rational(rank) * tower.baseMeasure(b));
      return p;
    }
    below = upto;
  }
  throw DepthError(kModule,
                   "needs more stages: coordinate beyond mu(X_J)",
                   tower.stageCount() + 1);
}

} // namespace

Rational concatenation_coordinate(const Tower &tower, const PointState &p) {
  return coordinate_with(tower, BlockIndex(tower), p);
}

PointState point_at_coordinate(const Tower &tower, const Rational &y) {
  return point_with(tower, BlockIndex(tower), y);
}

FlowEstimate flow_defect(const Tower &tower, const FlowParams &params,
                         double t, const BigInt &n, std::uint64_t samples,
                         std::uint64_t seed) {
  params.validate();
  if (Rational(params.d) > tower.stage(tower.stageCount()).towerMeasure) {
    throw ValidationError(kModule, "rectangle exceeds the built y-range");
  }
  const BlockIndex idx(tower);
  FlowEstimate est;
  est.n = n;
  est.t = t;
  est.samples = samples;
  est.seed = seed;
  Rng rng(seed);
  std::uint64_t exits = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const double x = params.a + (params.b - params.a) * rng.uniform();
    const double y = params.c + (params.d - params.c) * rng.uniform();
    if (t == 0.0) {
      continue;
    }
    const PointState p = point_with(tower, idx, Rational(y));
    const PointState q = iterate(tower, p, n);
    const double yc = coordinate_with(tower, idx, q).get_d();
    const double moved = x + params(yc) * t;
    if (moved < params.a || moved > params.b) {
      ++exits;
    }
  }
  if (samples == 0 || exits == 0) {
    return est;
  }
  const double area = (params.b - params.a) * (params.d - params.c);
  const double f = static_cast<double>(exits) / samples;
  const double d2 = 2 * area * f;
  est.estimate = std::sqrt(d2);
  const double sd2 = 2 * area * std::sqrt(f * (1 - f) / samples);
  est.stderr_ = sd2 / (2 * est.estimate);
  return est;
}

void write_flow_csv(std::ostream &out, const std::vector<FlowEstimate> &rows) {
  csv::Writer w(out);
  w.header({"n", "t", "estimate", "stderr", "samples", "seed"});
  for (const auto &r : rows) {
    w.field(r.n).field(r.t).field(r.estimate).field(r.stderr_);
    w.field(static_cast<unsigned long long>(r.samples))
        .field(static_cast<unsigned long long>(r.seed));
    w.endRow();
  }
}

} // namespace rankone
