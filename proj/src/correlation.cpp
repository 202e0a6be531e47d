#include "rankone/correlation.hpp"

#include <algorithm>
#include <cmath>

#include "rankone/csv.hpp"
#include "rankone/point.hpp"

namespace rankone {

namespace {

constexpr const char *kModule = "correlation";

Rational mass(const Tower &tower, std::size_t stage, Level count) {
  Rational m = tower.baseMeasure(stage) * Rational(BigInt(count));
  m.canonicalize();
  return m;
}

Level to_level(const BigInt &v) { return toInt64(v, kModule, "shift"); }

// Levels p of `escaped` (stage K) re-expressed at stage K+1 whose image
// under T^shift still lies above the stage-(K+1) top.
LevelSet next_escapes(const Tower &tower, const LevelSet &escaped,
                      Level shift) {
  const std::size_t k = escaped.stage();
  const auto &o = tower.offsets(k);
  const Level H = tower.height(k + 1);
  std::vector<LevelRange> out;
  if (escaped.empty()) {
    return LevelSet(k + 1, {});
  }
  const Level need = H - shift - escaped.maxLevel();
  auto first = std::lower_bound(o.begin(), o.end(), need);
  for (auto it = first; it != o.end(); ++it) {
    for (const auto &r : escaped.ranges()) {
      const Level b = std::max(r.begin + *it, H - shift);
      const Level e = r.end + *it;
      if (b < e) {
        out.push_back({b, e});
      }
    }
  }
  return LevelSet(k + 1, std::move(out));
}

} // namespace

LiftCache::LiftCache(const Tower &tower, LevelSet base)
    : tower_(&tower), base_(std::move(base)) {
  base_.validate(tower);
  lifts_.resize(tower.stageCount() + 1);
  lifts_[base_.stage()] = base_;
}

const LevelSet &LiftCache::at(std::size_t stage) {
  if (stage < base_.stage()) {
    throw ValidationError(kModule, "lift below the base stage");
  }
  tower_->requireStage(stage, kModule);
  if (!lifts_[stage]) {
    lifts_[stage] = lift_one(*tower_, at(stage - 1));
  }
  return *lifts_[stage];
}

EscapeResolution resolve_pair_escapes(const Tower &tower, LiftCache &target,
                                      LevelSet escaped, Level m,
                                      const Rational &eps,
                                      std::size_t maxStage) {
  EscapeResolution res;
  std::size_t k = escaped.stage();
  res.reachedStage = k;
  res.remaining = escaped.measure(tower);
  while (res.remaining > eps && k < maxStage && tower.hasNext(k)) {
    const LevelSet &a = target.at(k);
    const auto &o = tower.offsets(k);
    const Level h = tower.height(k);
    Level hits = 0;
    // Pairs of columns (i, i') whose shifted copies meet: |o_i + m - o_i'| < h.
    std::size_t lo = 0;
    for (std::size_t i = 0; i < o.size(); ++i) {
      const Level center = o[i] + m;
      while (lo < o.size() && o[lo] <= center - h) {
        ++lo;
      }
      for (std::size_t t = lo; t < o.size() && o[t] < center + h; ++t) {
        hits += shifted_intersection_count(escaped, center - o[t], a);
      }
    }
    LevelSet next = next_escapes(tower, escaped, m);
    ++k;
    res.hitMass += mass(tower, k, hits);
    res.remaining = next.measure(tower);
    res.reachedStage = k;
    escaped = std::move(next);
  }
  return res;
}

PairQuery::PairQuery(const Tower &tower, LevelSet a, LevelSet b)
    : tower_(&tower), a_(tower, std::move(a)), b_(tower, std::move(b)) {
  if (a_.base().stage() != b_.base().stage()) {
    throw ValidationError(kModule, "pair query sets must share a stage");
  }
}

EnclosureResult PairQuery::enclosure(const BigInt &m, const Rational &eps,
                                     std::optional<std::size_t> maxStage) {
  if (m < 0) {
    throw ValidationError(kModule, "shift m must be >= 0");
  }
  if (eps <= 0) {
    throw ValidationError(kModule, "tolerance must be > 0");
  }
  const Tower &tower = *tower_;
  const std::size_t last = maxStage.value_or(tower.stageCount());
  const std::size_t j0 = a_.base().stage();
  const auto start = tower.firstStageTallerThan(j0, m);
  if (!start || *start > last) {
    const std::size_t need = start ? *start : tower.stageCount() + 1;
    throw DepthError(kModule,
                     "needs more stages: no built stage taller than m = " +
                         m.get_str(),
                     need);
  }
  EnclosureResult out;
  out.startStage = *start;
  const Level shift = to_level(m);
  const LevelSet &a = a_.at(*start);
  const LevelSet &b = b_.at(*start);
  const Level h = tower.height(*start);
  Rational lo = mass(tower, *start, shifted_intersection_count(b, shift, a));
  LevelSet escaped = clip(b, h - shift, h);
  const EscapeResolution esc =
      resolve_pair_escapes(tower, a_, std::move(escaped), shift, eps, last);
  lo += esc.hitMass;
  out.value.lo = lo;
  out.value.hi = lo + esc.remaining;
  out.endStage = esc.reachedStage;
  out.stageLimited = esc.remaining > eps;
  return out;
}

MeasureEnclosure pair_enclosure(const Tower &tower, const LevelSet &a,
                                const LevelSet &b, const BigInt &m,
                                const Rational &eps,
                                std::optional<std::size_t> maxStage) {
  PairQuery q(tower, a, b);
  return q.enclosure(m, eps, maxStage).value;
}

TripleQuery::TripleQuery(const Tower &tower, LevelSet a, LevelSet b,
                         LevelSet c)
    : tower_(&tower), a_(tower, std::move(a)), b_(tower, std::move(b)),
      c_(tower, std::move(c)) {
  if (a_.base().stage() != b_.base().stage() ||
      a_.base().stage() != c_.base().stage()) {
    throw ValidationError(kModule, "triple query sets must share a stage");
  }
}

EnclosureResult TripleQuery::enclosure(const BigInt &m, const BigInt &n,
                                       const Rational &eps,
                                       std::optional<std::size_t> maxStage) {
  if (m < 0 || n < 0) {
    throw ValidationError(kModule, "shifts m, n must be >= 0");
  }
  if (eps <= 0) {
    throw ValidationError(kModule, "tolerance must be > 0");
  }
  const Tower &tower = *tower_;
  const std::size_t last = maxStage.value_or(tower.stageCount());
  const std::size_t j0 = a_.base().stage();
  const BigInt total = m + n;
  const auto start = tower.firstStageTallerThan(j0, total);
  if (!start || *start > last) {
    const std::size_t need = start ? *start : tower.stageCount() + 1;
    throw DepthError(kModule,
                     "needs more stages: no built stage taller than m + n = " +
                         total.get_str(),
                     need);
  }
  const Level sn = to_level(n);
  const Level st = to_level(total);

  // Points y of C with T^n y in B and T^(m+n) y in A, counted per level.
  std::size_t k = *start;
  Level h = tower.height(k);
  const LevelSet &c0 = c_.at(k);
  const LevelSet yb = intersect(c0, translate(b_.at(k), -sn));
  Rational lo = mass(tower, k, shifted_intersection_count(yb, st, a_.at(k)));
  LevelSet escaped = clip(c0, h - st, h);
  Rational remaining = escaped.measure(tower);

  while (remaining > eps && k < last && tower.hasNext(k)) {
    const auto &o = tower.offsets(k);
    const LevelSet &a = a_.at(k);
    const LevelSet &b = b_.at(k);
    const Level H = tower.height(k + 1);
    Level hits = 0;
    std::vector<LevelRange> nextRanges;
    for (std::size_t i = 0; i < o.size(); ++i) {
      const LevelSet x = translate(escaped, o[i]);
      const LevelSet stay = clip(x, 0, H - st);
      const LevelSet up = clip(x, H - st, H);
      nextRanges.insert(nextRanges.end(), up.ranges().begin(),
                        up.ranges().end());
      if (stay.empty()) {
        continue;
      }
      // Copies of B (resp. A) at stage k+1 that the shifted piece can meet.
      auto bLo = std::upper_bound(o.begin(), o.end(), o[i] + sn - h);
      for (auto bt = bLo; bt != o.end() && *bt < o[i] + sn + h; ++bt) {
        const LevelSet inB = intersect(stay, translate(b, *bt - sn));
        if (inB.empty()) {
          continue;
        }
        auto aLo = std::upper_bound(o.begin(), o.end(), o[i] + st - h);
        for (auto at = aLo; at != o.end() && *at < o[i] + st + h; ++at) {
          hits += shifted_intersection_count(inB, st - *at, a);
        }
      }
    }
    ++k;
    h = H;
    lo += mass(tower, k, hits);
    escaped = LevelSet(k, std::move(nextRanges));
    remaining = escaped.measure(tower);
  }

  EnclosureResult out;
  out.startStage = *start;
  out.endStage = k;
  out.value.lo = lo;
  out.value.hi = lo + remaining;
  out.stageLimited = remaining > eps;
  return out;
}

MeasureEnclosure triple_enclosure(const Tower &tower, const LevelSet &a,
                                  const LevelSet &b, const LevelSet &c,
                                  const BigInt &m, const BigInt &n,
                                  const Rational &eps,
                                  std::optional<std::size_t> maxStage) {
  TripleQuery q(tower, a, b, c);
  return q.enclosure(m, n, eps, maxStage).value;
}

McEstimate mc_correlation(const Tower &tower, const LevelSet &a,
                          const LevelSet &b, const BigInt &m,
                          std::uint64_t samples, std::uint64_t seed) {
  McEstimate est;
  est.samples = samples;
  if (b.empty() || samples == 0) {
    return est;
  }
  Rng rng(seed);
  for (std::uint64_t s = 0; s < samples; ++s) {
    const PointState p =
        sample_uniform(tower, b, rng, tower.stageCount());
    const PointState q = iterate(tower, p, m);
    if (contains(tower, a, q)) {
      ++est.hits;
    }
  }
  const double mu = b.measure(tower).get_d();
  const double freq = static_cast<double>(est.hits) / samples;
  est.estimate = mu * freq;
  est.stderr_ = mu * std::sqrt(freq * (1.0 - freq) / samples);
  return est;
}

Rational default_epsilon(const Tower &tower, const LevelSet &a) {
  Rational e = a.measure(tower) / 1000;
  if (e == 0) {
    e = tower.baseMeasure(a.stage()) / 1000;
  }
  e.canonicalize();
  return e;
}

std::vector<SidonBoundRow> sidon_bound_report(const Tower &tower,
                                              const LevelSet &a,
                                              const LevelSet &b,
                                              const SidonBoundOptions &opt) {
  const Rational eps = opt.epsilon.value_or(default_epsilon(tower, a));
  const Rational muA = a.measure(tower);
  std::vector<SidonBoundRow> rows;
  if (opt.jFrom < a.stage() || opt.jFrom < b.stage()) {
    throw ValidationError(kModule,
                          "stage range must start at or above the set stage");
  }
  PairQuery query(tower, a, b);
  Rng rng(opt.seed);
  for (std::size_t j = opt.jFrom; j <= opt.jTo; ++j) {
    if (!tower.hasNext(j)) {
      throw DepthError(kModule, "needs more stages for stage interval " +
                                    std::to_string(j),
                       j + 1);
    }
    const BigInt &hj = tower.heightExact(j);
    const BigInt &hn = tower.heightExact(j + 1);
    Rational bound = muA / Rational(tower.columns(j));
    bound.canonicalize();
    std::vector<BigInt> ms;
    // m = h_{j+1} needs a stage taller than h_{j+1}.
    const BigInt top = tower.firstStageTallerThan(j, hn) ? hn : BigInt(hn - 1);
    if (hn <= BigInt(static_cast<unsigned long>(opt.exhaustiveLimit))) {
      for (BigInt m = hj; m <= top; ++m) {
        ms.push_back(m);
      }
    } else {
      ms.push_back(hj);
      ms.push_back(top);
      const BigInt width = top - hj + 1;
      for (std::uint64_t s = 0; s < opt.samplesPerStage; ++s) {
        ms.push_back(hj + rng.below(width));
      }
      std::sort(ms.begin(), ms.end());
      ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
    }
    for (const auto &m : ms) {
      const EnclosureResult r = query.enclosure(m, eps);
      SidonBoundRow row;
      row.m = m;
      row.j = j;
      row.value = r.value;
      row.bound = bound;
      row.pass = r.value.lo <= bound;
      row.slackExceeds = r.value.hi > bound;
      row.equality = r.value.lo == bound || r.value.hi == bound;
      row.stageLimited = r.stageLimited;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_sidon_bound_csv(std::ostream &out,
                           const std::vector<SidonBoundRow> &rows,
                           const Rational &epsilon) {
  csv::Writer w(out);
  w.header({"m", "j", "lo_num", "lo_den", "lo", "hi_num", "hi_den", "hi",
            "bound_num", "bound_den", "bound", "pass", "slackExceeds",
            "slackWithinEps", "equality", "stageLimited"});
  for (const auto &r : rows) {
    w.field(r.m).field(r.j);
    w.rational(r.value.lo).rational(r.value.hi).rational(r.bound);
    w.field(r.pass).field(r.slackExceeds);
    w.field(r.value.slack() <= epsilon).field(r.equality).field(r.stageLimited);
    w.endRow();
  }
}

std::vector<BigInt> stage_interval_grid(const Tower &tower, std::size_t jFrom,
                                        std::size_t jTo,
                                        std::size_t pointsPerStage) {
  std::vector<BigInt> grid;
  for (std::size_t j = jFrom; j <= jTo; ++j) {
    if (!tower.hasNext(j)) {
      break;
    }
    const BigInt lo = tower.heightExact(j) + 1;
    const BigInt hi = tower.heightExact(j + 1);
    const double llo = std::log(lo.get_d());
    const double lhi = std::log(hi.get_d());
    for (std::size_t p = 0; p < pointsPerStage; ++p) {
      const double t = pointsPerStage == 1
                           ? 0.0
                           : static_cast<double>(p) / (pointsPerStage - 1);
      BigInt m(std::floor(std::exp(llo + t * (lhi - llo))));
      m = std::clamp(m, lo, hi);
      grid.push_back(m);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

DecayReport decay_report(const Tower &tower, const PsiSpec &psi,
                         const LevelSet &a, const std::vector<BigInt> &mGrid,
                         const Rational &eps) {
  psi.validate();
  DecayReport rep;
  const Rational muA = a.measure(tower);
  for (std::size_t j = 1; tower.hasNext(j); ++j) {
    DecayStage st;
    st.j = j;
    st.keyInequality =
        psi.reachesSqrt(tower.heightExact(j + 1), tower.heightExact(j));
    st.stageConstant = muA.get_d() * std::sqrt(tower.heightExact(j + 1).get_d()) /
                       (static_cast<double>(tower.columns(j)) *
                        std::sqrt(tower.heightExact(j).get_d()));
    rep.stages.push_back(st);
  }
  // For psi = (m+2)^(p/q), C(m)^(2q) = hi^(2q) m^q / (m+2)^(2p) is rational
  // and orders the rows exactly.
  rep.exactComparisons = psi.kind == PsiSpec::Kind::Power;
  const unsigned long pa =
      rep.exactComparisons ? psi.alpha.get_num().get_ui() : 0;
  const unsigned long qa =
      rep.exactComparisons ? psi.alpha.get_den().get_ui() : 1;
  auto key_of = [&](const BigInt &m, const Rational &hi) {
    if (!rep.exactComparisons) {
      return Rational(0);
    }
    BigInt hn;
    BigInt hd;
    mpz_pow_ui(hn.get_mpz_t(), hi.get_num_mpz_t(), 2 * qa);
    mpz_pow_ui(hd.get_mpz_t(), hi.get_den_mpz_t(), 2 * qa);
    const Rational num(hn, hd);
    BigInt mq;
    BigInt m2;
    mpz_pow_ui(mq.get_mpz_t(), m.get_mpz_t(), qa);
    const BigInt base = m + 2;
    mpz_pow_ui(m2.get_mpz_t(), base.get_mpz_t(), 2 * pa);
    Rational k = num * Rational(mq) / Rational(m2);
    k.canonicalize();
    return k;
  };
  auto greater = [&](double c1, const Rational &k1, double c2,
                     const Rational &k2) {
    return rep.exactComparisons ? k1 > k2 : c1 > c2;
  };

  std::vector<Rational> stageKey(rep.stages.size() + 1, Rational(0));
  Rational maxKey = 0;
  PairQuery query(tower, a, a);
  for (const auto &m : mGrid) {
    if (m < 1) {
      throw ValidationError(kModule, "decay grid needs m >= 1");
    }
    DecayRow row;
    row.m = m;
    for (std::size_t j = 1; tower.hasNext(j); ++j) {
      if (m > tower.heightExact(j) && m <= tower.heightExact(j + 1)) {
        row.interval = j;
      }
    }
    const EnclosureResult r = query.enclosure(m, eps);
    row.value = r.value;
    row.stageLimited = r.stageLimited;
    const double md = m.get_d();
    row.psiOverSqrt = psi(md) / std::sqrt(md);
    row.impliedC = r.value.hi.get_d() / row.psiOverSqrt;
    const Rational key = key_of(m, r.value.hi);
    if (greater(row.impliedC, key, rep.maxC, maxKey)) {
      rep.maxC = row.impliedC;
      maxKey = key;
      rep.maxInterval = row.interval;
    }
    for (auto &st : rep.stages) {
      if (st.j == row.interval) {
        if (greater(row.impliedC, key, st.maxImpliedC, stageKey[st.j])) {
          st.maxImpliedC = row.impliedC;
          stageKey[st.j] = key;
        }
        ++st.rows;
      }
    }
    rep.rows.push_back(std::move(row));
  }
  // The maximum must sit in the first two populated intervals.
  std::vector<const DecayStage *> populated;
  for (const auto &st : rep.stages) {
    if (st.rows > 0) {
      populated.push_back(&st);
    }
  }
  double early = 0.0;
  Rational earlyKey = 0;
  for (std::size_t i = 0; i < populated.size(); ++i) {
    const DecayStage &st = *populated[i];
    if (i < 2) {
      if (greater(st.maxImpliedC, stageKey[st.j], early, earlyKey)) {
        early = st.maxImpliedC;
        earlyKey = stageKey[st.j];
      }
    } else if (greater(st.maxImpliedC, stageKey[st.j], early, earlyKey)) {
      rep.stable = false;
    }
  }
  for (const auto &st : rep.stages) {
    if (!st.keyInequality) {
      rep.warnings.push_back("sqrt(h_j)/psi(h_{j+1}) > 1 at stage " +
                             std::to_string(st.j));
    }
  }
  return rep;
}

void write_decay_csv(std::ostream &out, const DecayReport &report) {
  csv::Writer w(out);
  w.header({"m", "interval", "lo_num", "lo_den", "lo", "hi_num", "hi_den",
            "hi", "psi_over_sqrt", "C", "stageLimited"});
  for (const auto &r : report.rows) {
    w.field(r.m).field(r.interval);
    w.rational(r.value.lo).rational(r.value.hi);
    w.field(r.psiOverSqrt).field(r.impliedC).field(r.stageLimited);
    w.endRow();
  }
}

std::vector<SupportDecayRow>
support_decay_report(const Tower &tower, const LevelSet &support,
                     const LevelSet &a, const std::vector<BigInt> &nGrid,
                     const Rational &eps) {
  // mu(A ∩ T^-n S) = mu(T^n A ∩ S).
  PairQuery query(tower, support, a);
  std::vector<SupportDecayRow> rows;
  for (const auto &n : nGrid) {
    rows.push_back({n, query.enclosure(n, eps).value});
  }
  return rows;
}

void write_support_decay_csv(std::ostream &out,
                             const std::vector<SupportDecayRow> &rows) {
  csv::Writer w(out);
  w.header({"n", "lo_num", "lo_den", "lo", "hi_num", "hi_den", "hi"});
  for (const auto &r : rows) {
    w.field(r.n).rational(r.value.lo).rational(r.value.hi);
    w.endRow();
  }
}

} // namespace rankone
