#include "rankone/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rankone/csv.hpp"

namespace rankone {

namespace {

constexpr const char *kModule = "poisson";
constexpr long double kWiden = 1e-13L;

struct Interval {
  Rational lo;
  Rational hi;
};

struct FloatInterval {
  long double lo = 0;
  long double hi = 0;
};

// Range of Pois(lambda, k) for lambda in [l, u]; the mass is unimodal in
// lambda with its peak at lambda = k.
FloatInterval pmf_range(const Interval &lam, std::uint64_t k) {
  const long double l = lam.lo.get_d();
  const long double u = lam.hi.get_d();
  const long double fl = poisson_pmf(l, k);
  const long double fu = poisson_pmf(u, k);
  FloatInterval r{std::min(fl, fu), std::max(fl, fu)};
  const long double kk = static_cast<long double>(k);
  if (l <= kk && kk <= u) {
    r.hi = std::max(r.hi, poisson_pmf(kk, k));
  }
  return r;
}

FloatInterval mul(const FloatInterval &a, const FloatInterval &b) {
  return {a.lo * b.lo, a.hi * b.hi};
}

Interval clip_nonneg(Interval v, const char *name,
                     std::vector<std::string> &warnings) {
  if (v.lo < 0) {
    warnings.push_back(std::string("atom ") + name +
                       " lower bound negative; clipped to 0");
    v.lo = 0;
  }
  if (v.hi < 0) {
    v.hi = 0;
  }
  return v;
}

ProbEnclosure widen(const FloatInterval &v) {
  ProbEnclosure out;
  out.lo = static_cast<double>(std::max(0.0L, v.lo * (1 - kWiden)));
  out.hi = static_cast<double>(std::min(1.0L, v.hi * (1 + kWiden)));
  out.lo = std::nextafter(out.lo, 0.0);
  out.hi = std::min(1.0, std::nextafter(out.hi, 2.0));
  return out;
}

std::size_t common_stage(const std::vector<ShiftedEvent> &events) {
  std::size_t s = 1;
  for (const auto &e : events) {
    s = std::max(s, e.event.set.stage());
  }
  return s;
}

MeasureEnclosure overlap(const Tower &tower, const LevelSet &a,
                         const BigInt &sa, const LevelSet &b,
                         const BigInt &sb, const Rational &eps,
                         bool &stageLimited) {
  // mu(T^sa A ∩ T^sb B) = mu(A ∩ T^(sb-sa) B).
  const bool forward = sa <= sb;
  PairQuery q(tower, forward ? a : b, forward ? b : a);
  const EnclosureResult r = q.enclosure(forward ? sb - sa : sa - sb, eps);
  stageLimited = stageLimited || r.stageLimited;
  return r.value;
}

std::size_t interval_of(const Tower &tower, const BigInt &n) {
  for (std::size_t j = 1; tower.hasNext(j); ++j) {
    if (n > tower.heightExact(j) && n <= tower.heightExact(j + 1)) {
      return j;
    }
  }
  return 0;
}

void fill_deviation(const ProbEnclosure &joint, double product, double &lo,
                    double &hi, double &absMax) {
  lo = joint.lo - product;
  hi = joint.hi - product;
  absMax = std::max(std::fabs(lo), std::fabs(hi));
}

} // namespace

long double poisson_pmf(long double mean, std::uint64_t k) {
  if (mean < 0) {
    throw ValidationError(kModule, "Poisson mean must be >= 0");
  }
  if (mean == 0) {
    return k == 0 ? 1.0L : 0.0L;
  }
  const long double kk = static_cast<long double>(k);
  return std::exp(kk * std::log(mean) - mean - std::lgamma(kk + 1));
}

CylinderProb cylinder_prob(const Tower &tower,
                           const std::vector<CountEvent> &events) {
  std::size_t stage = 1;
  for (const auto &e : events) {
    e.set.validate(tower);
    stage = std::max(stage, e.set.stage());
  }
  std::vector<LevelSet> lifted;
  for (const auto &e : events) {
    lifted.push_back(lift_level_set(tower, e.set, stage));
  }
  for (std::size_t i = 0; i < lifted.size(); ++i) {
    for (std::size_t k = i + 1; k < lifted.size(); ++k) {
      if (!intersect(lifted[i], lifted[k]).empty()) {
        throw ValidationError(kModule, "sets " + std::to_string(i) + " and " +
                                           std::to_string(k) +
                                           " intersect; use joint_prob");
      }
    }
  }
  CylinderProb out;
  long double value = 1.0L;
  for (const auto &e : events) {
    PoissonTerm t;
    t.mean = e.set.measure(tower);
    t.count = e.count;
    const long double p = poisson_pmf(t.mean.get_d(), e.count);
    t.value = static_cast<double>(p);
    value *= p;
    out.terms.push_back(t);
  }
  out.value = static_cast<double>(value);
  return out;
}

Normalization cylinder_normalization(const Rational &mean,
                                     std::uint64_t maxCount) {
  const long double mu = mean.get_d();
  Normalization out;
  long double sum = 0;
  for (std::uint64_t a = 0; a <= maxCount; ++a) {
    sum += poisson_pmf(mu, a);
  }
  out.sum = static_cast<double>(std::min(sum, 1.0L));
  const long double x = static_cast<long double>(maxCount + 1);
  if (mu == 0) {
    out.tailBound = 0.0;
  } else if (x > mu) {
    // P(N >= x) <= e^-mu (e mu / x)^x
    out.tailBound = static_cast<double>(
        std::exp(-mu + x * (1 + std::log(mu) - std::log(x))));
  } else {
    out.tailBound = 1.0;
  }
  return out;
}

double marginal_product(const Tower &tower,
                        const std::vector<ShiftedEvent> &events) {
  long double p = 1.0L;
  for (const auto &e : events) {
    p *= poisson_pmf(e.event.set.measure(tower).get_d(), e.event.count);
  }
  return static_cast<double>(p);
}

JointResult joint_prob(const Tower &tower,
                       const std::vector<ShiftedEvent> &events,
                       const Rational &eps) {
  if (events.size() < 2 || events.size() > 3) {
    throw ValidationError(kModule, "joint_prob supports 2 or 3 events");
  }
  for (const auto &e : events) {
    e.event.set.validate(tower);
  }
  const std::size_t stage = common_stage(events);
  std::vector<LevelSet> sets;
  std::vector<Rational> mu;
  for (const auto &e : events) {
    sets.push_back(lift_level_set(tower, e.event.set, stage));
    mu.push_back(sets.back().measure(tower));
  }

  JointResult out;
  const std::size_t n = events.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) {
      out.overlaps.push_back(overlap(tower, sets[i], events[i].shift, sets[k],
                                     events[k].shift, eps, out.stageLimited));
    }
  }
  bool pairwiseZero = true;
  for (const auto &o : out.overlaps) {
    pairwiseZero = pairwiseZero && o.hi == 0;
  }
  if (n == 3 && !pairwiseZero) {
    std::vector<std::size_t> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) {
                       return events[x].shift < events[y].shift;
                     });
    const auto &s0 = events[order[0]].shift;
    const auto &s1 = events[order[1]].shift;
    const auto &s2 = events[order[2]].shift;
    TripleQuery q(tower, sets[order[0]], sets[order[1]], sets[order[2]]);
    const EnclosureResult r = q.enclosure(s1 - s0, s2 - s1, eps);
    out.stageLimited = out.stageLimited || r.stageLimited;
    MeasureEnclosure t = r.value;
    for (const auto &o : out.overlaps) {
      t.hi = std::min(t.hi, o.hi);
    }
    t.lo = std::min(t.lo, t.hi);
    out.triple = t;
  } else if (n == 3) {
    out.triple = MeasureEnclosure{0, 0};
  }

  if (pairwiseZero) {
    const double p = marginal_product(tower, events);
    out.prob = {p, p};
    return out;
  }

  bool allZeroCounts = true;
  for (const auto &e : events) {
    allZeroCounts = allZeroCounts && e.event.count == 0;
  }

  FloatInterval prob;
  if (n == 2) {
    const Interval c{out.overlaps[0].lo, out.overlaps[0].hi};
    if (allZeroCounts) {
      const Rational base = mu[0] + mu[1];
      prob = {std::exp(-static_cast<long double>(Rational(base - c.lo).get_d())),
              std::exp(-static_cast<long double>(Rational(base - c.hi).get_d()))};
    } else {
      const Interval a1 = clip_nonneg({mu[0] - c.hi, mu[0] - c.lo}, "1",
                                      out.warnings);
      const Interval a2 = clip_nonneg({mu[1] - c.hi, mu[1] - c.lo}, "2",
                                      out.warnings);
      const std::uint64_t k1 = events[0].event.count;
      const std::uint64_t k2 = events[1].event.count;
      for (std::uint64_t j = 0; j <= std::min(k1, k2); ++j) {
        const FloatInterval term =
            mul(mul(pmf_range(c, j), pmf_range(a1, k1 - j)),
                pmf_range(a2, k2 - j));
        prob.lo += term.lo;
        prob.hi += term.hi;
      }
    }
  } else {
    const Interval p12{out.overlaps[0].lo, out.overlaps[0].hi};
    const Interval p13{out.overlaps[1].lo, out.overlaps[1].hi};
    const Interval p23{out.overlaps[2].lo, out.overlaps[2].hi};
    const Interval t{out.triple->lo, out.triple->hi};
    if (allZeroCounts) {
      const Rational base = mu[0] + mu[1] + mu[2];
      Rational ulo = base - p12.hi - p13.hi - p23.hi + t.lo;
      const Rational uhi = base - p12.lo - p13.lo - p23.lo + t.hi;
      ulo = std::max({ulo, mu[0], mu[1], mu[2]});
      prob = {std::exp(-static_cast<long double>(uhi.get_d())),
              std::exp(-static_cast<long double>(ulo.get_d()))};
    } else {
      auto &w = out.warnings;
      const Interval a12 = clip_nonneg({p12.lo - t.hi, p12.hi - t.lo}, "12", w);
      const Interval a13 = clip_nonneg({p13.lo - t.hi, p13.hi - t.lo}, "13", w);
      const Interval a23 = clip_nonneg({p23.lo - t.hi, p23.hi - t.lo}, "23", w);
      const Interval a1 = clip_nonneg(
          {mu[0] - p12.hi - p13.hi + t.lo, mu[0] - p12.lo - p13.lo + t.hi},
          "1", w);
      const Interval a2 = clip_nonneg(
          {mu[1] - p12.hi - p23.hi + t.lo, mu[1] - p12.lo - p23.lo + t.hi},
          "2", w);
      const Interval a3 = clip_nonneg(
          {mu[2] - p13.hi - p23.hi + t.lo, mu[2] - p13.lo - p23.lo + t.hi},
          "3", w);
      const std::int64_t k1 = static_cast<std::int64_t>(events[0].event.count);
      const std::int64_t k2 = static_cast<std::int64_t>(events[1].event.count);
      const std::int64_t k3 = static_cast<std::int64_t>(events[2].event.count);
      for (std::int64_t x = 0; x <= std::min({k1, k2, k3}); ++x) {
        for (std::int64_t y12 = 0; y12 <= std::min(k1, k2) - x; ++y12) {
          for (std::int64_t y13 = 0; y13 <= std::min(k1 - y12, k3) - x;
               ++y13) {
            for (std::int64_t y23 = 0;
                 y23 <= std::min(k2 - y12, k3 - y13) - x; ++y23) {
              const std::int64_t r1 = k1 - x - y12 - y13;
              const std::int64_t r2 = k2 - x - y12 - y23;
              const std::int64_t r3 = k3 - x - y13 - y23;
              if (r1 < 0 || r2 < 0 || r3 < 0) {
                continue;
              }
              FloatInterval term = pmf_range(t, x);
              term = mul(term, pmf_range(a12, y12));
              term = mul(term, pmf_range(a13, y13));
              term = mul(term, pmf_range(a23, y23));
              term = mul(term, pmf_range(a1, r1));
              term = mul(term, pmf_range(a2, r2));
              term = mul(term, pmf_range(a3, r3));
              prob.lo += term.lo;
              prob.hi += term.hi;
            }
          }
        }
      }
    }
  }
  out.prob = widen(prob);
  return out;
}

std::vector<PointState> sample_configuration(const Tower &tower,
                                             const LevelSet &region,
                                             Rng &rng) {
  std::vector<PointState> pts;
  if (region.empty()) {
    return pts;
  }
  const long double mu = region.measure(tower).get_d();
  // Inversion of the Poisson CDF on the 2^-53 grid of rng.uniform().
  const long double u = rng.uniform();
  std::uint64_t count = 0;
  long double cdf = poisson_pmf(mu, 0);
  const long double cap = mu + 50 * std::sqrt(mu) + 50;
  while (u >= cdf && count < cap) {
    ++count;
    cdf += poisson_pmf(mu, count);
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    pts.push_back(sample_uniform(tower, region, rng, tower.stageCount()));
  }
  return pts;
}

McEstimate mc_joint_prob(const Tower &tower,
                         const std::vector<ShiftedEvent> &events,
                         std::uint64_t samples, std::uint64_t seed) {
  McEstimate est;
  est.samples = samples;
  Rng rng(seed);
  for (std::uint64_t s = 0; s < samples; ++s) {
    // Process on the union: points of each shifted set not already covered
    // by an earlier one.
    std::vector<PointState> pts;
    for (std::size_t i = 0; i < events.size(); ++i) {
      for (const auto &x :
           sample_configuration(tower, events[i].event.set, rng)) {
        const PointState y = iterate(tower, x, events[i].shift);
        bool fresh = true;
        for (std::size_t k = 0; k < i && fresh; ++k) {
          fresh = !contains(tower, events[k].event.set,
                            iterate(tower, y, -events[k].shift));
        }
        if (fresh) {
          pts.push_back(y);
        }
      }
    }
    bool hit = true;
    for (const auto &e : events) {
      std::uint64_t c = 0;
      for (const auto &y : pts) {
        if (contains(tower, e.event.set, iterate(tower, y, -e.shift))) {
          ++c;
        }
      }
      hit = hit && c == e.event.count;
    }
    if (hit) {
      ++est.hits;
    }
  }
  if (samples > 0) {
    const double f = static_cast<double>(est.hits) / samples;
    est.estimate = f;
    est.stderr_ = std::sqrt(f * (1 - f) / samples);
  }
  return est;
}

std::vector<MixingRow> mixing_report(const Tower &tower, const CountEvent &v,
                                     const CountEvent &w,
                                     const std::vector<BigInt> &nGrid,
                                     const Rational &eps) {
  std::vector<MixingRow> rows;
  for (const auto &n : nGrid) {
    if (n < 0) {
      throw ValidationError(kModule, "mixing grid needs n >= 0");
    }
    const std::vector<ShiftedEvent> ev{{v, 0}, {w, n}};
    const JointResult r = joint_prob(tower, ev, eps);
    MixingRow row;
    row.n = n;
    row.interval = interval_of(tower, n);
    row.overlap = r.overlaps[0];
    row.joint = r.prob;
    row.product = marginal_product(tower, ev);
    row.stageLimited = r.stageLimited;
    fill_deviation(row.joint, row.product, row.devLo, row.devHi, row.devAbs);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_mixing_csv(std::ostream &out, const std::vector<MixingRow> &rows) {
  csv::Writer wr(out);
  wr.header({"n", "interval", "overlap_lo_num", "overlap_lo_den", "overlap_lo",
             "overlap_hi_num", "overlap_hi_den", "overlap_hi", "joint_lo",
             "joint_hi", "product", "dev_lo", "dev_hi", "dev_abs",
             "stageLimited"});
  for (const auto &r : rows) {
    wr.field(r.n).field(r.interval);
    wr.rational(r.overlap.lo).rational(r.overlap.hi);
    wr.field(r.joint.lo).field(r.joint.hi).field(r.product);
    wr.field(r.devLo).field(r.devHi).field(r.devAbs).field(r.stageLimited);
    wr.endRow();
  }
}

std::vector<TripleMixingRow>
triple_mixing_report(const Tower &tower, const CountEvent &u,
                     const CountEvent &v, const CountEvent &w,
                     const std::vector<std::pair<BigInt, BigInt>> &grid,
                     const Rational &eps) {
  std::vector<TripleMixingRow> rows;
  for (const auto &[m, n] : grid) {
    if (m < 0 || n < 0) {
      throw ValidationError(kModule, "triple grid needs m, n >= 0");
    }
    const std::vector<ShiftedEvent> ev{{u, 0}, {v, m}, {w, m + n}};
    const JointResult r = joint_prob(tower, ev, eps);
    TripleMixingRow row;
    row.m = m;
    row.n = n;
    for (std::size_t i = 0; i < 3; ++i) {
      row.overlaps[i] = r.overlaps[i];
    }
    row.triple = *r.triple;
    row.joint = r.prob;
    row.product = marginal_product(tower, ev);
    row.pairwiseZero = std::all_of(
        r.overlaps.begin(), r.overlaps.end(),
        [](const MeasureEnclosure &o) { return o.hi == 0; });
    row.stageLimited = r.stageLimited;
    fill_deviation(row.joint, row.product, row.devLo, row.devHi, row.devAbs);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_triple_mixing_csv(std::ostream &out,
                             const std::vector<TripleMixingRow> &rows) {
  csv::Writer wr(out);
  wr.header({"m", "n", "uv_hi", "uw_hi", "vw_hi", "triple_lo", "triple_hi",
             "joint_lo", "joint_hi", "product", "dev_lo", "dev_hi", "dev_abs",
             "pairwiseZero", "stageLimited"});
  for (const auto &r : rows) {
    wr.field(r.m).field(r.n);
    for (const auto &o : r.overlaps) {
      wr.field(o.hi.get_d());
    }
    wr.field(r.triple.lo.get_d()).field(r.triple.hi.get_d());
    wr.field(r.joint.lo).field(r.joint.hi).field(r.product);
    wr.field(r.devLo).field(r.devHi).field(r.devAbs);
    wr.field(r.pairwiseZero).field(r.stageLimited);
    wr.endRow();
  }
}

} // namespace rankone
