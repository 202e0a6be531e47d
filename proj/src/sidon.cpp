#include "rankone/sidon.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "rankone/correlation.hpp"
#include "rankone/csv.hpp"
#include "rankone/level_set.hpp"

namespace rankone {

namespace {

constexpr const char *kModule = "sidon";

std::vector<std::uint64_t> prime_factors(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      out.push_back(p);
      while (n % p == 0) {
        n /= p;
      }
    }
  }
  if (n > 1) {
    out.push_back(n);
  }
  return out;
}

/// GF(p^e) with elements encoded as base-p digit strings.
class Field {
public:
  explicit Field(std::uint64_t q) : q_(q) {
    const auto f = prime_factors(q);
    p_ = f.front();
    for (std::uint64_t v = q; v > 1; v /= p_) {
      ++e_;
    }
    if (e_ > 1) {
      buildTables();
    }
  }

  std::uint64_t size() const { return q_; }

  std::uint64_t add(std::uint64_t a, std::uint64_t b) const {
    if (e_ == 1) {
      const std::uint64_t s = a + b;
      return s >= p_ ? s - p_ : s;
    }
    if (p_ == 2) {
      return a ^ b;
    }
    std::uint64_t out = 0;
    std::uint64_t scale = 1;
    for (unsigned i = 0; i < e_; ++i) {
      out += ((a % p_ + b % p_) % p_) * scale;
      a /= p_;
      b /= p_;
      scale *= p_;
    }
    return out;
  }

  std::uint64_t neg(std::uint64_t a) const {
    if (e_ == 1) {
      return a == 0 ? 0 : p_ - a;
    }
    if (p_ == 2) {
      return a;
    }
    std::uint64_t out = 0;
    std::uint64_t scale = 1;
    for (unsigned i = 0; i < e_; ++i) {
      out += ((p_ - a % p_) % p_) * scale;
      a /= p_;
      scale *= p_;
    }
    return out;
  }

  std::uint64_t sub(std::uint64_t a, std::uint64_t b) const {
    return add(a, neg(b));
  }

  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const {
    if (e_ == 1) {
      return a * b % p_;
    }
    if (a == 0 || b == 0) {
      return 0;
    }
    return exp_[(log_[a] + log_[b]) % (q_ - 1)];
  }

private:
  // Finds a primitive polynomial of degree e over GF(p) and tabulates
  // powers of its root.
  void buildTables() {
    std::vector<std::uint64_t> digits(e_);
    for (std::uint64_t g = 0; g < q_; ++g) {
      // g encodes the low coefficients of the monic modulus.
      std::vector<std::uint64_t> low(e_);
      std::uint64_t t = g;
      for (unsigned i = 0; i < e_; ++i) {
        low[i] = t % p_;
        t /= p_;
      }
      if (low[0] == 0) {
        continue;
      }
      std::vector<std::uint64_t> cur(e_, 0);
      cur[0] = 1;
      std::vector<std::uint64_t> table;
      table.reserve(q_ - 1);
      bool ok = true;
      for (std::uint64_t k = 0; k < q_ - 1; ++k) {
        std::uint64_t code = 0;
        for (unsigned i = e_; i-- > 0;) {
          code = code * p_ + cur[i];
        }
        if (k > 0 && code == 1) {
          ok = false;
          break;
        }
        table.push_back(code);
        const std::uint64_t top = cur[e_ - 1];
        for (unsigned i = e_ - 1; i > 0; --i) {
          cur[i] = cur[i - 1];
        }
        cur[0] = 0;
        for (unsigned i = 0; i < e_; ++i) {
          cur[i] = (cur[i] + (p_ - low[i]) * top) % p_;
        }
      }
      if (!ok) {
        continue;
      }
      exp_ = std::move(table);
      log_.assign(q_, 0);
      for (std::uint64_t k = 0; k < q_ - 1; ++k) {
        log_[exp_[k]] = k;
      }
      return;
    }
    throw Error(kModule, "no primitive polynomial found for GF(" +
                             std::to_string(q_) + ")");
  }

  std::uint64_t q_;
  std::uint64_t p_ = 0;
  unsigned e_ = 0;
  std::vector<std::uint64_t> exp_;
  std::vector<std::uint64_t> log_;
};

/// Elements of GF(q)[x] / (x^3 + a x^2 + b x + c).
struct Cubic {
  const Field &f;
  std::uint64_t a, b, c;

  using Elem = std::array<std::uint64_t, 3>;

  Elem mul(const Elem &u, const Elem &v) const {
    std::array<std::uint64_t, 5> w{};
    for (int i = 0; i < 3; ++i) {
      for (int k = 0; k < 3; ++k) {
        w[i + k] = f.add(w[i + k], f.mul(u[i], v[k]));
      }
    }
    for (int d = 4; d >= 3; --d) {
      const std::uint64_t t = w[d];
      w[d] = 0;
      w[d - 1] = f.sub(w[d - 1], f.mul(t, a));
      w[d - 2] = f.sub(w[d - 2], f.mul(t, b));
      w[d - 3] = f.sub(w[d - 3], f.mul(t, c));
    }
    return {w[0], w[1], w[2]};
  }

  Elem pow(Elem base, std::uint64_t n) const {
    Elem r{1, 0, 0};
    while (n > 0) {
      if (n & 1) {
        r = mul(r, base);
      }
      base = mul(base, base);
      n >>= 1;
    }
    return r;
  }

  bool hasRoot() const {
    for (std::uint64_t x = 0; x < f.size(); ++x) {
      const std::uint64_t x2 = f.mul(x, x);
      std::uint64_t v = f.mul(x2, x);
      v = f.add(v, f.mul(a, x2));
      v = f.add(v, f.mul(b, x));
      v = f.add(v, c);
      if (v == 0) {
        return true;
      }
    }
    return false;
  }
};

std::vector<std::int64_t> singer_residues(std::uint64_t q) {
  const Field field(q);
  const std::uint64_t N = q * q + q + 1;
  const auto primes = prime_factors(N);
  for (std::uint64_t c = 1; c < q; ++c) {
    for (std::uint64_t a = 0; a < q; ++a) {
      for (std::uint64_t b = 0; b < q; ++b) {
        const Cubic cub{field, a, b, c};
        if (cub.hasRoot()) {
          continue;
        }
        bool primitive = true;
        for (const auto p : primes) {
          const auto y = cub.pow({0, 1, 0}, N / p);
          if (y[1] == 0 && y[2] == 0) {
            primitive = false;
            break;
          }
        }
        if (!primitive) {
          continue;
        }
        // x^i over one projective period; the plane x^2-coefficient = 0
        // meets it in q+1 points.
        std::vector<std::int64_t> out;
        std::uint64_t c0 = 1;
        std::uint64_t c1 = 0;
        std::uint64_t c2 = 0;
        const std::uint64_t na = field.neg(a);
        const std::uint64_t nb = field.neg(b);
        const std::uint64_t nc = field.neg(c);
        for (std::uint64_t i = 0; i < N; ++i) {
          if (c2 == 0) {
            out.push_back(static_cast<std::int64_t>(i));
          }
          const std::uint64_t n0 = field.mul(nc, c2);
          const std::uint64_t n1 = field.add(c0, field.mul(nb, c2));
          const std::uint64_t n2 = field.add(c1, field.mul(na, c2));
          c0 = n0;
          c1 = n1;
          c2 = n2;
        }
        if (out.size() != q + 1) {
          throw Error(kModule, "Singer construction produced " +
                                   std::to_string(out.size()) +
                                   " residues for q = " + std::to_string(q));
        }
        return out;
      }
    }
  }
  throw Error(kModule, "no primitive cubic found for q = " + std::to_string(q));
}

BigInt ceil_sqrt(const BigInt &v) {
  if (v <= 0) {
    return 0;
  }
  BigInt r;
  mpz_sqrt(r.get_mpz_t(), v.get_mpz_t());
  if (r * r < v) {
    ++r;
  }
  return r;
}

constexpr std::size_t kGreedyLimit = 2000;

} // namespace

SidonVerdict is_sidon(const std::vector<std::int64_t> &input) {
  std::vector<std::int64_t> s = input;
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  SidonVerdict v;
  if (s.size() < 3) {
    return v;
  }
  const std::int64_t range = s.back() - s.front();
  std::vector<bool> seen(static_cast<std::size_t>(range) + 1, false);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t k = i + 1; k < s.size(); ++k) {
      const std::int64_t d = s[k] - s[i];
      if (!seen[d]) {
        seen[d] = true;
        continue;
      }
      v.sidon = false;
      for (std::size_t a = 0; a < s.size(); ++a) {
        for (std::size_t b = a + 1; b < s.size(); ++b) {
          if (s[b] - s[a] == d) {
            v.witness = std::array<std::int64_t, 4>{s[a], s[b], s[i], s[k]};
            return v;
          }
        }
      }
    }
  }
  return v;
}

SidonSet mian_chowla(std::size_t n) {
  if (n == 0) {
    throw ValidationError(kModule, "mian_chowla needs n >= 1");
  }
  SidonSet out;
  out.elements.push_back(1);
  std::vector<bool> used(2, false);
  while (out.elements.size() < n) {
    std::int64_t c = out.elements.back() + 1;
    for (;; ++c) {
      const std::size_t maxd = static_cast<std::size_t>(c - 1);
      if (used.size() <= maxd) {
        used.resize(2 * maxd + 2, false);
      }
      bool ok = true;
      for (const auto a : out.elements) {
        if (used[c - a]) {
          ok = false;
          break;
        }
      }
      if (ok) {
        break;
      }
    }
    for (const auto a : out.elements) {
      used[c - a] = true;
    }
    out.elements.push_back(c);
  }
  out.span = out.elements.back();
  return out;
}

bool is_prime_power(std::uint64_t q) {
  if (q < 2) {
    return false;
  }
  return prime_factors(q).size() == 1;
}

std::uint64_t next_prime_power(std::uint64_t q) {
  q = std::max<std::uint64_t>(q, 2);
  while (!is_prime_power(q)) {
    ++q;
  }
  return q;
}

SidonSet singer_set(std::uint64_t q) {
  if (!is_prime_power(q)) {
    throw ValidationError(kModule,
                          std::to_string(q) + " is not a prime power");
  }
  if (q > 65536) {
    throw ValidationError(kModule, "Singer sets are limited to q <= 65536");
  }
  static std::mutex mu;
  static std::map<std::uint64_t, SidonSet> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(q);
    if (it != cache.end()) {
      return it->second;
    }
  }
  const std::int64_t N = static_cast<std::int64_t>(q * q + q + 1);
  const auto res = singer_residues(q);
  // Start right after the largest circular gap.
  std::size_t start = 0;
  std::int64_t gap = res.front() + N - res.back();
  for (std::size_t i = 1; i < res.size(); ++i) {
    if (res[i] - res[i - 1] > gap) {
      gap = res[i] - res[i - 1];
      start = i;
    }
  }
  SidonSet out;
  for (const auto r : res) {
    out.elements.push_back(((r - res[start]) % N + N) % N + 1);
  }
  std::sort(out.elements.begin(), out.elements.end());
  out.span = out.elements.back();
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(q, out);
  return out;
}

StageParams optimal_stage_params(const BigInt &h, const SidonSet &set) {
  const auto &S = set.elements;
  if (S.size() < 3) {
    throw ValidationError(kModule, "optimal_stage_params needs |S| >= 3");
  }
  if (h < 1) {
    throw ValidationError(kModule, "height must be >= 1");
  }
  if (!is_sidon(S).sidon) {
    throw ValidationError(kModule, "optimal_stage_params needs a Sidon set");
  }
  StageParams p;
  p.r = static_cast<std::int64_t>(S.size()) - 1;
  BigInt total = h * p.r;
  for (std::size_t i = 1; i < S.size(); ++i) {
    if (S[i] <= S[i - 1]) {
      throw ValidationError(kModule, "Sidon set must be strictly increasing");
    }
    p.s.push_back(h * BigInt(static_cast<long>(S[i] - S[i - 1] - 1)));
    total += p.s.back();
  }
  if (total != h * BigInt(static_cast<long>(S.back() - S.front()))) {
    throw Error(kModule, "stage height identity failed");
  }
  return p;
}

PsiConstruction build_from_psi(const PsiSpec &psi, const BigInt &h1,
                               std::size_t numStages,
                               SidonGenerator generator) {
  psi.validate();
  if (h1 < 1) {
    throw ValidationError(kModule, "h1 must be >= 1");
  }
  PsiConstruction out;
  out.psi = psi;
  out.generator = generator;
  out.spec.h1 = h1;
  BigInt h = h1;
  for (std::size_t j = 1; j <= numStages; ++j) {
    PsiStageLedger row;
    row.j = j;
    row.height = h;
    row.threshold = psi.threshold(h);
    const BigInt rr = std::max(BigInt(2), ceil_sqrt(row.threshold - 1));
    if (!rr.fits_slong_p() || rr > 65536) {
      throw Error(kModule, "stage " + std::to_string(j) + " needs r = " +
                               rr.get_str() + ", beyond the generator range");
    }
    row.ruleR = rr.get_si();
    std::int64_t r = row.ruleR;
    std::vector<std::string> notes;
    for (;;) {
      SidonSet set;
      if (generator == SidonGenerator::Singer) {
        const auto q = next_prime_power(static_cast<std::uint64_t>(r));
        if (static_cast<std::int64_t>(q) != r) {
          notes.push_back("r " + std::to_string(r) + " -> prime power " +
                          std::to_string(q));
          r = static_cast<std::int64_t>(q);
        }
        if (q > 65536) {
          throw Error(kModule, "stage " + std::to_string(j) +
                                   ": Singer q exceeds 65536");
        }
        set = singer_set(q);
      } else {
        if (static_cast<std::size_t>(r) + 1 > kGreedyLimit) {
          throw Error(kModule, "stage " + std::to_string(j) +
                                   ": greedy generator cannot reach size " +
                                   std::to_string(r + 1));
        }
        set = mian_chowla(static_cast<std::size_t>(r) + 1);
      }
      StageParams params = optimal_stage_params(h, set);
      const BigInt next = h * BigInt(static_cast<long>(set.elements.back() -
                                                       set.elements.front()));
      if (psi.reachesSqrt(next, h)) {
        row.r = r;
        row.N = BigInt(r) * r;
        row.span = set.span;
        row.nextHeight = next;
        row.keyInequality = true;
        out.spec.stages.push_back(std::move(params));
        break;
      }
      notes.push_back("r " + std::to_string(r) +
                      " fails psi(h_next) >= sqrt(h)");
      ++r;
    }
    for (std::size_t i = 0; i < notes.size(); ++i) {
      row.note += (i ? "; " : "") + notes[i];
    }
    h = row.nextHeight;
    out.ledger.push_back(std::move(row));
  }
  out.spec.validate();
  return out;
}

void write_psi_ledger(std::ostream &out, const PsiConstruction &c) {
  csv::Writer w(out);
  w.header({"j", "h_j", "threshold", "r_rule", "r_j", "N_j", "span",
            "h_next", "sqrt_h_over_psi_le_1", "note"});
  for (const auto &r : c.ledger) {
    w.field(r.j).field(r.height).field(r.threshold);
    w.field(static_cast<long long>(r.ruleR)).field(static_cast<long long>(r.r));
    w.field(r.N).field(static_cast<long long>(r.span)).field(r.nextHeight);
    w.field(r.keyInequality).field(r.note);
    w.endRow();
  }
}

SidonCheckReport sidon_property_check(const Tower &tower, std::size_t j,
                                      std::size_t depth,
                                      const BigInt &mStride) {
  if (depth < 1) {
    throw ValidationError(kModule, "depth must be >= 1");
  }
  if (mStride < 1) {
    throw ValidationError(kModule, "mStride must be >= 1");
  }
  if (j < 1 || !tower.hasNext(j)) {
    throw DepthError(kModule,
                     "needs more stages: stage " + std::to_string(j) +
                         " has no cutting parameters",
                     j + 1);
  }
  tower.requireStage(j + depth, kModule);

  SidonCheckReport rep;
  rep.j = j;
  rep.depth = depth;
  rep.mStride = mStride;
  rep.bound = tower.stage(j).towerMeasure / Rational(tower.columns(j));
  rep.bound.canonicalize();

  const Level h = tower.height(j);
  const Level H = tower.height(j + 1);
  const auto &o = tower.offsets(j);
  const Rational unit = tower.baseMeasure(j + 1);
  const LevelSet xj = LevelSet::full(tower, j);
  LiftCache target(tower, xj);
  const LevelSet &lifted = target.at(j + 1);
  const Level stride = toInt64(mStride, kModule, "mStride");

  std::vector<Level> ms;
  for (Level m = h + 1; m <= H; m += stride) {
    ms.push_back(m);
  }
  if (ms.back() != H) {
    ms.push_back(H);
  }

  for (const Level m : ms) {
    SidonCheckRow row;
    row.m = BigInt(static_cast<long>(m));
    Level within = 0;
    std::size_t lo = 0;
    for (std::size_t i = 0; i < o.size(); ++i) {
      const Level center = o[i] + m;
      while (lo < o.size() && o[lo] <= center - h) {
        ++lo;
      }
      for (std::size_t t = lo; t < o.size() && o[t] < center + h; ++t) {
        row.pairs.emplace_back(i + 1, t + 1);
        row.targetColumns.push_back(t + 1);
        within += h - std::abs(center - o[t]);
      }
    }
    std::sort(row.targetColumns.begin(), row.targetColumns.end());
    row.targetColumns.erase(
        std::unique(row.targetColumns.begin(), row.targetColumns.end()),
        row.targetColumns.end());
    row.withinMass = unit * Rational(BigInt(static_cast<long>(within)));
    row.withinMass.canonicalize();

    const LevelSet escaped = clip(lifted, H - m, H);
    const EscapeResolution esc =
        resolve_pair_escapes(tower, target, escaped, m, Rational(0), j + depth);
    row.crossStage.lo = esc.hitMass;
    row.crossStage.hi = esc.hitMass + esc.remaining;

    row.strict = row.pairs.size() <= 1 && row.crossStage.lo == 0;
    row.relaxed = row.withinMass + row.crossStage.lo <= rep.bound;
    ++rep.checked;
    if (!row.strict) {
      ++rep.strictViolations;
    }
    if (!row.relaxed) {
      ++rep.relaxedViolations;
    }
    rep.maxSlack = std::max(rep.maxSlack, row.crossStage.slack());
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

void write_sidon_report(std::ostream &out, const SidonCheckReport &report) {
  csv::Writer w(out);
  w.header({"m", "pairs", "columns", "verdictStrict", "verdictRelaxed",
            "slack_num", "slack_den"});
  for (const auto &r : report.rows) {
    std::ostringstream pairs;
    for (std::size_t i = 0; i < r.pairs.size(); ++i) {
      pairs << (i ? ";" : "") << r.pairs[i].first << "-" << r.pairs[i].second;
    }
    std::ostringstream cols;
    for (std::size_t i = 0; i < r.targetColumns.size(); ++i) {
      cols << (i ? ";" : "") << r.targetColumns[i];
    }
    w.field(r.m).field(pairs.str()).field(cols.str());
    w.field(r.strict).field(r.relaxed);
    w.fraction(r.crossStage.slack());
    w.endRow();
  }
}

} // namespace rankone
