// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "rankone/correlation.hpp"
#include "rankone/homoclinic.hpp"
#include "rankone/poisson.hpp"
#include "rankone/sidon.hpp"
#include "support.hpp"

using namespace rankone;
namespace tst = rankone::testing;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string str(const Rational &q) { return q.get_str(); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Tower generated(const Rational &alpha, std::size_t params) {
  return Tower(build_from_psi(PsiSpec::power(alpha), 1, params,
                              SidonGenerator::Singer)
                   .spec);
}

Verdict tower_arithmetic() {
  const Tower t(tst::running_example());
  Verdict v;
  const std::vector<BigInt> h{1, 3, 30};
  const std::vector<Rational> muE{1, Rational(1, 2), Rational(1, 6)};
  const std::vector<Rational> muX{1, Rational(3, 2), 5};
  const std::vector<std::vector<BigInt>> off{{0, 1}, {0, 3, 12}};
  v.pass = t.stageCount() == 3;
  for (std::size_t j = 1; v.pass && j <= 3; ++j) {
    v.pass = t.heightExact(j) == h[j - 1] && t.baseMeasure(j) == muE[j - 1] &&
             t.stage(j).towerMeasure == muX[j - 1];
    if (j < 3) {
      v.pass = v.pass && t.stage(j).offsets == off[j - 1];
    }
  }
  v.detail = "h=(1,3,30) mu(E)=(1,1/2,1/6) mu(X)=(1,3/2,5) offsets (0,1),(0,3,12)";
  return v;
}

Verdict enclosure_soundness() {
  Rng rng(20261014);
  const Rational eps(1, 1000000000);
  int constructions = 0;
  int exact = 0;
  int limited = 0;
  int failures = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const ConstructionSpec spec = tst::random_spec(rng, 4, 50);
    const Tower t(spec);
    const tst::ExplicitTower ex(spec);
    const std::size_t top = t.stageCount();
    const std::size_t j0 = 1 + rng.below(2);
    const LevelSet a = tst::random_level_set(rng, t, j0);
    const LevelSet b = tst::random_level_set(rng, t, j0);
    ++constructions;

    // No escapes: every lifted level of B plus m stays below h_top.
    if (!b.empty()) {
      const Level room =
          t.height(top) - lift_level_set(t, b, top).maxLevel();
      const std::int64_t m =
          static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(room)));
      const tst::BruteCount want = tst::brute_pair(ex, a, b, m, top);
      const MeasureEnclosure got = pair_enclosure(t, a, b, m, eps);
      ++exact;
      failures += !(want.lo == want.hi && got.exact() && got.lo == want.lo);
    }

    // Stage-limited query with escapes, checked against the full build.
    const std::int64_t m2 = static_cast<std::int64_t>(
        rng.below(static_cast<std::uint64_t>(t.height(j0 + 1))));
    const std::size_t start = *t.firstStageTallerThan(j0, m2);
    const MeasureEnclosure part = pair_enclosure(t, a, b, m2, eps, start);
    const tst::BruteCount deep = tst::brute_pair(ex, a, b, m2, top);
    if (part.slack() > 0) {
      ++limited;
    }
    failures += !(part.lo <= deep.lo && deep.hi <= part.hi);
  }
  Verdict v;
  v.pass = failures == 0 && exact >= 50 && constructions >= 50;
  v.detail = std::to_string(constructions) + " constructions, " +
             std::to_string(exact) + " exact comparisons, " +
             std::to_string(limited) + " queries with escapes, " +
             std::to_string(failures) + " failures";
  return v;
}

Verdict sidon_bound() {
  const Tower t = generated(Rational(2, 5), 5);
  const LevelSet a = LevelSet::full(t, 1);
  SidonBoundOptions opt;
  opt.jFrom = 2;
  opt.jTo = 5;
  opt.exhaustiveLimit = 100000;
  opt.samplesPerStage = 256;
  opt.seed = 20261014;
  const Rational eps = default_epsilon(t, a);
  const auto rows = sidon_bound_report(t, a, a, opt);
  std::size_t loFail = 0;
  std::size_t unexplained = 0;
  std::map<std::size_t, std::size_t> perStage;
  for (const auto &r : rows) {
    if (!r.pass) {
      ++loFail;
      ++perStage[r.j];
    } else if (r.slackExceeds && r.value.slack() > eps) {
      ++unexplained;
      ++perStage[r.j];
    }
  }
  Verdict v;
  v.pass = !rows.empty() && loFail == 0 && unexplained == 0;
  std::ostringstream d;
  d << rows.size() << " rows over j=2..5, " << loFail
    << " with lo > mu(A)/r_j, " << unexplained
    << " with hi > bound beyond slack eps=" << str(eps);
  if (!perStage.empty()) {
    d << " (by stage:";
    for (const auto &[j, c] : perStage) {
      d << " j=" << j << ":" << c;
    }
    d << ")";
  }
  v.detail = d.str();
  return v;
}

Verdict decay() {
  const PsiSpec psi = PsiSpec::power(Rational(1, 4));
  const PsiConstruction c = build_from_psi(psi, 1, 4, SidonGenerator::Singer);
  const Tower t(c.spec);
  bool ledger = true;
  for (const auto &row : c.ledger) {
    ledger = ledger && row.keyInequality;
  }
  const LevelSet a = LevelSet::full(t, 1);
  const auto grid = stage_interval_grid(t, 1, 3, 12);
  const DecayReport rep = decay_report(t, psi, a, grid, default_epsilon(t, a));
  std::vector<std::size_t> populated;
  for (const auto &st : rep.stages) {
    ledger = ledger && st.keyInequality;
    if (st.rows > 0) {
      populated.push_back(st.j);
    }
  }
  const bool early =
      populated.size() >= 2 &&
      (rep.maxInterval == populated[0] || rep.maxInterval == populated[1]);
  Verdict v;
  v.pass = ledger && std::isfinite(rep.maxC) && early && rep.stable &&
           rep.exactComparisons;
  v.detail = "ledger " + std::string(ledger ? "holds" : "fails") + ", max C " +
             fmt(rep.maxC) + " in interval " + std::to_string(rep.maxInterval) +
             ", " + std::to_string(rep.rows.size()) + " rows, " +
             (rep.stable ? "stable" : "grows") +
             (rep.exactComparisons ? ", exact comparisons" : "");
  return v;
}

Verdict poisson_layer() {
  bool norm = true;
  for (const Rational mean : {Rational(1, 6), Rational(3, 2), Rational(5),
                              Rational(20)}) {
    const Normalization n = cylinder_normalization(mean, 200);
    norm = norm && n.sum >= 1 - 1e-12 && n.sum <= 1.0;
  }
  // The generated tower plus a 1000-column stage, so sampled orbits of a
  // few dozen steps almost never leave the built levels.
  ConstructionSpec spec =
      build_from_psi(PsiSpec::power(Rational(2, 5)), 1, 5, SidonGenerator::Singer)
          .spec;
  StageParams guard;
  guard.r = 1000;
  guard.s.assign(1000, BigInt(0));
  guard.s.back() = 100;
  spec.stages.push_back(guard);
  const Tower t(spec);
  const Rational eps(1, 1000000000);
  Rng rng(4);
  int agree = 0;
  double worst = 0;
  const int systems = 10;
  for (int s = 0; s < systems; ++s) {
    const std::size_t events = 2 + rng.below(2);
    std::vector<ShiftedEvent> ev;
    for (std::size_t i = 0; i < events; ++i) {
      const std::size_t stage = 2 + rng.below(2);
      LevelSet set = tst::random_level_set(rng, t, stage);
      if (set.empty()) {
        set = LevelSet::single(stage, 0);
      }
      const BigInt shift = i == 0 ? 0 : BigInt(rng.below(40));
      ev.push_back({{set, rng.below(3)}, shift});
    }
    const JointResult r = joint_prob(t, ev, eps);
    const McEstimate mc = mc_joint_prob(t, ev, 10000, 500 + s);
    const double sigma = std::max(mc.stderr_, 1e-4);
    const double dist = std::max({0.0, r.prob.lo - mc.estimate,
                                  mc.estimate - r.prob.hi}) /
                        sigma;
    worst = std::max(worst, dist);
    agree += dist <= 4;
  }
  Verdict v;
  v.pass = norm && agree == systems;
  v.detail = std::string("normalization ") + (norm ? "in range" : "out of range") +
             ", MC within 4 sigma for " + std::to_string(agree) + "/" +
             std::to_string(systems) + " systems (worst " + fmt(worst) +
             " sigma)";
  return v;
}

Verdict suspension_mixing() {
  const Tower t = generated(Rational(2, 5), 5);
  const LevelSet x2 = LevelSet::full(t, 2);
  const CountEvent v0{x2, 0};
  const double mu = x2.measure(t).get_d();
  const auto grid = stage_interval_grid(t, 2, 4, 12);
  const auto rows = mixing_report(t, v0, v0, grid, default_epsilon(t, x2));
  std::map<std::size_t, double> maxDev;
  std::map<std::size_t, bool> overlapOk;
  for (const auto &r : rows) {
    maxDev[r.interval] = std::max(maxDev[r.interval], r.devAbs);
    const bool ok = r.overlap.hi <= x2.measure(t) / t.columns(r.interval);
    overlapOk.try_emplace(r.interval, true);
    overlapOk[r.interval] = overlapOk[r.interval] && ok;
  }
  Verdict v;
  std::ostringstream d;
  double prev = INFINITY;
  for (std::size_t j = 2; j <= 4; ++j) {
    const double c = Rational(x2.measure(t) / t.columns(j)).get_d();
    const double bound = std::exp(-2 * mu) * (std::exp(c) - 1);
    const double got = maxDev.count(j) ? maxDev[j] : NAN;
    // Probability enclosures are rounded outward by a few ulps.
    v.pass = v.pass && got <= bound * (1 + 1e-9) && got < prev;
    prev = got;
    d << " j=" << j << ": " << fmt(got) << " vs " << fmt(bound)
      << (overlapOk[j] ? " (overlap <= mu(A)/r_j)" : " (overlap above mu(A)/r_j)");
  }
  v.detail = "max deviation per stage vs bound" + d.str();
  return v;
}

Verdict triple_mixing() {
  const Tower t = generated(Rational(2, 5), 5);
  const LevelSet x2 = LevelSet::full(t, 2);
  const CountEvent u{x2, 0};
  const Rational eps = default_epsilon(t, x2);
  std::vector<std::pair<BigInt, BigInt>> grid;
  std::vector<std::size_t> stageOf;
  for (std::size_t j = 2; j <= 4; ++j) {
    const auto pts = stage_interval_grid(t, j, j, 4);
    for (const auto &m : pts) {
      for (const auto &n : pts) {
        grid.emplace_back(m, n);
        stageOf.push_back(j);
      }
    }
  }
  const auto rows = triple_mixing_report(t, u, u, u, grid, eps);
  std::map<std::size_t, double> maxDev;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    maxDev[stageOf[i]] = std::max(maxDev[stageOf[i]], rows[i].devAbs);
  }
  Verdict v;
  std::ostringstream d;
  double prev = INFINITY;
  for (const auto &[j, dev] : maxDev) {
    v.pass = v.pass && dev < prev;
    prev = dev;
    d << " j=" << j << ": " << fmt(dev);
  }

  // A thin set shows certified-zero overlaps.
  const CountEvent thin{LevelSet::single(3, 0), 1};
  std::vector<std::pair<BigInt, BigInt>> small;
  for (long m = 1; m <= 30; m += 3) {
    for (long n = 1; n <= 30; n += 4) {
      small.emplace_back(m, n);
    }
  }
  std::size_t zeroRows = 0;
  bool zeroExact = true;
  for (const auto &r : triple_mixing_report(t, thin, thin, thin, small,
                                            Rational(1, 1000000000))) {
    if (r.pairwiseZero) {
      ++zeroRows;
      zeroExact = zeroExact && r.devAbs == 0.0;
    }
  }
  v.pass = v.pass && zeroRows > 0 && zeroExact;
  v.detail = "max deviation by stage" + d.str() + "; " +
             std::to_string(zeroRows) + " pairwise-zero rows, " +
             (zeroExact ? "all with deviation 0" : "some nonzero");
  return v;
}

Verdict homoclinic_sweep_check(const HomoclinicMap &map) {
  const SweepReport rep = homoclinic_sweep(map, 2, 4, 100, 20261014);
  Verdict v;
  std::ostringstream d;
  Rational prev = 2;
  for (const auto &[j, hi] : rep.maxHi) {
    v.pass = v.pass && hi < prev;
    prev = hi;
    d << " j=" << j << ": " << str(hi);
  }
  v.pass = v.pass && rep.maxHi.size() == 3;
  bool retention = true;
  std::size_t stages = 0;
  for (const auto &r : retention_audit(map)) {
    retention = retention && r.pass && r.ratio >= r.bound;
    ++stages;
  }
  v.pass = v.pass && retention && stages > 0;
  v.detail = "max defect hi" + d.str() + "; retention " +
             (retention ? "holds" : "fails") + " on " + std::to_string(stages) +
             " block stages";
  return v;
}

Verdict wandering(const HomoclinicMap &map) {
  const WanderingReport rep = wandering_check(map, 50);
  Verdict v;
  v.pass = rep.pass && rep.disjoint;
  v.detail = "|z| <= 50, " + std::string(rep.disjoint ? "disjoint" : "overlap") +
             ", covered mass " + fmt(rep.coveredMass.get_d());
  return v;
}

Verdict flow() {
  const Tower t = generated(Rational(2, 5), 5);
  const FlowParams p;
  const double want = std::sqrt(2 * std::log(2.0));
  std::vector<FlowEstimate> est;
  for (const std::size_t j : {0u, 2u, 3u, 4u}) {
    const BigInt n = j == 0 ? BigInt(0) : t.heightExact(j);
    est.push_back(flow_defect(t, p, 1.0, n, 100000, 20261014 + j));
  }
  const bool matches = std::abs(est[0].estimate - want) <= 3 * est[0].stderr_;
  bool trend = true;
  std::ostringstream d;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (i > 0) {
      const double noise = 2 * std::hypot(est[i].stderr_, est[i - 1].stderr_);
      trend = trend && est[i].estimate <= est[i - 1].estimate + noise;
    }
    d << " n=" << est[i].n.get_str() << ":" << fmt(est[i].estimate);
  }
  Verdict v;
  v.pass = matches && trend;
  v.detail = "n=0 estimate " + fmt(est[0].estimate) + " +- " +
             fmt(est[0].stderr_) + " vs " + fmt(want) + ";" + d.str();
  return v;
}

Verdict determinism() {
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs{
      {"running_example.json",
       {"build", "check-sidon", "corr", "poisson", "homoclinic", "flow"}},
      {"optimal_sidon.json", rankone::cli::command_names()},
  };
  std::size_t files = 0;
  std::vector<std::string> bad;
  for (const auto &[config, commands] : runs) {
    rankone::cli::Options opt;
    opt.config = std::string(RANKONE_CONFIG_DIR) + "/" + config;
    for (const auto &cmd : commands) {
      try {
        const auto a = rankone::cli::run_command(cmd, opt);
        const auto b = rankone::cli::run_command(cmd, opt);
        bool same = a.files.size() == b.files.size();
        for (std::size_t i = 0; same && i < a.files.size(); ++i) {
          same = a.files[i].name == b.files[i].name &&
                 a.files[i].content == b.files[i].content;
        }
        files += a.files.size();
        if (!same) {
          bad.push_back(config + ":" + cmd);
        }
      } catch (const std::exception &e) {
        bad.push_back(config + ":" + cmd + " (" + e.what() + ")");
      }
    }
  }
  Verdict v;
  v.pass = bad.empty();
  v.detail = std::to_string(files) + " files byte-identical across reruns";
  for (const auto &b : bad) {
    v.detail += "; differs or failed: " + b;
  }
  return v;
}

} // namespace

int main() {
  const Tower homTower = generated(Rational(2, 5), 5);
  const HomoclinicMap map(homTower);
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"tower arithmetic", tower_arithmetic},
      {"enclosure soundness", enclosure_soundness},
      {"sidon bound", sidon_bound},
      {"decay constant", decay},
      {"poisson layer", poisson_layer},
      {"suspension mixing", suspension_mixing},
      {"triple mixing", triple_mixing},
      {"homoclinic criterion", [&] { return homoclinic_sweep_check(map); }},
      {"dissipativity", [&] { return wandering(map); }},
      {"flow defect", flow},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception &e) {
      v.pass = false;
      v.detail = std::string("error: ") + e.what();
    }
    failed += !v.pass;
    std::printf("%s %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
