#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "rankone/poisson.hpp"
#include "rankone/sidon.hpp"
#include "support.hpp"

using namespace rankone;
namespace tst = rankone::testing;

namespace {

const Rational kTiny(1, 1000000000);

Tower deep_tower() {
  return Tower(build_from_psi(PsiSpec::power(Rational(2, 5)), 1, 5,
                              SidonGenerator::Singer)
                   .spec);
}

double mid(const ProbEnclosure &p) { return 0.5 * (p.lo + p.hi); }

} // namespace

TEST(PoissonPmf, DirectFormula) {
  EXPECT_NEAR(static_cast<double>(poisson_pmf(1.5L, 0)), 0.223130, 5e-7);
  EXPECT_NEAR(static_cast<double>(poisson_pmf(1.5L, 2)), 0.251021, 5e-7);
  EXPECT_EQ(poisson_pmf(0.0L, 0), 1.0L);
  EXPECT_EQ(poisson_pmf(0.0L, 3), 0.0L);
  EXPECT_THROW(poisson_pmf(-1.0L, 0), ValidationError);
}

TEST(CylinderProb, SingleAndDisjointSets) {
  const Tower t(tst::running_example());
  const LevelSet x2 = LevelSet::full(t, 2);
  const CylinderProb one = cylinder_prob(t, {{x2, 0}});
  ASSERT_EQ(one.terms.size(), 1u);
  EXPECT_EQ(one.terms[0].mean, Rational(3, 2));
  EXPECT_NEAR(one.value, std::exp(-1.5), 1e-15);

  const LevelSet lo = LevelSet::single(2, 0);
  const LevelSet hi = LevelSet(2, {{1, 3}});
  const CylinderProb both = cylinder_prob(t, {{lo, 1}, {hi, 2}});
  EXPECT_NEAR(both.value,
              static_cast<double>(poisson_pmf(0.5L, 1) * poisson_pmf(1.0L, 2)),
              1e-15);
}

TEST(CylinderProb, RejectsIntersectingSets) {
  const Tower t(tst::running_example());
  const LevelSet x1 = LevelSet::full(t, 1);
  const LevelSet x2 = LevelSet::full(t, 2);
  EXPECT_THROW(cylinder_prob(t, {{x1, 0}, {x2, 0}}), ValidationError);
}

TEST(CylinderNormalization, SumsToOne) {
  for (const Rational mean : {Rational(0), Rational(1, 6), Rational(3, 2),
                              Rational(5), Rational(40)}) {
    const Normalization n = cylinder_normalization(mean, 200);
    EXPECT_GE(n.sum, 1 - 1e-12) << mean.get_str();
    EXPECT_LE(n.sum, 1.0) << mean.get_str();
    EXPECT_LE(n.tailBound, 1e-12) << mean.get_str();
  }
  const Normalization partial = cylinder_normalization(Rational(3, 2), 2);
  EXPECT_NEAR(1 - partial.sum, 1 - std::exp(-1.5) * (1 + 1.5 + 1.125), 1e-12);
  EXPECT_GE(partial.tailBound, 1 - partial.sum);
}

TEST(JointProb, UnionMassFormula) {
  const Tower t(tst::running_example());
  const LevelSet a = LevelSet::full(t, 2);
  // mu(A ∩ T^3 A) = 1/2.
  const JointResult r = joint_prob(t, {{{a, 0}, 0}, {{a, 0}, 3}}, kTiny);
  EXPECT_EQ(r.overlaps[0].lo, Rational(1, 2));
  EXPECT_NEAR(r.prob.lo, std::exp(-2.5), 1e-12);
  EXPECT_NEAR(r.prob.hi, std::exp(-2.5), 1e-12);
}

TEST(JointProb, DisjointIsProduct) {
  const Tower t(tst::running_example());
  const LevelSet a = LevelSet::full(t, 2);
  const std::vector<ShiftedEvent> ev{{{a, 1}, 0}, {{a, 2}, 6}};
  const JointResult r = joint_prob(t, ev, kTiny);
  EXPECT_EQ(r.overlaps[0].hi, 0);
  const double prod = marginal_product(t, ev);
  EXPECT_NEAR(prod,
              static_cast<double>(poisson_pmf(1.5L, 1) * poisson_pmf(1.5L, 2)),
              1e-15);
  EXPECT_LE(r.prob.lo, prod);
  EXPECT_GE(r.prob.hi, prod);
  EXPECT_NEAR(r.prob.width(), 0.0, 1e-15);
}

TEST(JointProb, UnitCountsWithHalfOverlap) {
  const Tower t(tst::running_example());
  const LevelSet a = LevelSet::full(t, 1);
  // mu(A ∩ T A) = 1/2: atoms of mass 1/2, 1/2, 1/2. Count one in each set
  // needs either one point in the overlap and none elsewhere, or one point in
  // each private part: e^{-3/2} (1/2 + 1/4).
  const JointResult r = joint_prob(t, {{{a, 1}, 0}, {{a, 1}, 1}}, kTiny);
  EXPECT_EQ(r.overlaps[0].lo, Rational(1, 2));
  EXPECT_EQ(r.overlaps[0].hi, Rational(1, 2));
  EXPECT_NEAR(mid(r.prob), 0.75 * std::exp(-1.5), 1e-12);
}

TEST(JointProb, TripleWithPairwiseDisjointSetsIsProduct) {
  const Tower t(tst::running_example());
  const LevelSet a = LevelSet::single(2, 0);
  const std::vector<ShiftedEvent> ev{{{a, 0}, 0}, {{a, 1}, 1}, {{a, 0}, 2}};
  const JointResult r = joint_prob(t, ev, kTiny);
  ASSERT_TRUE(r.triple);
  for (const auto &o : r.overlaps) {
    EXPECT_EQ(o.hi, 0);
  }
  EXPECT_NEAR(mid(r.prob), marginal_product(t, ev), 1e-15);
}

TEST(JointProb, RejectsWrongEventCount) {
  const Tower t(tst::running_example());
  const LevelSet a = LevelSet::full(t, 2);
  EXPECT_THROW(joint_prob(t, {{{a, 0}, 0}}, kTiny), ValidationError);
  EXPECT_THROW(joint_prob(t, {{{a, 0}, 0}, {{a, 0}, 1}, {{a, 0}, 2}, {{a, 0}, 3}},
                          kTiny),
               ValidationError);
}

TEST(MarginalProduct, ShiftInvariant) {
  const Tower t(tst::running_example());
  const LevelSet a = LevelSet::full(t, 2);
  EXPECT_EQ(marginal_product(t, {{{a, 2}, 0}, {{a, 1}, 0}}),
            marginal_product(t, {{{a, 2}, 7}, {{a, 1}, 19}}));
}

TEST(SampleConfiguration, MeanAndPoissonCounts) {
  const Tower t(tst::running_example());
  const LevelSet region = LevelSet::full(t, 2);
  Rng rng(8);
  const int draws = 10000;
  std::vector<double> hist(7, 0.0);
  double total = 0;
  for (int i = 0; i < draws; ++i) {
    const auto pts = sample_configuration(t, region, rng);
    for (const auto &p : pts) {
      ASSERT_TRUE(contains(t, region, p));
    }
    total += static_cast<double>(pts.size());
    ++hist[std::min<std::size_t>(pts.size(), 6)];
  }
  const double mean = total / draws;
  EXPECT_LE(std::abs(mean - 1.5), 4 * std::sqrt(1.5 / draws));

  double chi = 0;
  double tail = 1;
  for (std::size_t k = 0; k < 7; ++k) {
    const double p =
        k < 6 ? static_cast<double>(poisson_pmf(1.5L, k)) : tail;
    tail -= k < 6 ? p : 0;
    const double e = p * draws;
    chi += (hist[k] - e) * (hist[k] - e) / e;
  }
  // 0.999 quantile of chi-square with 6 degrees of freedom.
  EXPECT_LT(chi, 22.458);
}

TEST(SampleConfiguration, EmptyRegionAndDeterminism) {
  const Tower t(tst::running_example());
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    EXPECT_TRUE(sample_configuration(t, LevelSet(2, {}), rng).empty());
  }
  Rng r1(55);
  Rng r2(55);
  for (int i = 0; i < 50; ++i) {
    EXPECT_EQ(sample_configuration(t, LevelSet::full(t, 2), r1),
              sample_configuration(t, LevelSet::full(t, 2), r2));
  }
}

TEST(McJointProb, AgreesWithJointProb) {
  const Tower t = deep_tower();
  const LevelSet x2 = LevelSet::full(t, 2);
  const LevelSet low = LevelSet::single(2, 0);
  const std::vector<std::vector<ShiftedEvent>> systems{
      {{{x2, 0}, 0}, {{x2, 0}, 3}},
      {{{x2, 1}, 0}, {{x2, 1}, 1}},
      {{{x2, 2}, 0}, {{low, 0}, 4}},
      {{{x2, 1}, 0}, {{x2, 0}, 2}, {{low, 1}, 5}},
  };
  std::uint64_t seed = 70;
  for (const auto &ev : systems) {
    const JointResult r = joint_prob(t, ev, kTiny);
    const McEstimate mc = mc_joint_prob(t, ev, 10000, seed++);
    const double sigma = std::max(mc.stderr_, 1e-4);
    EXPECT_GE(mc.estimate, r.prob.lo - 4 * sigma);
    EXPECT_LE(mc.estimate, r.prob.hi + 4 * sigma);
  }
}

TEST(MixingReport, ZeroShiftAndDisjointShift) {
  const Tower t(tst::running_example());
  const CountEvent v{LevelSet::full(t, 2), 0};
  const auto rows = mixing_report(t, v, v, {0, 6}, kTiny);
  ASSERT_EQ(rows.size(), 2u);
  const double mu = 1.5;
  EXPECT_NEAR(mid(rows[0].joint), std::exp(-mu), 1e-12);
  EXPECT_NEAR(rows[0].product, std::exp(-2 * mu), 1e-15);
  EXPECT_NEAR(rows[0].devAbs, std::exp(-mu) * (1 - std::exp(-mu)), 1e-12);
  EXPECT_EQ(rows[1].overlap.hi, 0);
  EXPECT_EQ(rows[1].devAbs, 0.0);
}

TEST(MixingReport, DeviationBoundedByOverlap) {
  const Tower t = deep_tower();
  const CountEvent v{LevelSet::full(t, 2), 0};
  const auto grid = std::vector<BigInt>{3, 5, 8, 9, 40, 99, 500};
  for (const auto &row : mixing_report(t, v, v, grid, kTiny)) {
    // joint = e^{-2 mu + c}, product = e^{-2 mu}.
    const double bound = std::exp(-3.0) * (std::exp(row.overlap.hi.get_d()) - 1);
    EXPECT_LE(row.devAbs, bound + 1e-12) << row.n.get_str();
  }
}

TEST(TripleMixingReport, ZeroShiftsAndPairwiseZero) {
  const Tower t(tst::running_example());
  const CountEvent u{LevelSet::full(t, 2), 0};
  const auto same = triple_mixing_report(t, u, u, u, {{0, 0}}, kTiny);
  ASSERT_EQ(same.size(), 1u);
  EXPECT_NEAR(mid(same[0].joint), std::exp(-1.5), 1e-12);
  EXPECT_FALSE(same[0].pairwiseZero);

  // Level 0 of stage 2 sits at {0, 3, 12} in stage 3; shifts 1, 1, 2 miss it.
  const CountEvent low{LevelSet::single(2, 0), 1};
  const auto apart = triple_mixing_report(t, low, low, low, {{1, 1}}, kTiny);
  EXPECT_TRUE(apart[0].pairwiseZero);
  EXPECT_EQ(apart[0].devAbs, 0.0);
  EXPECT_NEAR(mid(apart[0].joint), apart[0].product, 1e-15);
}

TEST(TripleMixingReport, McCrossCheck) {
  const Tower t = deep_tower();
  const CountEvent u{LevelSet::full(t, 2), 0};
  const CountEvent v{LevelSet::full(t, 2), 1};
  const std::vector<std::pair<BigInt, BigInt>> grid{{1, 2}, {3, 3}, {4, 9}};
  const auto rows = triple_mixing_report(t, u, v, u, grid, kTiny);
  std::uint64_t seed = 900;
  for (const auto &row : rows) {
    const std::vector<ShiftedEvent> ev{
        {u, 0}, {v, row.m}, {u, row.m + row.n}};
    const McEstimate mc = mc_joint_prob(t, ev, 10000, seed++);
    const double sigma = std::max(mc.stderr_, 1e-4);
    EXPECT_GE(mc.estimate, row.joint.lo - 4 * sigma) << row.m.get_str();
    EXPECT_LE(mc.estimate, row.joint.hi + 4 * sigma) << row.m.get_str();
  }
}
