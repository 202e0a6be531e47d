#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rankone/level_set.hpp"
#include "rankone/psi.hpp"
#include "rankone/rng.hpp"

namespace rankone {

/// Lifts of one level set to every deeper stage, computed on demand.
class LiftCache {
public:
  LiftCache(const Tower &tower, LevelSet base);

  const LevelSet &base() const { return base_; }
  const LevelSet &at(std::size_t stage);

private:
  const Tower *tower_;
  LevelSet base_;
  std::vector<std::optional<LevelSet>> lifts_;
};

struct EscapeResolution {
  Rational hitMass = 0;
  Rational remaining = 0;
  std::size_t reachedStage = 0;
};

/// Follows the levels of `escaped` (stage K, every level l with l + m >= h_K)
/// through later cuttings and accumulates the mass of T^m(escaped) that lands
/// in the lifts of `target`. Stops once the unresolved mass is <= eps or
/// stage `maxStage` is reached.
EscapeResolution resolve_pair_escapes(const Tower &tower, LiftCache &target,
                                      LevelSet escaped, Level m,
                                      const Rational &eps,
                                      std::size_t maxStage);

struct EnclosureResult {
  MeasureEnclosure value;
  std::size_t startStage = 0;  // first stage with h_J > shift
  std::size_t endStage = 0;    // deepest stage used
  bool stageLimited = false;   // stopped with unresolved mass > eps
};

/// mu(A ∩ T^m B) for level sets at a common stage.
class PairQuery {
public:
  PairQuery(const Tower &tower, LevelSet a, LevelSet b);

  EnclosureResult enclosure(const BigInt &m, const Rational &eps,
                            std::optional<std::size_t> maxStage = {});

  const LevelSet &a() const { return a_.base(); }
  const LevelSet &b() const { return b_.base(); }

private:
  const Tower *tower_;
  LiftCache a_;
  LiftCache b_;
};

MeasureEnclosure pair_enclosure(const Tower &tower, const LevelSet &a,
                                const LevelSet &b, const BigInt &m,
                                const Rational &eps,
                                std::optional<std::size_t> maxStage = {});

/// mu(A ∩ T^m B ∩ T^(m+n) C).
class TripleQuery {
public:
  TripleQuery(const Tower &tower, LevelSet a, LevelSet b, LevelSet c);

  EnclosureResult enclosure(const BigInt &m, const BigInt &n,
                            const Rational &eps,
                            std::optional<std::size_t> maxStage = {});

private:
  const Tower *tower_;
  LiftCache a_;
  LiftCache b_;
  LiftCache c_;
};

MeasureEnclosure triple_enclosure(const Tower &tower, const LevelSet &a,
                                  const LevelSet &b, const LevelSet &c,
                                  const BigInt &m, const BigInt &n,
                                  const Rational &eps,
                                  std::optional<std::size_t> maxStage = {});

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t samples = 0;
};

/// Monte-Carlo estimate of mu(A ∩ T^m B): uniform points of B pushed m
/// steps forward and tested against A.
McEstimate mc_correlation(const Tower &tower, const LevelSet &a,
                          const LevelSet &b, const BigInt &m,
                          std::uint64_t samples, std::uint64_t seed);

/// Default tolerance mu(A)/1000 (or 1/1000 of mu(E_j) for an empty A).
Rational default_epsilon(const Tower &tower, const LevelSet &a);

struct SidonBoundRow {
  BigInt m;
  std::size_t j = 0;
  MeasureEnclosure value;
  Rational bound;
  bool pass = true;           // lo <= bound
  bool slackExceeds = false;  // hi > bound
  bool equality = false;      // an endpoint equals the bound
  bool stageLimited = false;
};

struct SidonBoundOptions {
  std::size_t jFrom = 0;
  std::size_t jTo = 0;
  std::uint64_t exhaustiveLimit = 100000;  // exhaustive when h_{j+1} <= this
  std::uint64_t samplesPerStage = 64;
  std::uint64_t seed = 1;
  std::optional<Rational> epsilon;
};

/// Rows m in [h_j, h_{j+1}] against the bound mu(A)/r_j.
std::vector<SidonBoundRow> sidon_bound_report(const Tower &tower,
                                              const LevelSet &a,
                                              const LevelSet &b,
                                              const SidonBoundOptions &opt);

void write_sidon_bound_csv(std::ostream &out,
                           const std::vector<SidonBoundRow> &rows,
                           const Rational &epsilon);

struct DecayRow {
  BigInt m;
  std::size_t interval = 0;  // j with h_j < m <= h_{j+1}
  MeasureEnclosure value;
  double psiOverSqrt = 0.0;
  double impliedC = 0.0;
  bool stageLimited = false;
};

struct DecayStage {
  std::size_t j = 0;
  bool keyInequality = false;  // psi(h_{j+1}) >= sqrt(h_j), exact
  double stageConstant = 0.0;  // mu(A) sqrt(h_{j+1}) / (r_j sqrt(h_j))
  double maxImpliedC = 0.0;
  std::size_t rows = 0;
};

struct DecayReport {
  std::vector<DecayRow> rows;
  std::vector<DecayStage> stages;
  double maxC = 0.0;
  std::size_t maxInterval = 0;
  bool stable = true;  // later-interval maxima never exceed the first two
  bool exactComparisons = false;  // maxima ordered by exact C(m)^(2q)
  std::vector<std::string> warnings;
};

DecayReport decay_report(const Tower &tower, const PsiSpec &psi,
                         const LevelSet &a, const std::vector<BigInt> &mGrid,
                         const Rational &eps);

/// Log-spaced integer grid over (h_j, h_{j+1}] for j in [jFrom, jTo].
std::vector<BigInt> stage_interval_grid(const Tower &tower, std::size_t jFrom,
                                        std::size_t jTo,
                                        std::size_t pointsPerStage);

void write_decay_csv(std::ostream &out, const DecayReport &report);

struct SupportDecayRow {
  BigInt n;
  MeasureEnclosure value;
};

/// mu(A ∩ T^-n supp S) over the n grid.
std::vector<SupportDecayRow>
support_decay_report(const Tower &tower, const LevelSet &support,
                     const LevelSet &a, const std::vector<BigInt> &nGrid,
                     const Rational &eps);

void write_support_decay_csv(std::ostream &out,
                             const std::vector<SupportDecayRow> &rows);

} // namespace rankone
