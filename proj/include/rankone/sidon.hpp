#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rankone/construction.hpp"
#include "rankone/psi.hpp"

namespace rankone {

/// Strictly increasing integers with all pairwise differences distinct.
struct SidonSet {
  std::vector<std::int64_t> elements;
  std::int64_t span = 0;  // elements lie in [1, span]
};

struct SidonVerdict {
  bool sidon = true;
  /// (a, b, c, d) with b - a == d - c, {a,b} != {c,d}; values, not indices.
  std::optional<std::array<std::int64_t, 4>> witness;
};

SidonVerdict is_sidon(const std::vector<std::int64_t> &set);

/// First n terms of the greedy B2 sequence 1, 2, 4, 8, 13, ...
SidonSet mian_chowla(std::size_t n);

/// True when q = p^e for a prime p and e >= 1.
bool is_prime_power(std::uint64_t q);
std::uint64_t next_prime_power(std::uint64_t q);

/// Singer perfect difference set: q+1 residues mod q^2+q+1 whose nonzero
/// differences cover every nonzero residue once. Rotated to the shortest
/// span and shifted so the smallest element is 1. q <= 2^16.
SidonSet singer_set(std::uint64_t q);

/// r = |S|-1, s(i) = h (S(i) - S(i-1) - 1).
StageParams optimal_stage_params(const BigInt &h, const SidonSet &set);

enum class SidonGenerator { Greedy, Singer };

struct PsiStageLedger {
  std::size_t j = 0;
  BigInt height;
  BigInt threshold;   // smallest h with psi(h) >= sqrt(h_j)
  std::int64_t ruleR = 0;
  std::int64_t r = 0;  // after prime-power substitution
  BigInt N;            // r^2
  std::int64_t span = 0;
  BigInt nextHeight;
  bool keyInequality = false;  // sqrt(h_j) / psi(h_{j+1}) <= 1
  std::string note;
};

struct PsiConstruction {
  ConstructionSpec spec;
  PsiSpec psi;
  SidonGenerator generator = SidonGenerator::Singer;
  std::vector<PsiStageLedger> ledger;
};

PsiConstruction build_from_psi(const PsiSpec &psi, const BigInt &h1,
                               std::size_t numStages,
                               SidonGenerator generator);

void write_psi_ledger(std::ostream &out, const PsiConstruction &c);

struct SidonCheckRow {
  BigInt m;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // 1-based
  std::vector<std::size_t> targetColumns;
  Rational withinMass;
  MeasureEnclosure crossStage;
  bool strict = true;
  bool relaxed = true;
};

/// One-column property of X_j ∩ T^m X_j for m in (h_j, h_{j+1}].
struct SidonCheckReport {
  std::size_t j = 0;
  std::size_t depth = 0;
  BigInt mStride = 1;
  Rational bound;  // mu(X_j) / r_j
  std::size_t checked = 0;
  std::size_t strictViolations = 0;
  std::size_t relaxedViolations = 0;
  Rational maxSlack = 0;
  std::vector<SidonCheckRow> rows;
};

/// Checks every mStride-th m in (h_j, h_{j+1}] (always including both
/// ends). Within-stage pairs come from offset arithmetic at stage j+1;
/// pieces pushed past the top of stage j+1 are followed up to stage
/// j+depth and what remains is reported as slack.
SidonCheckReport sidon_property_check(const Tower &tower, std::size_t j,
                                      std::size_t depth,
                                      const BigInt &mStride = 1);

void write_sidon_report(std::ostream &out, const SidonCheckReport &report);

} // namespace rankone
