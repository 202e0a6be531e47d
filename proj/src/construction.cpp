#include "rankone/construction.hpp"

#include <algorithm>
#include <string>

namespace rankone {

namespace {
constexpr const char *kModule = "core-construction";
}

void ConstructionSpec::validate() const {
  if (h1 < 1) {
    throw ValidationError(kModule, "h1 must be >= 1");
  }
  if (stages.empty()) {
    throw ValidationError(kModule, "construction has no stages");
  }
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const auto &st = stages[k];
    const std::string where = "stage " + std::to_string(k + 1) + ": ";
    if (st.r < 2) {
      throw ValidationError(kModule, where + "r must be >= 2");
    }
    if (st.s.size() != static_cast<std::size_t>(st.r)) {
      throw ValidationError(kModule,
                            where + "spacer vector length " +
                                std::to_string(st.s.size()) +
                                " does not match r = " + std::to_string(st.r));
    }
    for (const auto &v : st.s) {
      if (v < 0) {
        throw ValidationError(kModule, where + "negative spacer count");
      }
    }
  }
}

std::vector<TowerStage> build_stages(const ConstructionSpec &spec,
                                     std::size_t stageCount) {
  spec.validate();
  if (stageCount < 1 || stageCount > spec.stages.size() + 1) {
    throw ValidationError(kModule,
                          "stage count " + std::to_string(stageCount) +
                              " outside [1, " +
                              std::to_string(spec.stages.size() + 1) + "]");
  }
  std::vector<TowerStage> out;
  out.reserve(stageCount);

  TowerStage first;
  first.j = 1;
  first.height = spec.h1;
  first.baseMeasure = 1;
  out.push_back(std::move(first));

  for (std::size_t j = 1; j < stageCount; ++j) {
    TowerStage &cur = out.back();
    const StageParams &p = spec.stages[j - 1];
    cur.offsets.resize(static_cast<std::size_t>(p.r));
    BigInt o = 0;
    BigInt spacers = 0;
    for (std::int64_t i = 0; i < p.r; ++i) {
      cur.offsets[static_cast<std::size_t>(i)] = o;
      o += cur.height + p.s[static_cast<std::size_t>(i)];
      spacers += p.s[static_cast<std::size_t>(i)];
    }
    TowerStage next;
    next.j = j + 1;
    next.height = cur.height * p.r + spacers;
    next.baseMeasure = cur.baseMeasure / Rational(p.r);
    out.push_back(std::move(next));
  }
  for (auto &st : out) {
    st.towerMeasure = Rational(st.height) * st.baseMeasure;
    st.towerMeasure.canonicalize();
  }
  return out;
}

MeasureGrowth measure_growth(const ConstructionSpec &spec,
                             std::size_t stageCount) {
  const auto stages = build_stages(spec, stageCount);
  MeasureGrowth g;
  Rational sum = 0;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    g.towerMeasures.push_back(stages[k].towerMeasure);
    if (k + 1 < stages.size()) {
      const auto &p = spec.stages[k];
      BigInt spacers = 0;
      for (const auto &v : p.s) {
        spacers += v;
      }
      Rational term(spacers, stages[k].height * p.r);
      term.canonicalize();
      sum += term;
      g.partialSums.push_back(sum);
    }
  }
  return g;
}

Tower::Tower(ConstructionSpec spec, std::size_t stageCount)
    : spec_(std::move(spec)), stages_(build_stages(spec_, stageCount)) {
  cache64();
}

Tower::Tower(ConstructionSpec spec)
    : Tower(spec, spec.stages.size() + 1) {}

void Tower::cache64() {
  const BigInt limit = BigInt(1) << 62;
  heights64_.assign(stages_.size(), std::nullopt);
  offsets64_.assign(stages_.size(), std::nullopt);
  for (std::size_t k = 0; k < stages_.size(); ++k) {
    if (stages_[k].height < limit) {
      heights64_[k] = stages_[k].height.get_si();
    }
  }
  for (std::size_t k = 0; k + 1 < stages_.size(); ++k) {
    if (!heights64_[k + 1]) {
      continue;
    }
    std::vector<Level> o;
    o.reserve(stages_[k].offsets.size());
    for (const auto &v : stages_[k].offsets) {
      o.push_back(v.get_si());
    }
    offsets64_[k] = std::move(o);
  }
}

const TowerStage &Tower::stage(std::size_t j) const {
  requireStage(j, kModule);
  return stages_[j - 1];
}

void Tower::requireStage(std::size_t j, const char *module) const {
  if (j < 1 || j > stages_.size()) {
    throw DepthError(module,
                     "needs more stages: stage " + std::to_string(j) +
                         " requested, " + std::to_string(stages_.size()) +
                         " built",
                     j);
  }
}

std::int64_t Tower::columns(std::size_t j) const {
  if (!hasNext(j)) {
    throw DepthError(kModule,
                     "needs more stages: stage " + std::to_string(j) +
                         " has no cutting parameters",
                     j + 1);
  }
  return spec_.stages[j - 1].r;
}

Level Tower::height(std::size_t j) const {
  requireStage(j, kModule);
  const auto &h = heights64_[j - 1];
  if (!h) {
    throw ValidationError(kModule, "height of stage " + std::to_string(j) +
                                       " exceeds the 64-bit level range");
  }
  return *h;
}

const std::vector<Level> &Tower::offsets(std::size_t j) const {
  if (!hasNext(j)) {
    throw DepthError(kModule,
                     "needs more stages: stage " + std::to_string(j + 1) +
                         " not built",
                     j + 1);
  }
  const auto &o = offsets64_[j - 1];
  if (!o) {
    throw ValidationError(kModule, "offsets of stage " + std::to_string(j) +
                                       " exceed the 64-bit level range");
  }
  return *o;
}

std::optional<std::size_t> Tower::columnContaining(std::size_t j,
                                                   Level level) const {
  const auto &o = offsets(j);
  const Level h = height(j);
  auto it = std::upper_bound(o.begin(), o.end(), level);
  if (it == o.begin()) {
    return std::nullopt;
  }
  const auto col = static_cast<std::size_t>(it - o.begin() - 1);
  if (level - o[col] < h) {
    return col;
  }
  return std::nullopt;
}

std::optional<std::size_t>
Tower::firstStageTallerThan(std::size_t from, const BigInt &m) const {
  for (std::size_t j = std::max<std::size_t>(from, 1); j <= stages_.size();
       ++j) {
    if (stages_[j - 1].height > m) {
      return j;
    }
  }
  return std::nullopt;
}

void write_stage_table(std::ostream &out, const Tower &tower) {
  out << "j,h_j,r_j,mu_Ej_num,mu_Ej_den,mu_Xj_num,mu_Xj_den\r\n";
  for (std::size_t j = 1; j <= tower.stageCount(); ++j) {
    const auto &st = tower.stage(j);
    out << j << ',' << st.height.get_str() << ',';
    if (tower.hasNext(j)) {
      out << tower.columns(j);
    }
    out << ',' << st.baseMeasure.get_num().get_str() << ','
        << st.baseMeasure.get_den().get_str() << ','
        << st.towerMeasure.get_num().get_str() << ','
        << st.towerMeasure.get_den().get_str() << "\r\n";
  }
}

} // namespace rankone
