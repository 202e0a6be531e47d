#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rankone/config.hpp"
#include "rankone/construction.hpp"
#include "rankone/correlation.hpp"
#include "rankone/csv.hpp"
#include "rankone/homoclinic.hpp"
#include "rankone/poisson.hpp"
#include "rankone/sidon.hpp"

namespace rankone::cli {

namespace {

using config::ConfigError;
using config::Json;

struct Context {
  const Options *opt = nullptr;
  std::string command;
  Json doc;
  config::ConstructionSource source;
  std::optional<Tower> tower;
  std::optional<Rational> epsilon;
  std::optional<std::uint64_t> seed;
  std::string hash;
  CommandResult result;

  const Json *section(const char *key) const {
    auto it = doc.find(key);
    return it == doc.end() ? nullptr : &*it;
  }

  std::uint64_t requireSeed(const std::string &what) const {
    if (!seed) {
      throw ConfigError("seed", what + " is stochastic and needs a seed "
                                       "(config \"seed\" or --seed)");
    }
    return *seed;
  }

  Rational eps(const LevelSet &a) const {
    return epsilon ? *epsilon : default_epsilon(*tower, a);
  }

  void add(const std::string &name, const std::string &content) {
    result.files.push_back({name, content});
    Json meta;
    meta["command"] = command;
    meta["config_hash"] = hash;
    meta["tool_version"] = kToolVersion;
    meta["file"] = name;
    if (seed) {
      meta["seed"] = *seed;
    }
    result.files.push_back({name + ".meta.json", meta.dump(2) + "\n"});
  }

  void addJson(const std::string &name, Json body) {
    body["config_hash"] = hash;
    body["tool_version"] = kToolVersion;
    body["command"] = command;
    result.files.push_back({name, body.dump(2) + "\n"});
  }

  void say(const std::string &line) { result.summary.push_back(line); }
};

std::string rat(const Rational &q) { return q.get_str(); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::size_t stage_key(const Json &obj, const char *key, const std::string &path,
                      std::size_t fallback) {
  if (!obj.contains(key)) {
    return fallback;
  }
  const std::uint64_t v = config::to_uint(obj[key], path + "." + key);
  return static_cast<std::size_t>(v);
}

std::uint64_t count_key(const Json &obj, const char *key,
                        const std::string &path, std::uint64_t fallback) {
  return obj.contains(key) ? config::to_uint(obj[key], path + "." + key)
                           : fallback;
}

std::vector<BigInt> grid_from(const Json &sec, const Tower &tower,
                              const std::string &path, const char *listKey) {
  if (sec.contains(listKey)) {
    return config::parse_bigint_list(sec[listKey], path + "." + listKey);
  }
  const std::string gp = path + ".grid";
  const Json &g = config::require(sec, "grid", path);
  config::expect_keys(g, {"jFrom", "jTo", "pointsPerStage"}, gp);
  const std::size_t from = stage_key(g, "jFrom", gp, 1);
  const std::size_t to = stage_key(g, "jTo", gp, tower.stageCount() - 2);
  const std::size_t pts = stage_key(g, "pointsPerStage", gp, 8);
  return stage_interval_grid(tower, from, to, pts);
}

// --- build ---------------------------------------------------------------

void cmd_build(Context &ctx) {
  if (const Json *sec = ctx.section("build")) {
    config::expect_keys(*sec, {}, "build");
  }
  const Tower &tower = *ctx.tower;
  std::ostringstream stages;
  write_stage_table(stages, tower);
  ctx.add("stages.csv", stages.str());

  const MeasureGrowth g = measure_growth(tower.spec(), tower.stageCount());
  std::ostringstream growth;
  csv::Writer w(growth);
  w.header({"j", "mu_X_num", "mu_X_den", "mu_X", "partial_sum_num",
            "partial_sum_den", "partial_sum"});
  for (std::size_t i = 0; i < g.towerMeasures.size(); ++i) {
    w.field(i + 1).rational(g.towerMeasures[i]);
    if (i == 0) {
      w.field(std::string()).field(std::string()).field(std::string());
    } else {
      w.rational(g.partialSums[i - 1]);
    }
    w.endRow();
  }
  ctx.add("growth.csv", growth.str());

  if (ctx.source.generated) {
    std::ostringstream ledger;
    write_psi_ledger(ledger, *ctx.source.generated);
    ctx.add("psi_ledger.csv", ledger.str());
    bool allTrue = true;
    for (const auto &row : ctx.source.generated->ledger) {
      allTrue = allTrue && row.keyInequality;
    }
    ctx.say("generator: " + ctx.source.generated->psi.describe() +
            ", key inequality " + (allTrue ? "holds" : "FAILS") +
            " on every stage");
  }
  ctx.say("stages: " + std::to_string(tower.stageCount()));
  for (std::size_t j = 1; j <= tower.stageCount(); ++j) {
    ctx.say("  j=" + std::to_string(j) + " h=" + tower.heightExact(j).get_str() +
            " mu(E)=" + rat(tower.baseMeasure(j)) +
            " mu(X)=" + rat(tower.stage(j).towerMeasure));
  }
}

// --- check-sidon ---------------------------------------------------------

void cmd_check_sidon(Context &ctx) {
  const Json &sec = config::require(ctx.doc, "check_sidon", "");
  config::expect_keys(sec, {"property", "bound"}, "check_sidon");
  if (!sec.contains("property") && !sec.contains("bound")) {
    throw ConfigError("check_sidon", "needs \"property\" and/or \"bound\"");
  }
  const Tower &tower = *ctx.tower;
  if (sec.contains("property")) {
    const std::string p = "check_sidon.property";
    const Json &ps = sec["property"];
    config::expect_keys(ps, {"j", "depth", "mStride"}, p);
    const auto j = static_cast<std::size_t>(
        config::to_uint(config::require(ps, "j", p), p + ".j"));
    const std::size_t depth =
        stage_key(ps, "depth", p, ctx.opt->depth.value_or(1));
    const BigInt stride =
        ps.contains("mStride") ? config::to_bigint(ps["mStride"], p + ".mStride")
                               : BigInt(1);
    const SidonCheckReport rep = sidon_property_check(tower, j, depth, stride);
    std::ostringstream os;
    write_sidon_report(os, rep);
    ctx.add("sidon_check.csv", os.str());
    ctx.say("sidon property at j=" + std::to_string(j) + ": " +
            std::to_string(rep.checked) + " shifts, strict violations " +
            std::to_string(rep.strictViolations) + ", relaxed violations " +
            std::to_string(rep.relaxedViolations));
  }
  if (sec.contains("bound")) {
    const std::string p = "check_sidon.bound";
    const Json &bs = sec["bound"];
    config::expect_keys(bs, {"a", "b", "jFrom", "jTo", "exhaustiveLimit",
                             "samplesPerStage"},
                        p);
    const LevelSet a =
        config::parse_level_set(config::require(bs, "a", p), tower, p + ".a");
    const LevelSet b = bs.contains("b")
                           ? config::parse_level_set(bs["b"], tower, p + ".b")
                           : a;
    SidonBoundOptions o;
    o.jFrom = stage_key(bs, "jFrom", p, a.stage() + 1);
    o.jTo = stage_key(bs, "jTo", p, tower.stageCount() - 1);
    o.exhaustiveLimit = count_key(bs, "exhaustiveLimit", p, o.exhaustiveLimit);
    o.samplesPerStage = count_key(bs, "samplesPerStage", p, o.samplesPerStage);
    bool sampled = false;
    for (std::size_t j = o.jFrom; j <= o.jTo && tower.hasNext(j); ++j) {
      sampled = sampled ||
                tower.heightExact(j + 1) >
                    BigInt(static_cast<unsigned long>(o.exhaustiveLimit));
    }
    if (sampled && o.samplesPerStage > 0) {
      o.seed = ctx.requireSeed("sampled Sidon bound check");
    }
    o.epsilon = ctx.eps(a);
    const auto rows = sidon_bound_report(tower, a, b, o);
    std::ostringstream os;
    write_sidon_bound_csv(os, rows, *o.epsilon);
    ctx.add("sidon_bound.csv", os.str());
    std::size_t fails = 0;
    std::size_t over = 0;
    for (const auto &r : rows) {
      fails += r.pass ? 0 : 1;
      over += r.slackExceeds ? 1 : 0;
    }
    ctx.say("sidon bound: " + std::to_string(rows.size()) + " rows, " +
            std::to_string(fails) + " with lo above bound, " +
            std::to_string(over) + " with hi above bound");
  }
}

// --- corr ----------------------------------------------------------------

void cmd_corr(Context &ctx) {
  const Json &sec = config::require(ctx.doc, "corr", "");
  config::expect_keys(sec, {"a", "b", "c", "m", "mn", "mcSamples"}, "corr");
  const Tower &tower = *ctx.tower;
  const LevelSet a =
      config::parse_level_set(config::require(sec, "a", "corr"), tower, "corr.a");
  const LevelSet b = sec.contains("b")
                         ? config::parse_level_set(sec["b"], tower, "corr.b")
                         : a;
  const Rational eps = ctx.eps(a);
  const std::uint64_t mc = count_key(sec, "mcSamples", "corr", 0);
  const std::uint64_t seed = mc > 0 ? ctx.requireSeed("corr.mcSamples") : 0;

  if (sec.contains("m")) {
    const auto ms = config::parse_bigint_list(sec["m"], "corr.m");
    PairQuery query(tower, a, b);
    std::ostringstream os;
    csv::Writer w(os);
    w.header({"m", "lo_num", "lo_den", "lo", "hi_num", "hi_den", "hi",
              "start_stage", "end_stage", "stage_limited", "mc_estimate",
              "mc_stderr", "mc_samples"});
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const EnclosureResult r = query.enclosure(ms[i], eps, ctx.opt->depth);
      w.field(ms[i]).rational(r.value.lo).rational(r.value.hi);
      w.field(r.startStage).field(r.endStage).field(r.stageLimited);
      if (mc > 0) {
        const McEstimate e =
            mc_correlation(tower, a, b, ms[i], mc, Rng(seed).split(i).seed());
        w.field(e.estimate).field(e.stderr_).field(
            static_cast<unsigned long long>(e.samples));
      } else {
        w.field(std::string()).field(std::string()).field(std::string());
      }
      w.endRow();
      ctx.say("m=" + ms[i].get_str() + " [" + rat(r.value.lo) + ", " +
              rat(r.value.hi) + "]");
    }
    ctx.add("corr.csv", os.str());
  }
  if (sec.contains("mn")) {
    const LevelSet c = sec.contains("c")
                           ? config::parse_level_set(sec["c"], tower, "corr.c")
                           : b;
    TripleQuery query(tower, a, b, c);
    std::ostringstream os;
    csv::Writer w(os);
    w.header({"m", "n", "lo_num", "lo_den", "lo", "hi_num", "hi_den", "hi",
              "start_stage", "end_stage", "stage_limited"});
    const Json &mn = sec["mn"];
    if (!mn.is_array()) {
      throw ConfigError("corr.mn", "expected an array of [m, n]");
    }
    for (std::size_t i = 0; i < mn.size(); ++i) {
      const std::string p = "corr.mn[" + std::to_string(i) + "]";
      if (!mn[i].is_array() || mn[i].size() != 2) {
        throw ConfigError(p, "expected [m, n]");
      }
      const BigInt m = config::to_bigint(mn[i][0], p);
      const BigInt n = config::to_bigint(mn[i][1], p);
      const EnclosureResult r = query.enclosure(m, n, eps, ctx.opt->depth);
      w.field(m).field(n).rational(r.value.lo).rational(r.value.hi);
      w.field(r.startStage).field(r.endStage).field(r.stageLimited);
      w.endRow();
    }
    ctx.add("triple_corr.csv", os.str());
  } else if (sec.contains("c")) {
    throw ConfigError("corr.c", "only used together with \"mn\"");
  }
  if (!sec.contains("m") && !sec.contains("mn")) {
    throw ConfigError("corr", "needs \"m\" and/or \"mn\"");
  }
}

// --- decay ---------------------------------------------------------------

void cmd_decay(Context &ctx) {
  const Json &sec = config::require(ctx.doc, "decay", "");
  config::expect_keys(sec, {"psi", "a", "m", "grid", "support", "n"}, "decay");
  const Tower &tower = *ctx.tower;
  std::vector<std::string> warnings;
  PsiSpec psi;
  if (sec.contains("psi")) {
    psi = config::parse_psi(sec["psi"], "decay.psi");
    if (ctx.source.generated && !(ctx.source.generated->psi == psi)) {
      warnings.push_back("decay psi " + psi.describe() +
                         " differs from the generator psi " +
                         ctx.source.generated->psi.describe());
    }
  } else if (ctx.source.generated) {
    psi = ctx.source.generated->psi;
  } else {
    throw ConfigError("decay.psi",
                      "required when the construction has no generator");
  }
  if (!ctx.source.generated) {
    warnings.push_back("construction was not generated from psi; the decay "
                       "bound is not implied");
  }
  const LevelSet a = config::parse_level_set(config::require(sec, "a", "decay"),
                                             tower, "decay.a");
  const auto grid = grid_from(sec, tower, "decay", "m");
  DecayReport rep = decay_report(tower, psi, a, grid, ctx.eps(a));
  warnings.insert(warnings.end(), rep.warnings.begin(), rep.warnings.end());
  std::ostringstream os;
  write_decay_csv(os, rep);
  ctx.add("decay.csv", os.str());

  Json summary;
  summary["psi"] = psi.describe();
  summary["max_C"] = rep.maxC;
  summary["max_interval"] = rep.maxInterval;
  summary["stable"] = rep.stable;
  summary["exact_comparisons"] = rep.exactComparisons;
  summary["warnings"] = warnings;
  Json stages = Json::array();
  for (const auto &st : rep.stages) {
    stages.push_back({{"j", st.j},
                      {"key_inequality", st.keyInequality},
                      {"stage_constant", st.stageConstant},
                      {"max_C", st.maxImpliedC},
                      {"rows", st.rows}});
  }
  summary["stages"] = stages;
  ctx.addJson("decay_summary.json", summary);
  ctx.say("decay: max C(m) " + csv::format_double(rep.maxC) + " in interval " +
          std::to_string(rep.maxInterval) +
          (rep.stable ? ", stable" : ", NOT stable"));
  for (const auto &wmsg : warnings) {
    ctx.say("warning: " + wmsg);
  }

  if (sec.contains("support")) {
    const LevelSet support =
        config::parse_level_set(sec["support"], tower, "decay.support");
    const auto ns =
        config::parse_bigint_list(config::require(sec, "n", "decay"), "decay.n");
    const auto rows = support_decay_report(tower, support, a, ns, ctx.eps(a));
    std::ostringstream so;
    write_support_decay_csv(so, rows);
    ctx.add("support_decay.csv", so.str());
  } else if (sec.contains("n")) {
    throw ConfigError("decay.n", "only used together with \"support\"");
  }
}

// --- poisson -------------------------------------------------------------

void cmd_poisson(Context &ctx) {
  const Json &sec = config::require(ctx.doc, "poisson", "");
  config::expect_keys(sec, {"joint", "mixing", "triple", "normalization"},
                      "poisson");
  const Tower &tower = *ctx.tower;
  bool any = false;
  if (sec.contains("joint")) {
    any = true;
    const std::string p = "poisson.joint";
    const Json &js = sec["joint"];
    config::expect_keys(js, {"systems", "mcSamples"}, p);
    const Json &systems = config::require(js, "systems", p);
    if (!systems.is_array()) {
      throw ConfigError(p + ".systems", "expected an array of event lists");
    }
    const std::uint64_t mc = count_key(js, "mcSamples", p, 0);
    const std::uint64_t seed = mc > 0 ? ctx.requireSeed(p + ".mcSamples") : 0;
    std::ostringstream os;
    csv::Writer w(os);
    w.header({"system", "lo", "hi", "product", "mc_estimate", "mc_stderr",
              "mc_samples", "stage_limited", "warnings"});
    for (std::size_t i = 0; i < systems.size(); ++i) {
      const std::string sp = p + ".systems[" + std::to_string(i) + "]";
      if (!systems[i].is_array()) {
        throw ConfigError(sp, "expected an array of events");
      }
      std::vector<ShiftedEvent> events;
      for (std::size_t k = 0; k < systems[i].size(); ++k) {
        ShiftedEvent e;
        e.event = config::parse_event(systems[i][k], tower,
                                      sp + "[" + std::to_string(k) + "]",
                                      &e.shift);
        events.push_back(std::move(e));
      }
      const Rational eps =
          ctx.epsilon ? *ctx.epsilon
                      : default_epsilon(tower, events.at(0).event.set);
      const JointResult r = joint_prob(tower, events, eps);
      w.field(i).field(r.prob.lo).field(r.prob.hi).field(
          marginal_product(tower, events));
      if (mc > 0) {
        const McEstimate e =
            mc_joint_prob(tower, events, mc, Rng(seed).split(i).seed());
        w.field(e.estimate).field(e.stderr_).field(
            static_cast<unsigned long long>(e.samples));
      } else {
        w.field(std::string()).field(std::string()).field(std::string());
      }
      std::string warn;
      for (const auto &m : r.warnings) {
        warn += (warn.empty() ? "" : "; ") + m;
      }
      w.field(r.stageLimited).field(warn);
      w.endRow();
    }
    ctx.add("joint.csv", os.str());
  }
  if (sec.contains("normalization")) {
    any = true;
    const std::string p = "poisson.normalization";
    const Json &ns = sec["normalization"];
    config::expect_keys(ns, {"set", "maxCount"}, p);
    const LevelSet set =
        config::parse_level_set(config::require(ns, "set", p), tower, p + ".set");
    const Normalization n = cylinder_normalization(
        set.measure(tower), count_key(ns, "maxCount", p, 64));
    std::ostringstream os;
    csv::Writer w(os);
    w.header({"mean_num", "mean_den", "mean", "sum", "tail_bound"});
    w.rational(set.measure(tower)).field(n.sum).field(n.tailBound);
    w.endRow();
    ctx.add("normalization.csv", os.str());
  }
  if (sec.contains("mixing")) {
    any = true;
    const std::string p = "poisson.mixing";
    const Json &ms = sec["mixing"];
    config::expect_keys(ms, {"v", "w", "n", "grid"}, p);
    const CountEvent v =
        config::parse_event(config::require(ms, "v", p), tower, p + ".v");
    const CountEvent w =
        ms.contains("w") ? config::parse_event(ms["w"], tower, p + ".w") : v;
    const auto grid = grid_from(ms, tower, p, "n");
    const Rational eps = ctx.eps(v.set);
    const auto rows = mixing_report(tower, v, w, grid, eps);
    std::ostringstream os;
    write_mixing_csv(os, rows);
    ctx.add("mixing.csv", os.str());
    std::map<std::size_t, double> maxDev;
    for (const auto &r : rows) {
      maxDev[r.interval] = std::max(maxDev[r.interval], r.devAbs);
    }
    for (const auto &[j, d] : maxDev) {
      ctx.say("mixing interval " + std::to_string(j) + ": max deviation " +
              csv::format_double(d));
    }
  }
  if (sec.contains("triple")) {
    any = true;
    const std::string p = "poisson.triple";
    const Json &ts = sec["triple"];
    config::expect_keys(ts, {"u", "v", "w", "grid"}, p);
    const CountEvent u =
        config::parse_event(config::require(ts, "u", p), tower, p + ".u");
    const CountEvent v =
        ts.contains("v") ? config::parse_event(ts["v"], tower, p + ".v") : u;
    const CountEvent w =
        ts.contains("w") ? config::parse_event(ts["w"], tower, p + ".w") : v;
    const Json &g = config::require(ts, "grid", p);
    if (!g.is_array()) {
      throw ConfigError(p + ".grid", "expected an array of [m, n]");
    }
    std::vector<std::pair<BigInt, BigInt>> grid;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::string gp = p + ".grid[" + std::to_string(i) + "]";
      if (!g[i].is_array() || g[i].size() != 2) {
        throw ConfigError(gp, "expected [m, n]");
      }
      grid.emplace_back(config::to_bigint(g[i][0], gp),
                        config::to_bigint(g[i][1], gp));
    }
    const auto rows = triple_mixing_report(tower, u, v, w, grid, ctx.eps(u.set));
    std::ostringstream os;
    write_triple_mixing_csv(os, rows);
    ctx.add("triple_mixing.csv", os.str());
  }
  if (!any) {
    throw ConfigError("poisson",
                      "needs one of \"joint\", \"normalization\", \"mixing\", "
                      "\"triple\"");
  }
}

// --- homoclinic ----------------------------------------------------------

void cmd_homoclinic(Context &ctx) {
  const std::string p = "homoclinic";
  const Json empty = Json::object();
  const Json *secp = ctx.section("homoclinic");
  const Json &sec = secp ? *secp : empty;
  config::expect_keys(sec, {"identity", "jFrom", "jTo", "samplesPerStage",
                            "zmax", "mcSamples"},
                      p);
  const Tower &tower = *ctx.tower;
  bool identity = false;
  if (sec.contains("identity")) {
    if (!sec["identity"].is_boolean()) {
      throw ConfigError(p + ".identity", "expected a boolean");
    }
    identity = sec["identity"].get<bool>();
  }
  const HomoclinicMap map(tower, identity);

  std::ostringstream sched;
  write_schedule_csv(sched, map.schedule());
  ctx.add("schedule.csv", sched.str());

  const auto audit = retention_audit(map);
  std::ostringstream ret;
  {
    csv::Writer w(ret);
    w.header({"stage", "blocks", "s", "ratio_num", "ratio_den", "ratio",
              "bound_num", "bound_den", "bound", "pass"});
    for (const auto &r : audit) {
      w.field(r.stage).field(r.blocks).field(r.s).rational(r.ratio)
          .rational(r.bound).field(r.pass);
      w.endRow();
    }
  }
  ctx.add("retention.csv", ret.str());
  bool retained = true;
  for (const auto &r : audit) {
    retained = retained && r.pass;
  }
  ctx.say(std::string("retention audit: ") + (retained ? "pass" : "FAIL"));

  const std::int64_t zmax = sec.contains("zmax")
                                ? config::to_int(sec["zmax"], p + ".zmax")
                                : 50;
  const WanderingReport wr = wandering_check(map, zmax);
  std::ostringstream wand;
  {
    csv::Writer w(wand);
    w.header({"z", "pieces", "covered_num", "covered_den", "covered",
              "escaped_num", "escaped_den", "escaped"});
    for (const auto &r : wr.ledger) {
      w.field(static_cast<long long>(r.z)).field(r.pieces).rational(r.covered)
          .rational(r.escaped);
      w.endRow();
    }
  }
  ctx.add("wandering.csv", wand.str());
  ctx.say("wandering check |z|<=" + std::to_string(zmax) + ": " +
          (wr.pass ? "pass" : "FAIL") + (wr.disjoint ? "" : " (overlap)") +
          (wr.complete ? "" : " (escaped)"));

  Json summary;
  summary["identity"] = identity;
  summary["delta"] = rat(map.delta());
  summary["retention_pass"] = retained;
  summary["wandering"] = {{"zmax", zmax},
                          {"disjoint", wr.disjoint},
                          {"complete", wr.complete},
                          {"pass", wr.pass},
                          {"covered", rat(wr.coveredMass)},
                          {"total", rat(wr.totalMass)}};

  const std::uint64_t samples = count_key(sec, "samplesPerStage", p, 0);
  if (samples > 0 || sec.contains("jFrom") || sec.contains("jTo")) {
    const std::size_t from = stage_key(sec, "jFrom", p, 2);
    const std::size_t to = stage_key(sec, "jTo", p, tower.stageCount() - 1);
    const std::uint64_t seed =
        samples > 0 ? ctx.requireSeed("homoclinic sweep") : 0;
    const SweepReport sw = homoclinic_sweep(map, from, to, samples, seed);
    std::ostringstream os;
    write_sweep_csv(os, sw);
    ctx.add("sweep.csv", os.str());
    Json maxima = Json::array();
    for (const auto &[j, hi] : sw.maxHi) {
      maxima.push_back({{"j", j}, {"max_defect_hi", rat(hi)}});
      ctx.say("sweep stage " + std::to_string(j) + ": max defect hi " + rat(hi));
    }
    summary["sweep"] = maxima;
  }
  ctx.addJson("homoclinic_summary.json", summary);
}

// --- flow ----------------------------------------------------------------

void cmd_flow(Context &ctx) {
  const std::string p = "flow";
  const Json &sec = config::require(ctx.doc, "flow", "");
  config::expect_keys(sec, {"phi", "a", "b", "c", "d", "t", "n", "samples"}, p);
  FlowParams fp;
  if (sec.contains("phi")) {
    if (!sec["phi"].is_string()) {
      throw ConfigError(p + ".phi", "expected a string");
    }
    try {
      fp.phi = FlowParams::parsePhi(sec["phi"].get<std::string>());
    } catch (const ValidationError &e) {
      throw ConfigError(p + ".phi", e.what());
    }
  }
  fp.a = sec.contains("a") ? config::to_double(sec["a"], p + ".a") : fp.a;
  fp.b = sec.contains("b") ? config::to_double(sec["b"], p + ".b") : fp.b;
  fp.c = sec.contains("c") ? config::to_double(sec["c"], p + ".c") : fp.c;
  fp.d = sec.contains("d") ? config::to_double(sec["d"], p + ".d") : fp.d;
  try {
    fp.validate();
  } catch (const ValidationError &e) {
    throw ConfigError(p, e.what());
  }
  std::vector<double> ts;
  if (sec.contains("t") && sec["t"].is_array()) {
    for (std::size_t i = 0; i < sec["t"].size(); ++i) {
      ts.push_back(
          config::to_double(sec["t"][i], p + ".t[" + std::to_string(i) + "]"));
    }
  } else {
    ts.push_back(sec.contains("t") ? config::to_double(sec["t"], p + ".t") : 1.0);
  }
  const auto ns = sec.contains("n") ? config::parse_bigint_list(sec["n"], p + ".n")
                                    : std::vector<BigInt>{BigInt(0)};
  const std::uint64_t samples = count_key(sec, "samples", p, 100000);
  const std::uint64_t seed = ctx.requireSeed("flow");
  std::vector<FlowEstimate> rows;
  std::uint64_t idx = 0;
  for (const double t : ts) {
    for (const auto &n : ns) {
      rows.push_back(flow_defect(*ctx.tower, fp, t, n, samples,
                                 Rng(seed).split(idx++).seed()));
      ctx.say("flow t=" + csv::format_double(t) + " n=" + n.get_str() + ": " +
              csv::format_double(rows.back().estimate) + " +- " +
              csv::format_double(rows.back().stderr_));
    }
  }
  std::ostringstream os;
  write_flow_csv(os, rows);
  ctx.add("flow.csv", os.str());
}

using Handler = std::function<void(Context &)>;

const std::map<std::string, Handler> &handlers() {
  static const std::map<std::string, Handler> h = {
      {"build", cmd_build},           {"check-sidon", cmd_check_sidon},
      {"corr", cmd_corr},             {"decay", cmd_decay},
      {"poisson", cmd_poisson},       {"homoclinic", cmd_homoclinic},
      {"flow", cmd_flow}};
  return h;
}

Json error_json(int code, const std::string &module, const std::string &message,
                Json context) {
  Json e;
  e["code"] = code;
  e["module"] = module;
  e["message"] = message;
  e["context"] = std::move(context);
  return e;
}

} // namespace

const std::vector<std::string> &command_names() {
  static const std::vector<std::string> names = {
      "build", "check-sidon", "corr", "decay", "poisson", "homoclinic", "flow"};
  return names;
}

CommandResult run_command(const std::string &command, const Options &opt) {
  auto it = handlers().find(command);
  if (it == handlers().end()) {
    throw ConfigError("(command)", "unknown command '" + command + "'");
  }
  Context ctx;
  ctx.opt = &opt;
  ctx.command = command;
  ctx.doc = config::load_file(opt.config);
  config::expect_keys(ctx.doc,
                      {"name", "construction", "seed", "epsilon", "build",
                       "check_sidon", "corr", "decay", "poisson", "homoclinic",
                       "flow"},
                      "");

  if (opt.threads && *opt.threads == 0) {
    throw ConfigError("--threads", "must be >= 1");
  }
  if (ctx.doc.contains("seed")) {
    ctx.seed = config::to_uint(ctx.doc["seed"], "seed");
  }
  if (opt.seed) {
    ctx.seed = opt.seed;
  }
  if (ctx.doc.contains("epsilon")) {
    ctx.epsilon = config::to_rational(ctx.doc["epsilon"], "epsilon");
  }
  if (opt.epsilonNum || opt.epsilonDen) {
    const Json num = opt.epsilonNum.value_or("1");
    const Json den = opt.epsilonDen.value_or("1");
    ctx.epsilon = config::to_rational(
        Json{{"num", config::to_bigint(num, "--epsilon-num").get_str()},
             {"den", config::to_bigint(den, "--epsilon-den").get_str()}},
        "--epsilon");
  }
  if (ctx.epsilon && *ctx.epsilon <= 0) {
    throw ConfigError("epsilon", "must be positive");
  }

  ctx.source = config::parse_construction(
      config::require(ctx.doc, "construction", ""), "construction");
  ctx.tower.emplace(ctx.source.spec);

  Json hashed;
  hashed["config"] = ctx.doc;
  hashed["command"] = command;
  hashed["seed"] = ctx.seed ? Json(*ctx.seed) : Json();
  hashed["depth"] = opt.depth ? Json(*opt.depth) : Json();
  hashed["epsilon"] = ctx.epsilon ? Json(rat(*ctx.epsilon)) : Json();
  hashed["version"] = kToolVersion;
  ctx.hash = hex64(config::fnv1a(hashed.dump()));

  it->second(ctx);
  return std::move(ctx.result);
}

int execute(const std::string &command, const Options &opt, std::ostream &log,
            std::ostream &err) {
  try {
    CommandResult res = run_command(command, opt);
    namespace fs = std::filesystem;
    fs::create_directories(opt.out);
    for (const auto &f : res.files) {
      std::ofstream os(fs::path(opt.out) / f.name, std::ios::binary);
      os << f.content;
      if (!os) {
        throw Error("cli", "cannot write " + f.name);
      }
    }
    for (const auto &line : res.summary) {
      log << line << "\n";
    }
    return 0;
  } catch (const ConfigError &e) {
    err << error_json(2, e.module(), e.what(),
                      {{"command", command}, {"path", e.path()}})
               .dump()
        << "\n";
    return 2;
  } catch (const ValidationError &e) {
    err << error_json(2, e.module(), e.what(), {{"command", command}}).dump()
        << "\n";
    return 2;
  } catch (const DepthError &e) {
    err << error_json(3, e.module(), e.what(),
                      {{"command", command},
                       {"required_stage", e.requiredStage()}})
               .dump()
        << "\n";
    return 3;
  } catch (const Error &e) {
    err << error_json(3, e.module(), e.what(), {{"command", command}}).dump()
        << "\n";
    return 3;
  } catch (const std::exception &e) {
    err << error_json(3, "cli", e.what(), {{"command", command}}).dump()
        << "\n";
    return 3;
  }
}

} // namespace rankone::cli
