#include "rankone/config.hpp"

#include <fstream>
#include <sstream>

namespace rankone::config {

namespace {

std::string at(const std::string &path, const std::string &key) {
  return path.empty() ? key : path + "." + key;
}

std::string idx(const std::string &path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

} // namespace

Json parse_text(const std::string &text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error &e) {
    throw ConfigError("(document)", std::string("malformed JSON: ") + e.what());
  }
}

Json load_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("(document)", "cannot read config file '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

void expect_keys(const Json &obj, std::initializer_list<const char *> allowed,
                 const std::string &path) {
  if (!obj.is_object()) {
    throw ConfigError(path.empty() ? "(document)" : path, "expected an object");
  }
  for (const auto &item : obj.items()) {
    bool ok = false;
    for (const char *a : allowed) {
      ok = ok || item.key() == a;
    }
    if (!ok) {
      throw ConfigError(at(path, item.key()), "unknown key");
    }
  }
}

const Json &require(const Json &obj, const char *key, const std::string &path) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError(at(path, key), "missing required key");
  }
  return *it;
}

BigInt to_bigint(const Json &v, const std::string &path) {
  if (v.is_number_integer()) {
    return v.is_number_unsigned() ? BigInt(v.get<unsigned long>())
                                  : BigInt(v.get<long>());
  }
  if (v.is_string()) {
    BigInt out;
    if (out.set_str(v.get<std::string>(), 10) == 0) {
      return out;
    }
  }
  throw ConfigError(path, "expected an integer");
}

std::int64_t to_int(const Json &v, const std::string &path) {
  const BigInt b = to_bigint(v, path);
  if (!b.fits_slong_p()) {
    throw ConfigError(path, "integer out of range");
  }
  return b.get_si();
}

std::uint64_t to_uint(const Json &v, const std::string &path) {
  const BigInt b = to_bigint(v, path);
  if (b < 0 || !b.fits_ulong_p()) {
    throw ConfigError(path, "expected a nonnegative integer");
  }
  return b.get_ui();
}

double to_double(const Json &v, const std::string &path) {
  if (!v.is_number()) {
    throw ConfigError(path, "expected a number");
  }
  return v.get<double>();
}

Rational to_rational(const Json &v, const std::string &path) {
  try {
    if (v.is_number_integer()) {
      return Rational(to_bigint(v, path));
    }
    if (v.is_number_float()) {
      return parse_decimal(v.dump());
    }
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s.find('/') != std::string::npos) {
        Rational q;
        if (q.set_str(s, 10) != 0 || q.get_den() == 0) {
          throw ConfigError(path, "bad rational '" + s + "'");
        }
        q.canonicalize();
        return q;
      }
      return parse_decimal(s);
    }
    if (v.is_object()) {
      expect_keys(v, {"num", "den"}, path);
      const BigInt num = to_bigint(require(v, "num", path), at(path, "num"));
      const BigInt den = to_bigint(require(v, "den", path), at(path, "den"));
      if (den == 0) {
        throw ConfigError(at(path, "den"), "zero denominator");
      }
      Rational q(num, den);
      q.canonicalize();
      return q;
    }
  } catch (const ConfigError &) {
    throw;
  } catch (const ValidationError &e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(path, "expected a rational");
}

PsiSpec parse_psi(const Json &v, const std::string &path) {
  expect_keys(v, {"kind", "alpha", "table"}, path);
  const Json &kind = require(v, "kind", path);
  if (!kind.is_string()) {
    throw ConfigError(at(path, "kind"), "expected a string");
  }
  const std::string k = kind.get<std::string>();
  PsiSpec psi;
  if (k == "power") {
    psi = PsiSpec::power(v.contains("alpha")
                             ? to_rational(v["alpha"], at(path, "alpha"))
                             : Rational(1, 4));
  } else if (k == "log") {
    psi = PsiSpec::log();
  } else if (k == "table") {
    const Json &t = require(v, "table", path);
    if (!t.is_array()) {
      throw ConfigError(at(path, "table"), "expected an array of [m, psi]");
    }
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::string p = idx(at(path, "table"), i);
      if (!t[i].is_array() || t[i].size() != 2) {
        throw ConfigError(p, "expected [m, psi]");
      }
      pts.emplace_back(to_double(t[i][0], p), to_double(t[i][1], p));
    }
    psi = PsiSpec::fromTable(std::move(pts));
  } else {
    throw ConfigError(at(path, "kind"), "unknown psi kind '" + k + "'");
  }
  try {
    psi.validate();
  } catch (const ValidationError &e) {
    throw ConfigError(path, e.what());
  }
  return psi;
}

ConstructionSource parse_construction(const Json &v, const std::string &path) {
  ConstructionSource out;
  if (v.is_object() && v.contains("generator")) {
    expect_keys(v, {"generator"}, path);
    const std::string gp = at(path, "generator");
    const Json &g = v["generator"];
    expect_keys(g, {"type", "psi", "numStages", "sets", "h1"}, gp);
    const Json &type = require(g, "type", gp);
    if (type != "optimal-sidon") {
      throw ConfigError(at(gp, "type"), "unknown generator type");
    }
    const PsiSpec psi = parse_psi(require(g, "psi", gp), at(gp, "psi"));
    const std::uint64_t stages =
        to_uint(require(g, "numStages", gp), at(gp, "numStages"));
    if (stages < 1) {
      throw ConfigError(at(gp, "numStages"), "must be >= 1");
    }
    SidonGenerator gen = SidonGenerator::Singer;
    if (g.contains("sets")) {
      const Json &sets = g["sets"];
      if (sets == "greedy") {
        gen = SidonGenerator::Greedy;
      } else if (sets != "singer") {
        throw ConfigError(at(gp, "sets"), "expected \"singer\" or \"greedy\"");
      }
    }
    const BigInt h1 = g.contains("h1") ? to_bigint(g["h1"], at(gp, "h1"))
                                       : BigInt(1);
    out.generated = build_from_psi(psi, h1, stages, gen);
    out.spec = out.generated->spec;
    return out;
  }
  expect_keys(v, {"h1", "stages"}, path);
  out.spec.h1 = to_bigint(require(v, "h1", path), at(path, "h1"));
  const Json &stages = require(v, "stages", path);
  if (!stages.is_array()) {
    throw ConfigError(at(path, "stages"), "expected an array");
  }
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const std::string sp = idx(at(path, "stages"), i);
    expect_keys(stages[i], {"r", "s"}, sp);
    StageParams p;
    p.r = to_int(require(stages[i], "r", sp), at(sp, "r"));
    const Json &s = require(stages[i], "s", sp);
    if (!s.is_array()) {
      throw ConfigError(at(sp, "s"), "expected an array");
    }
    for (std::size_t k = 0; k < s.size(); ++k) {
      p.s.push_back(to_bigint(s[k], idx(at(sp, "s"), k)));
    }
    out.spec.stages.push_back(std::move(p));
  }
  try {
    out.spec.validate();
  } catch (const ValidationError &e) {
    throw ConfigError(path, e.what());
  }
  return out;
}

LevelSet parse_level_set(const Json &v, const Tower &tower,
                         const std::string &path) {
  expect_keys(v, {"stage", "ranges", "full"}, path);
  const std::int64_t stage = to_int(require(v, "stage", path), at(path, "stage"));
  if (stage < 1 || static_cast<std::size_t>(stage) > tower.stageCount()) {
    throw ConfigError(at(path, "stage"),
                      "stage " + std::to_string(stage) + " is not built");
  }
  const auto j = static_cast<std::size_t>(stage);
  if (v.contains("full")) {
    if (v.contains("ranges") || v["full"] != true) {
      throw ConfigError(at(path, "full"),
                        "use either \"full\": true or \"ranges\"");
    }
    return LevelSet::full(tower, j);
  }
  const Json &ranges = require(v, "ranges", path);
  if (!ranges.is_array()) {
    throw ConfigError(at(path, "ranges"), "expected an array");
  }
  std::vector<LevelRange> rs;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const std::string rp = idx(at(path, "ranges"), i);
    if (!ranges[i].is_array() || ranges[i].size() != 2) {
      throw ConfigError(rp, "expected [begin, end]");
    }
    const Level b = to_int(ranges[i][0], rp);
    const Level e = to_int(ranges[i][1], rp);
    if (b > e) {
      throw ConfigError(rp, "begin > end");
    }
    rs.push_back({b, e});
  }
  LevelSet set(j, std::move(rs));
  try {
    set.validate(tower);
  } catch (const ValidationError &e) {
    throw ConfigError(path, e.what());
  }
  return set;
}

CountEvent parse_event(const Json &v, const Tower &tower,
                       const std::string &path, BigInt *shift) {
  if (shift) {
    expect_keys(v, {"set", "count", "shift"}, path);
    *shift = v.contains("shift") ? to_bigint(v["shift"], at(path, "shift"))
                                 : BigInt(0);
  } else {
    expect_keys(v, {"set", "count"}, path);
  }
  CountEvent e;
  e.set = parse_level_set(require(v, "set", path), tower, at(path, "set"));
  e.count = to_uint(require(v, "count", path), at(path, "count"));
  return e;
}

std::vector<BigInt> parse_bigint_list(const Json &v, const std::string &path) {
  if (!v.is_array()) {
    throw ConfigError(path, "expected an array of integers");
  }
  std::vector<BigInt> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(to_bigint(v[i], idx(path, i)));
  }
  return out;
}

std::uint64_t fnv1a(const std::string &bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace rankone::config
