#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rankone/construction.hpp"
#include "rankone/level_set.hpp"
#include "rankone/poisson.hpp"
#include "rankone/psi.hpp"
#include "rankone/sidon.hpp"

namespace rankone::config {

using Json = nlohmann::json;

/// Config problems: malformed JSON, unknown keys, wrong types. `path` is a
/// JSON-pointer-like location such as "construction.stages[1].r".
class ConfigError : public ValidationError {
public:
  ConfigError(const std::string &path, const std::string &message)
      : ValidationError("cli", path + ": " + message), path_(path) {}
  const std::string &path() const { return path_; }

private:
  std::string path_;
};

Json parse_text(const std::string &text);
Json load_file(const std::string &path);

/// Rejects keys of `obj` outside `allowed`.
void expect_keys(const Json &obj, std::initializer_list<const char *> allowed,
                 const std::string &path);
const Json &require(const Json &obj, const char *key, const std::string &path);

BigInt to_bigint(const Json &v, const std::string &path);
std::int64_t to_int(const Json &v, const std::string &path);
std::uint64_t to_uint(const Json &v, const std::string &path);
double to_double(const Json &v, const std::string &path);
/// Integer, decimal number, "p/q" string, or {"num": p, "den": q}.
Rational to_rational(const Json &v, const std::string &path);

/// Resolved construction plus the generator ledger when one was used.
struct ConstructionSource {
  ConstructionSpec spec;
  std::optional<PsiConstruction> generated;
};

/// {"h1": n, "stages": [{"r": r, "s": [...]}, ...]} or
/// {"generator": {"type": "optimal-sidon", "psi": {...}, "numStages": n,
///                "sets": "singer"|"greedy", "h1": n}}.
ConstructionSource parse_construction(const Json &v, const std::string &path);

PsiSpec parse_psi(const Json &v, const std::string &path);

/// {"stage": j, "ranges": [[begin, end), ...]} with half-open ranges, or
/// {"stage": j, "full": true}.
LevelSet parse_level_set(const Json &v, const Tower &tower,
                         const std::string &path);

/// {"set": {...}, "count": k}; an optional "shift" is returned separately.
CountEvent parse_event(const Json &v, const Tower &tower,
                       const std::string &path, BigInt *shift = nullptr);

std::vector<BigInt> parse_bigint_list(const Json &v, const std::string &path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string &bytes);

} // namespace rankone::config
