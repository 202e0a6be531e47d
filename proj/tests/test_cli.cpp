#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"

using namespace rankone;
using rankone::cli::CommandResult;
using rankone::cli::Options;

namespace fs = std::filesystem;

namespace {

std::string config_path(const std::string &name) {
  return std::string(RANKONE_CONFIG_DIR) + "/" + name;
}

Options options(const std::string &config) {
  Options o;
  o.config = config;
  return o;
}

const std::string &file(const CommandResult &r, const std::string &name) {
  for (const auto &f : r.files) {
    if (f.name == name) {
      return f.content;
    }
  }
  throw std::runtime_error("missing output " + name);
}

std::vector<std::string> lines(const std::string &text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    out.push_back(line);
  }
  return out;
}

std::vector<std::string> split_row(const std::string &row) {
  std::vector<std::string> out;
  std::istringstream is(row);
  std::string cell;
  while (std::getline(is, cell, ',')) {
    out.push_back(cell);
  }
  return out;
}

bool has_line_starting(const std::string &text, const std::string &prefix) {
  for (const auto &l : lines(text)) {
    if (l.rfind(prefix, 0) == 0) {
      return true;
    }
  }
  return false;
}

class TempConfig {
public:
  explicit TempConfig(const std::string &body) {
    path_ = fs::temp_directory_path() /
            ("rankone_cli_" + std::to_string(counter()++) + ".json");
    std::ofstream(path_) << body;
  }
  ~TempConfig() { fs::remove(path_); }
  std::string path() const { return path_.string(); }

private:
  static int &counter() {
    static int c = 0;
    return c;
  }
  fs::path path_;
};

int exit_code(const std::string &cmd, const Options &o, std::string *err = nullptr) {
  std::ostringstream log;
  std::ostringstream e;
  const int code = cli::execute(cmd, o, log, e);
  if (err) {
    *err = e.str();
  }
  return code;
}

const char *kRunningConstruction =
    R"("construction": {"h1": 1, "stages": [{"r": 2, "s": [0, 1]},
                                           {"r": 3, "s": [0, 6, 15]}]})";

} // namespace

TEST(CliBuild, RunningExampleStageTable) {
  const CommandResult r =
      cli::run_command("build", options(config_path("running_example.json")));
  const std::string &stages = file(r, "stages.csv");
  EXPECT_TRUE(has_line_starting(stages, "1,1,"));
  EXPECT_TRUE(has_line_starting(stages, "2,3,"));
  EXPECT_TRUE(has_line_starting(stages, "3,30,"));
  const auto meta = nlohmann::json::parse(file(r, "stages.csv.meta.json"));
  EXPECT_EQ(meta["command"], "build");
  EXPECT_EQ(meta["tool_version"], cli::kToolVersion);
  EXPECT_EQ(meta["config_hash"].get<std::string>().size(), 16u);
}

TEST(CliBuild, GeneratorLedgerHoldsKeyInequality) {
  const CommandResult r =
      cli::run_command("build", options(config_path("optimal_sidon.json")));
  const auto rows = lines(file(r, "psi_ledger.csv"));
  ASSERT_GT(rows.size(), 1u);
  const auto header = split_row(rows[0]);
  const auto col = std::find(header.begin(), header.end(),
                             "sqrt_h_over_psi_le_1") -
                   header.begin();
  ASSERT_LT(static_cast<std::size_t>(col), header.size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(split_row(rows[i])[static_cast<std::size_t>(col)], "true")
        << rows[i];
  }
}

TEST(CliCorr, ExactRowAtShiftThree) {
  const CommandResult r =
      cli::run_command("corr", options(config_path("running_example.json")));
  EXPECT_TRUE(has_line_starting(file(r, "corr.csv"), "3,1,2,0.5,1,2,0.5,"));
}

TEST(CliDeterminism, RepeatedRunsMatch) {
  for (const std::string cmd : {"build", "corr", "poisson", "flow"}) {
    const Options o = options(config_path("running_example.json"));
    const CommandResult a = cli::run_command(cmd, o);
    const CommandResult b = cli::run_command(cmd, o);
    ASSERT_EQ(a.files.size(), b.files.size()) << cmd;
    for (std::size_t i = 0; i < a.files.size(); ++i) {
      EXPECT_EQ(a.files[i].name, b.files[i].name);
      EXPECT_EQ(a.files[i].content, b.files[i].content) << a.files[i].name;
    }
  }
}

TEST(CliDeterminism, SeedChangesMonteCarlo) {
  Options o = options(config_path("running_example.json"));
  const std::string first = file(cli::run_command("flow", o), "flow.csv");
  o.seed = 8;
  EXPECT_NE(first, file(cli::run_command("flow", o), "flow.csv"));
}

TEST(CliDecay, WarnsOnPsiMismatch) {
  const TempConfig cfg(R"({
    "construction": {"generator": {"type": "optimal-sidon",
                                   "psi": {"kind": "power", "alpha": "2/5"},
                                   "numStages": 3}},
    "decay": {"psi": {"kind": "power", "alpha": "1/4"}, "a": {"stage": 1, "full": true},
              "m": [2, 3]}
  })");
  const CommandResult r = cli::run_command("decay", options(cfg.path()));
  const auto summary = nlohmann::json::parse(file(r, "decay_summary.json"));
  EXPECT_FALSE(summary["warnings"].empty());
}

TEST(CliErrors, ExitCodes) {
  std::string err;
  EXPECT_EQ(exit_code("build", options("/nonexistent/config.json"), &err), 2);
  EXPECT_EQ(nlohmann::json::parse(err)["code"], 2);

  const TempConfig unknown(std::string("{") + kRunningConstruction +
                           R"(, "colour": 1})");
  EXPECT_EQ(exit_code("build", options(unknown.path()), &err), 2);
  EXPECT_NE(err.find("colour"), std::string::npos);

  const TempConfig noSeed(std::string("{") + kRunningConstruction +
                          R"(, "flow": {"t": 1, "n": [0]}})");
  EXPECT_EQ(exit_code("flow", options(noSeed.path()), &err), 2);
  EXPECT_NE(err.find("seed"), std::string::npos);

  const TempConfig deep(std::string("{") + kRunningConstruction +
                        R"(, "corr": {"a": {"stage": 2, "full": true}, "m": [30]}})");
  EXPECT_EQ(exit_code("corr", options(deep.path()), &err), 3);
  const auto j = nlohmann::json::parse(err);
  EXPECT_EQ(j["code"], 3);
  EXPECT_TRUE(j["context"].contains("required_stage"));

  Options zeroEps = options(config_path("running_example.json"));
  zeroEps.epsilonNum = "0";
  EXPECT_EQ(exit_code("corr", zeroEps), 2);

  const TempConfig badSpec(R"({"construction": {"h1": 1, "stages": [{"r": 1, "s": [0]}]}})");
  EXPECT_EQ(exit_code("build", options(badSpec.path()), &err), 2);
}

TEST(CliErrors, FailedRunWritesNothing) {
  const fs::path out = fs::temp_directory_path() / "rankone_cli_nothing";
  fs::remove_all(out);
  const TempConfig deep(std::string("{") + kRunningConstruction +
                        R"(, "corr": {"a": {"stage": 2, "full": true}, "m": [3, 30]}})");
  Options o = options(deep.path());
  o.out = out.string();
  EXPECT_EQ(exit_code("corr", o), 3);
  EXPECT_FALSE(fs::exists(out));
}
