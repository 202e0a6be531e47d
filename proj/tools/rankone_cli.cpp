#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"

int main(int argc, char **argv) {
  using rankone::cli::Options;

  CLI::App app{"Rank-one cutting-and-stacking experiments"};
  app.set_version_flag("--version", rankone::cli::kToolVersion);
  app.require_subcommand(1);

  Options opt;
  std::string selected;
  for (const auto &name : rankone::cli::command_names()) {
    CLI::App *sub = app.add_subcommand(name);
    sub->add_option("--config", opt.config, "JSON experiment config")
        ->required();
    sub->add_option("--out", opt.out, "output directory")
        ->capture_default_str();
    sub->add_option("--seed", opt.seed, "seed for stochastic work");
    sub->add_option("--threads", opt.threads, "worker threads");
    sub->add_option("--depth", opt.depth, "deepest stage to resolve");
    sub->add_option("--epsilon-num", opt.epsilonNum, "escape tolerance numerator");
    sub->add_option("--epsilon-den", opt.epsilonDen,
                    "escape tolerance denominator");
    sub->callback([&selected, name] { selected = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    nlohmann::json err = {{"code", 2},
                          {"module", "cli"},
                          {"message", e.what()},
                          {"context", {{"argv", "usage"}}}};
    std::cerr << err.dump() << "\n";
    return 2;
  }
  return rankone::cli::execute(selected, opt, std::cout, std::cerr);
}
