#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hodo_cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace hodo::cli;
  CLI::App app{"Hodograph solutions of the pressureless Euler equation with a linear force"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  int threads = 1;
  std::optional<std::uint64_t> seed;

  for (const char* name : {"solve", "blowup", "period", "compare", "coriolis3d"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "Run configuration (JSON)")->required();
    sub->add_option("--out", out_path, "Output file (default: standard output)");
    sub->add_option("--threads", threads, "Worker threads for grid work")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Overrides task.seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig config;
  try {
    config = load_config(config_path, command);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  const CommandOutput result = run(config, RunOptions{threads, seed});
  if (!result.body.empty()) {
    if (out_path.empty()) {
      std::cout << result.body;
    } else {
      std::ofstream out(out_path, std::ios::binary);
      if (!out) {
        std::cerr << "cannot write '" << out_path << "'\n";
        return kConfigError;
      }
      out << result.body;
    }
  }
  // With --out the terminal gets the summary; otherwise stdout carries the body.
  (out_path.empty() ? std::cerr : std::cout) << result.summary;
  return result.exit_code;
}
