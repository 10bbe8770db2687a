// floodopt: flood simulation and dam placement from a TOML run configuration.
//
//   floodopt simulate --config run.toml [--out DIR] [--threads N] [--quiet]
//   floodopt optimize --config run.toml ...
//   floodopt map      --config run.toml ...
//   floodopt validate --config run.toml ...
//
// Exit codes: 0 ok, 2 config/usage, 3 io/format, 4 numeric, 5 domain/geometry.

#include "floodopt/commands.hpp"
#include "floodopt/config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>

namespace {

struct Common {
  std::string config;
  std::string out;
  int threads = 1;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Run configuration (TOML)")->required();
  cmd->add_option("--out", c.out, "Output directory (overrides run.out_dir)");
  cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--quiet", c.quiet, "Only print errors");
}

int run(const std::string& command, const Common& c) {
  using namespace floodopt;
  RunConfig config = load_config(c.config);
  if (!c.out.empty()) config.out_dir = std::filesystem::absolute(c.out).lexically_normal();
  std::ostream* log = c.quiet ? nullptr : &std::cout;

  if (command == "validate") {
    build_scenario(config);
    if (!c.out.empty()) {
      std::filesystem::create_directories(config.out_dir);
      write_text(config.out_dir / "config.toml", dump_config(config));
    }
    if (log) *log << dump_config(config);
    return 0;
  }
  if (command == "simulate") {
    const SimulateResult r = run_simulate(config, config.out_dir, c.threads, log);
    if (log) *log << r.balance.report();
  } else if (command == "optimize") {
    const OptimizeResult r = run_optimize(config, config.out_dir, c.threads, log);
    if (log) *log << r.summary();
  } else if (command == "map") {
    run_map(config, config.out_dir, c.threads, log);
  }
  if (log) *log << "wrote " << config.out_dir.string() << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flood simulation and dam placement optimization", "floodopt"};
  app.require_subcommand(1);
  Common common;
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "Run one flood simulation; write the gauge record, mass balance and snapshots"},
      {"optimize", "Gradient ascent of the branch volume over dam positions"},
      {"map", "Sample the branch volume on a lattice of dam positions"},
      {"validate", "Check a configuration and print its normalized form"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), common);

  if (argc > 1 && argv[1][0] != '-' &&
      std::none_of(std::begin(commands), std::end(commands),
                   [&](const auto& c) { return std::string(c.first) == argv[1]; })) {
    std::cerr << "error: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, common);
  } catch (const floodopt::Error& e) {
    std::cerr << "error [" << floodopt::to_string(e.kind()) << "]: " << e.what() << "\n";
    return floodopt::exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error [io]: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
