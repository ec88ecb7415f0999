#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli.hpp"

int main(int argc, char** argv) {
  namespace cli = iidwb::cli;
  CLI::App app{"iidwb: parent identification benchmarks on random linear Gaussian SCMs"};
  app.require_subcommand(1);

  std::string config = "iidwb.conf";
  std::string out_dir = "results";
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  bool force = false;
  std::string csv;

  auto* init = app.add_subcommand("init", "write a commented default config");
  init->add_option("--config", config, "config file to create")->capture_default_str();
  init->add_flag("--force", force, "overwrite an existing file");

  auto* run = app.add_subcommand("run", "run the sweep described by a config");
  run->add_option("--config", config, "config file")->required();
  run->add_option("--out", out_dir, "output directory")->capture_default_str();
  run->add_option("--seed", seed, "master seed (overrides WORKBENCH_SEED and the config)");
  run->add_option("--threads", threads, "worker threads, 0 = all cores")->capture_default_str();

  auto* report = app.add_subcommand("report", "render the summary table from a records CSV");
  report->add_option("csv", csv, "records.csv written by run")->required();

  auto* demo = app.add_subcommand("demo", "run ICP on the fixed four-node model");
  demo->add_option("--out", out_dir, "output directory")->capture_default_str();
  demo->add_option("--seed", seed, "master seed");
  demo->add_option("--threads", threads, "worker threads, 0 = all cores");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (*init) return cli::cli_init(config, force, std::cout, std::cerr);
    if (*run) return cli::cli_run(config, out_dir, seed, threads, std::cout, std::cerr);
    if (*report) return cli::cli_report(csv, std::cout, std::cerr);
    if (*demo) return cli::cli_demo(out_dir, seed, threads, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitUsage;
  }
  return cli::kExitUsage;
}
