// Command-line front end: toda_lab <command> --config manifest.json --out dir
#include <iostream>

#include <CLI11.hpp>

#include "toda/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Gradient-flow lab for Liouville and Toda systems on the flat torus"};
  app.require_subcommand(1);
  toda::CliOptions opts;
  unsigned long seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "seed for randomized data")->envname("TODA_SEED");
  app.add_option("--config", opts.config, "manifest JSON")->envname("TODA_CONFIG");
  app.add_option("--out", opts.out, "output directory")->envname("TODA_OUT");
  app.add_option("--workers", opts.workers, "parallel sub-runs for scan")
      ->envname("TODA_WORKERS")
      ->check(CLI::PositiveNumber);
  app.add_option("--checkpoint-every", opts.checkpoint_every, "checkpoint interval in flow time")
      ->envname("TODA_CHECKPOINT_EVERY");
  app.add_option("--resume", opts.resume, "resume a flow from this checkpoint")->envname("TODA_RESUME");
  app.fallthrough();
  for (const char* name : {"flow", "solve", "green", "testfn", "classify", "scan"})
    app.add_subcommand(name);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : toda::kExitConfig;
  }
  if (seed_opt->count() > 0) opts.seed = seed;
  return toda::run_command(app.get_subcommands().front()->get_name(), opts, std::cout, std::cerr);
}
