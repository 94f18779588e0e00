#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "fnse/config.hpp"
#include "fnse/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"fnse: stochastic Lagrangian solver for fractal Navier-Stokes equations"};
  app.footer(fnse::config_reference());

  std::string config_path;
  std::string output;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = -1;

  app.add_option("--config", config_path, "run configuration file")->required();
  app.add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--workers", workers, "worker cap (0 = hardware concurrency)");
  app.add_option("--output", output, "output directory (fallback: $FNSE_OUTPUT)");

  CLI11_PARSE(app, argc, argv);

  try {
    fnse::RunConfig cfg = fnse::load_config(config_path);
    if (seed_set) cfg.master_seed = seed;
    if (workers >= 0) cfg.workers = workers;
    if (!output.empty()) {
      cfg.output_dir = output;
    } else if (cfg.output_dir.empty()) {
      if (const char* env = std::getenv("FNSE_OUTPUT")) cfg.output_dir = env;
    }
    const int status = fnse::run(cfg);
    std::cout << (status == 0 ? "all checks passed" : "some checks FAILED") << "\n";
    return status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
