// Command-line front end: experiment configuration in, reproducible CSV/JSON/
// SVG artifacts out. Exit codes: 0 success, 2 parameter rejection,
// 3 numerical failure, 4 I/O or schema error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "ksrapid/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Boundary-feedback rapid stabilization pipeline for the "
               "Kuramoto-Sivashinsky equation"};

  std::string config_path;
  std::string preset;
  std::string out_dir = "out";
  int jobs = 1;
  std::uint64_t seed = 0;

  app.add_option("--config", config_path, "path to a key = value configuration file");
  app.add_option("--preset", preset,
                 "built-in preset (ac1..ac9, headline); overrides --config");
  app.add_option("--out", out_dir, "output directory for artifacts");
  app.add_option("--jobs", jobs, "parallel jobs for sweep runs")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for randomized diagnostics");

  CLI11_PARSE(app, argc, argv);

  try {
    ksrapid::ExperimentConfig cfg;
    if (!preset.empty()) {
      cfg = ksrapid::parse_experiment_config(ksrapid::preset_config_text(preset));
    } else if (!config_path.empty()) {
      cfg = ksrapid::load_experiment_config(config_path);
    } else {
      std::cerr << "schema-error: either --config or --preset is required\n";
      return 4;
    }
    const ksrapid::RunResult r = ksrapid::run_experiment(cfg, out_dir, seed, jobs);
    if (!r.error_category.empty()) std::cerr << r.error_category << "\n";
    for (const auto& name : r.artifacts) std::cout << out_dir << "/" << name << "\n";
    return r.exit_code;
  } catch (const ksrapid::KsError& e) {
    std::cerr << (e.exit_category() == 2   ? "parameter-rejection: "
                  : e.exit_category() == 4 ? "schema-error: "
                                           : "numerical-failure: ")
              << e.what() << "\n";
    return e.exit_category();
  } catch (const std::exception& e) {
    std::cerr << "schema-error: " << e.what() << "\n";
    return 4;
  }
}
