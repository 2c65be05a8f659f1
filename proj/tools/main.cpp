// gcsim: run generalization-capacity experiments from config files.
//
//   gcsim run <config> [--seed N] [--workers N] [--out DIR]
//   gcsim validate <config>
//
// Output directory precedence: --out, then $GCSIM_OUT_DIR, then the current
// directory. Exit codes: 0 success, 1 I/O or internal error, 2 invalid
// config, 3 space too large to enumerate.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "experiment.hpp"

namespace {

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCapacity = 3;

void print_diagnostics(const std::string& path, const std::vector<gcsim::cli::Diagnostic>& diags) {
  for (const auto& d : diags) std::cerr << gcsim::cli::format_diagnostic(path, d) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo estimation of generalization capacity"};
  app.set_version_flag("--version", GCSIM_VERSION);
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string out_dir;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Config file")->required();
  run->add_option("--seed", seed, "Master seed (overrides the config)");
  run->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory");

  auto* validate = app.add_subcommand("validate", "List config problems without running");
  validate->add_option("config", config_path, "Config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      const auto diags = gcsim::cli::validate_config(config_path);
      print_diagnostics(config_path, diags);
      if (!diags.empty()) return kExitConfig;
      std::cout << config_path << ": ok\n";
      return 0;
    }

    auto config = gcsim::cli::load_config(config_path);
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    std::filesystem::path dir = ".";
    if (!out_dir.empty()) dir = out_dir;
    else if (const char* env = std::getenv("GCSIM_OUT_DIR"); env && *env) dir = env;

    std::string command = "gcsim run " + config_path + " --seed " + std::to_string(config.seed) + " --workers " +
                          std::to_string(config.workers);
    const auto res = gcsim::cli::run_experiment(config, dir, command);
    std::cout << "wrote " << res.rows << " rows to " << res.csv_path.string() << '\n'
              << "manifest " << res.manifest_path.string() << '\n';
    return 0;
  } catch (const gcsim::cli::ConfigError& e) {
    print_diagnostics(e.path(), e.diagnostics());
    return kExitConfig;
  } catch (const gcsim::capacity_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCapacity;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
