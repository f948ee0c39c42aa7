#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli/config.hpp"
#include "cli/experiments.hpp"
#include "twophase/errors.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace twophase;
  CLI::App app{"Exact loss dynamics and Monte Carlo checks for two-phase optimizers"};
  app.set_version_flag("--version", std::string(cli::kVersion));
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list-experiments", "List experiment names with descriptions");

  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  std::string config_flag, config_positional, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::int64_t> dense_cap;
  run->add_option("--config", config_flag, "Config file path");
  run->add_option("config_path", config_positional, "Config file path (positional form)");
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--seed", seed, "Base seed (overrides the config)");
  run->add_option("--threads", threads, "Worker threads, 0 = auto")->check(CLI::NonNegativeNumber);
  run->add_option("--dense-cap", dense_cap, "Largest D for dense operators")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (list->parsed()) {
    cli::print_catalog(std::cout);
    return 0;
  }

  try {
    if (!config_flag.empty() && !config_positional.empty()) {
      detail::fail("run: give the config either as --config or positionally, not both");
    }
    const std::string path = config_flag.empty() ? config_positional : config_flag;
    if (path.empty()) detail::fail("run: a config file is required (--config <path>)");
    cli::Overrides overrides;
    if (!out_dir.empty()) overrides.out = out_dir;
    overrides.seed = seed;
    overrides.threads = threads;
    overrides.dense_cap = dense_cap;
    const auto cfg = cli::load_config(path, overrides);
    const auto files = cli::run_experiment(cfg);
    std::cout << cfg.experiment << ": wrote";
    for (const auto& f : files) std::cout << ' ' << f;
    std::cout << " to " << cfg.out.string() << '\n';
    return 0;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
