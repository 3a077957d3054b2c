// Command line front end for the pulsed photon-phonon entanglement model.

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "brillouin/cli.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_path = "out.csv";
  bool reproducible = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> rtol;
  std::optional<int> samples;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "key=value configuration file")
      ->required();
  sub->add_option("--out", args.out_path, "output CSV path");
  sub->add_flag("--reproducible", args.reproducible,
                "omit timestamps so identical runs are byte-identical");
  sub->add_option("--seed", args.seed, "override the RNG seed");
  sub->add_option("--rtol", args.rtol, "override the integrator relative tolerance");
  sub->add_option("--samples", args.samples, "override the number of output samples");
}

brillouin::cli::RunConfig load(const CommonArgs& args) {
  auto cfg = brillouin::cli::parse_config_file(args.config_path);
  cfg.reproducible = args.reproducible;
  if (args.seed) cfg.seed = *args.seed;
  if (args.rtol) cfg.rtol = *args.rtol;
  if (args.samples) cfg.samples = *args.samples;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-state simulator of pulsed Brillouin photon-phonon entanglement"};
  app.require_subcommand(1);

  CommonArgs entangle_args, sweep_temp_args, sweep_k_args, readout_args, validate_args;
  add_common(app.add_subcommand("entangle", "write-phase entanglement time series"),
             entangle_args);
  add_common(app.add_subcommand("sweep-temp", "peak entanglement versus bath temperature"),
             sweep_temp_args);
  add_common(app.add_subcommand("sweep-k", "peak entanglement versus wavenumber"),
             sweep_k_args);
  add_common(app.add_subcommand("readout", "full write/delay/readout protocol"),
             readout_args);
  add_common(app.add_subcommand("validate", "cross-path and oracle consistency checks"),
             validate_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("entangle")) {
      const auto cfg = load(entangle_args);
      return brillouin::cli::cmd_entangle(cfg, entangle_args.out_path);
    }
    if (app.got_subcommand("sweep-temp")) {
      const auto cfg = load(sweep_temp_args);
      return brillouin::cli::cmd_sweep_temp(cfg, sweep_temp_args.out_path);
    }
    if (app.got_subcommand("sweep-k")) {
      const auto cfg = load(sweep_k_args);
      return brillouin::cli::cmd_sweep_k(cfg, sweep_k_args.out_path);
    }
    if (app.got_subcommand("readout")) {
      const auto cfg = load(readout_args);
      return brillouin::cli::cmd_readout(cfg, readout_args.out_path);
    }
    if (app.got_subcommand("validate")) {
      const auto cfg = load(validate_args);
      return brillouin::cli::cmd_validate(cfg, std::cout);
    }
  } catch (const brillouin::cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return brillouin::cli::kExitConfigError;
  } catch (const brillouin::DiscriminantNegative& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return brillouin::cli::kExitNumericalError;
  } catch (const brillouin::StepSizeUnderflow& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return brillouin::cli::kExitNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return brillouin::cli::kExitNumericalError;
  }
  return brillouin::cli::kExitConfigError;
}
