#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "mfgp/errors.hpp"
#include "mfgp/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kNumerical = 4 };

int run(const std::string& verb, const std::string& config_path,
        std::optional<std::uint64_t> seed, const std::string& out) {
  const mfgp::Task task = mfgp::parse_task(verb);
  mfgp::ExperimentConfig config = mfgp::load_config(config_path, task, seed);
  if (!out.empty()) config.output = out;
  const auto dir = mfgp::run_command(config);
  std::cout << dir.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity Gaussian process regression for guided-wave damage indices"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  for (const char* verb : {"extract-di", "fit-gp", "fit-mfgp", "task1", "task2", "task3",
                           "synth", "reconstruct"}) {
    auto* sub = app.add_subcommand(verb);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--out", out, "Output root directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    return run(verb, config_path, seed, out);
  } catch (const mfgp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const mfgp::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const mfgp::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::out_of_range& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
}
