#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "fueter/errors.hpp"
#include "fueter/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for Fueter maps into hyperkähler targets"};
  app.require_subcommand(1);

  std::string config_path, output;
  auto* run = app.add_subcommand("run", "run the experiment named in a config file");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("-o,--output", output, "output directory (overrides experiment.output)");

  app.add_subcommand("list", "list experiments");

  std::string constants_path = "configs/constants.conf";
  auto* cal = app.add_subcommand("calibrate", "recompute the default constants");
  cal->add_option("-o,--output", constants_path, "constants file to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return fueter::run_config_file(config_path, std::cout, std::cerr, output);
    if (app.got_subcommand("list")) {
      for (const auto& e : fueter::experiment_registry()) std::cout << e.name << "  " << e.description << "\n";
      return 0;
    }
    if (cal->parsed()) {
      const std::string text = fueter::calibrate_constants(std::cerr);
      std::ofstream f(constants_path);
      if (!f) throw fueter::InputError("cannot write '" + constants_path + "'");
      f << text;
      std::cout << text;
      return 0;
    }
  } catch (const fueter::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
