// Command-line front end for the predissociation laboratory.
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <predissoc/cli.hpp>

int main(int argc, char** argv) {
  CLI::App app{"predissoc: semiclassical predissociation laboratory"};
  app.require_subcommand(0, 0);

  std::string subcommand;
  std::string config_path;
  std::string out_dir;
  std::string h_csv;
  int jobs = 0;
  app.add_option("subcommand", subcommand,
                 "one of: validate-model, eigen, resonance, kernels, identity, survive, report")
      ->required();
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_dir, "output directory for CSV files and manifests");
  app.add_option("--h-list", h_csv, "comma-separated h values, strictly decreasing");
  app.add_option("--jobs", jobs, "maximum concurrent h-sweep tasks");

  CLI11_PARSE(app, argc, argv);

  predissoc::RunConfig config;
  try {
    if (!config_path.empty()) {
      nlohmann::json j;
      std::ifstream is(config_path);
      if (!is) throw std::runtime_error("cannot open config file: " + config_path);
      is >> j;
      config = predissoc::config_from_json(j);
    }
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (jobs > 0) config.jobs = jobs;
    if (!h_csv.empty()) {
      config.h_list.clear();
      std::istringstream ss(h_csv);
      for (std::string tok; std::getline(ss, tok, ',');)
        config.h_list.push_back(std::stod(tok));
    }
    predissoc::validate_config(config);
  } catch (const std::exception& e) {
    std::cerr << "predissoc: " << e.what() << "\n";
    return 2;
  }

  return predissoc::run(subcommand, config);
}
