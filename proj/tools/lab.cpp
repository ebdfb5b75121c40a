// Experiment CLI. `lab run <config>` executes the batch described by a flat
// key = value config file and writes CSV/JSON artifacts; `lab report
// <paths...>` merges summary files from earlier runs.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lab/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"spectral experiment lab"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "execute the experiments described by a config file");
  std::string config_path;
  run->add_option("config", config_path, "flat key = value config file")->required();

  auto* report = app.add_subcommand("report", "merge run summaries into one table");
  std::vector<std::string> paths;
  report->add_option("paths", paths, "summary.json files from previous runs")->required();
  bool as_json = false;
  report->add_flag("--json", as_json, "emit the merge as a single JSON document");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) {
      const lab::ExperimentConfig cfg = lab::load_config(config_path);
      const lab::RunReport rep = lab::run_experiments(cfg);
      const auto files = lab::write_run(cfg, rep);
      for (const auto& e : rep.experiments)
        for (const auto& cr : e.criteria)
          std::cout << e.experiment << "." << cr.name << ": " << (cr.pass ? "pass" : "FAIL")
                    << " (" << cr.value << ")\n";
      for (const auto& f : files) std::cout << "wrote " << f << "\n";
      return rep.pass() ? 0 : 1;
    }
    const lab::MergedReports merged = lab::merge_report_files(paths);
    if (as_json)
      std::cout << merged.json << "\n";
    else
      std::cout << lab::report_table(merged.rows);
    return 0;
  } catch (const lab::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
