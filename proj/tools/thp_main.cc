#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "thp/experiments.h"

namespace {

// One machine-readable line on stderr.
int Fail(const std::string& category, const std::string& key, const std::string& message,
         int code) {
  nlohmann::ordered_json line;
  line["error"] = category;
  if (!key.empty()) line["key"] = key;
  line["message"] = message;
  std::cerr << line.dump() << std::endl;
  return code;
}

thp::ExperimentSpec LoadValidated(const std::string& path, std::optional<std::uint64_t> seed) {
  thp::ExperimentSpec spec = thp::load_spec(path);
  if (seed) spec.seed = *seed;
  spec.validate();
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust THP transceiver experiments"};
  app.require_subcommand(1);

  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::string output_dir = ".";

  CLI::App* run = app.add_subcommand("run", "Run an experiment and write its CSV");
  run->add_option("--spec", spec_path, "Experiment spec file")->required();
  run->add_option("--seed", seed, "Override experiment.seed");
  run->add_option("--output-dir", output_dir, "Directory for the output files");

  CLI::App* validate = app.add_subcommand("validate", "Check a spec file");
  validate->add_option("--spec", spec_path, "Experiment spec file")->required();
  validate->add_option("--seed", seed, "Override experiment.seed");

  app.add_subcommand("list-experiments", "List the experiment kinds");

  if (argc > 1 && argv[1][0] != '-' && app.get_subcommand_no_throw(argv[1]) == nullptr) {
    return Fail("usage", "", std::string("unknown subcommand '") + argv[1] + "'", 2);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return Fail("usage", "", e.what(), 2);
  }

  try {
    if (app.got_subcommand("list-experiments")) {
      for (thp::ExperimentKind kind : thp::all_experiment_kinds()) {
        std::cout << thp::to_string(kind) << "\t" << thp::describe(kind) << "\n";
      }
      return 0;
    }
    if (app.got_subcommand("validate")) {
      const thp::ExperimentSpec spec = LoadValidated(spec_path, seed);
      nlohmann::ordered_json ok;
      ok["status"] = "ok";
      ok["kind"] = thp::to_string(spec.kind);
      ok["name"] = spec.name;
      std::cout << ok.dump() << std::endl;
      return 0;
    }

    const thp::ExperimentSpec spec = LoadValidated(spec_path, seed);
    const thp::ResultTable table = thp::run_experiment(spec);
    std::filesystem::create_directories(output_dir);
    const std::filesystem::path base = std::filesystem::path(output_dir) / spec.name;
    nlohmann::ordered_json ok;
    ok["status"] = "ok";
    {
      const std::string csv = base.string() + ".csv";
      std::ofstream out(csv, std::ios::binary);
      thp::write_csv(spec, table, out);
      if (!out) return Fail("io", "", "cannot write '" + csv + "'", 3);
      ok["csv"] = csv;
    }
    if (spec.json) {
      const std::string json = base.string() + ".json";
      std::ofstream out(json, std::ios::binary);
      thp::write_json(spec, table, out);
      if (!out) return Fail("io", "", "cannot write '" + json + "'", 3);
      ok["json"] = json;
    }
    std::cout << ok.dump() << std::endl;
    return 0;
  } catch (const thp::SpecError& e) {
    return Fail("spec", e.key(), e.what(), 2);
  } catch (const std::exception& e) {
    return Fail("runtime", "", e.what(), 1);
  }
}
