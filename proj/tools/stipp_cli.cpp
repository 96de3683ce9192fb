// Copyright 2026 The stipp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line entry point: run, ingest, synth, oracle.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stipp/harness/config.hpp"
#include "stipp/harness/data.hpp"
#include "stipp/harness/oracle_check.hpp"
#include "stipp/harness/scenario.hpp"

namespace {

using namespace stipp;
using namespace stipp::harness;

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out_dir) {
  ScenarioConfig cfg = load_config(config);
  if (seed) cfg.seed = *seed;
  const RunArtifacts art = run_scenario(cfg, &std::cerr);
  write_artifacts(art, out_dir);
  const auto& last = art.uncertainty.back().box;
  std::cout << "steps: " << art.connectivity.size() << "\n"
            << "always_connected: " << (art.always_connected() ? "yes" : "no") << "\n"
            << "consensus_failures: " << art.consensus_failures() << "\n"
            << "median_std_step1: " << fmt(art.uncertainty.front().box.median) << "\n"
            << "median_std_last: " << fmt(last.median) << "\n"
            << "artifacts: " << out_dir << "\n";
  return 0;
}

int cmd_ingest(const std::string& csv, bool summary) {
  const IngestResult r = ingest_csv(csv);
  if (summary) {
    write_summary(std::cout, summarize(r));
  } else {
    std::cout << r.data.size() << " records from " << r.sensor_names.size() << " sensors\n";
  }
  return 0;
}

int cmd_synth(const std::string& config, const std::string& out) {
  const ScenarioConfig cfg = load_config(config);
  const IngestResult r = synth_field(cfg.synth, cfg.workspace, cfg.synth.seed.value_or(cfg.seed));
  std::ofstream os(out, std::ios::binary);
  write_csv(os, r);
  os.close();
  if (!os) throw Error("cannot write " + out);
  std::cout << "wrote " << r.data.size() << " records to " << out << "\n";
  return 0;
}

int cmd_oracle(const std::string& config, int instances) {
  const ScenarioConfig cfg = load_config(config);
  const OracleCheckResult res = run_oracle_check(cfg, instances);
  for (int c = 0; c < res.instances; ++c) {
    const auto& r = res.results[c];
    if (!r.agree()) {
      std::cout << "instance " << c << ": selections differ over " << r.num_paths << " paths\n";
    }
  }
  std::cout << "oracle agreement: " << res.agreements << "/" << res.instances << "\n";
  return res.agreements == res.instances ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed informative path planning simulator"};
  app.require_subcommand(1);

  std::string run_config, run_out = "out";
  std::optional<std::uint64_t> run_seed;
  auto* run = app.add_subcommand("run", "run a scenario and write artifacts");
  run->add_option("--config", run_config, "scenario INI file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", run_seed, "override the scenario seed");
  run->add_option("--out", run_out, "output directory")->capture_default_str();

  std::string ingest_path;
  bool ingest_summary = false;
  auto* ingest = app.add_subcommand("ingest", "validate a sensor CSV");
  ingest->add_option("--csv", ingest_path, "dataset CSV")->required()->check(CLI::ExistingFile);
  ingest->add_flag("--summary", ingest_summary, "print dataset statistics");

  std::string synth_config, synth_out;
  auto* synth = app.add_subcommand("synth", "sample a synthetic sensor dataset");
  synth->add_option("--config", synth_config, "scenario INI file")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "output CSV")->required();

  std::string oracle_config;
  int oracle_instances = 50;
  auto* oracle = app.add_subcommand("oracle", "check path-oracle agreement on random instances");
  oracle->add_option("--config", oracle_config, "scenario INI file")->required()->check(CLI::ExistingFile);
  oracle->add_option("--instances", oracle_instances, "number of instances")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_config, run_seed, run_out);
    if (*ingest) return cmd_ingest(ingest_path, ingest_summary);
    if (*synth) return cmd_synth(synth_config, synth_out);
    if (*oracle) return cmd_oracle(oracle_config, oracle_instances);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
