// Command-line front end for the market simulator and the scenario-similarity
// toolkit. Each subcommand builds an experiment manifest, runs the pipeline,
// and writes its CSV artifacts plus a summary into the output directory.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mktsim/experiments.hpp"

namespace mex = mktsim::experiments;

namespace {

struct CommonOptions {
  std::vector<std::string> scenarios;
  std::string seeds{"1"};
  int episodes{0};
  std::string out{"out"};
  bool full_scale{false};
  std::vector<std::string> library;
  std::size_t min_tuples{1000};
};

std::vector<std::uint64_t> parse_seeds(const std::string& csv_list) {
  std::vector<std::uint64_t> seeds;
  std::string token;
  std::stringstream in(csv_list);
  while (std::getline(in, token, ',')) {
    if (!token.empty()) seeds.push_back(std::stoull(token));
  }
  if (seeds.empty()) throw CLI::ValidationError("--seeds", "no seeds given");
  return seeds;
}

void add_common(CLI::App* cmd, CommonOptions& opt, bool needs_library) {
  cmd->add_option("--scenario", opt.scenarios, "Scenario file (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seeds", opt.seeds, "Comma-separated seed list (default 1)");
  cmd->add_option("--episodes", opt.episodes, "Episodes per run (0 = per-verb default)");
  cmd->add_option("--out", opt.out, "Output directory");
  cmd->add_flag("--full-scale", opt.full_scale,
                "Run the configured agent counts and full session instead of the "
                "quarter-size two-hour desk scale");
  if (needs_library) {
    cmd->add_option("--library", opt.library, "Trained q-table CSV (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
  }
}

mex::Manifest to_manifest(mex::Kind kind, const CommonOptions& opt) {
  mex::Manifest m;
  m.kind = kind;
  m.scenario_files = opt.scenarios;
  m.seeds = parse_seeds(opt.seeds);
  m.episodes = opt.episodes;
  m.out_dir = opt.out;
  m.full_scale = opt.full_scale;
  m.library_files = opt.library;
  m.min_tuples = opt.min_tuples;
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Limit-order-book market simulator with a tabular RL trader and "
               "scenario-similarity metrics"};
  app.require_subcommand(1);

  CommonOptions simulate_opt, train_opt, sf_opt, rbm_opt, gain_opt, prq_opt;
  std::string summarize_dir;

  add_common(app.add_subcommand("simulate", "Run sessions and dump trade/quote/tuple tapes"),
             simulate_opt, false);
  add_common(app.add_subcommand("train", "Train the tabular trader over many sessions"),
             train_opt, false);
  add_common(app.add_subcommand("sf-metrics",
                                "Return-distribution distances between scenarios"),
             sf_opt, false);
  auto* rbm_cmd = app.add_subcommand(
      "rbm-metrics", "Reconstruction-error distances between scenarios");
  add_common(rbm_cmd, rbm_opt, false);
  rbm_cmd->add_option("--min-tuples", rbm_opt.min_tuples,
                      "Minimum experience tuples required per scenario");
  add_common(app.add_subcommand("reuse-gain",
                                "Score library policies on a target scenario"),
             gain_opt, true);
  add_common(app.add_subcommand("prq", "Policy-reuse learning against a library"),
             prq_opt, true);
  app.add_subcommand("summarize", "Rebuild summary.txt from an output directory")
      ->add_option("--out", summarize_dir, "Output directory to summarize")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "summarize") {
      const std::string summary = mex::summarize(summarize_dir);
      std::ofstream(std::filesystem::path(summarize_dir) / "summary.txt") << summary;
      std::cout << summary;
      return 0;
    }

    mex::Manifest manifest;
    if (name == "simulate") manifest = to_manifest(mex::Kind::simulate, simulate_opt);
    else if (name == "train") manifest = to_manifest(mex::Kind::train, train_opt);
    else if (name == "sf-metrics") manifest = to_manifest(mex::Kind::sf_metrics, sf_opt);
    else if (name == "rbm-metrics") manifest = to_manifest(mex::Kind::rbm_metrics, rbm_opt);
    else if (name == "reuse-gain") manifest = to_manifest(mex::Kind::reuse_gain, gain_opt);
    else if (name == "prq") manifest = to_manifest(mex::Kind::prq, prq_opt);

    const mex::RunArtifacts artifacts = mex::run_experiment(manifest);
    std::cout << "wrote " << artifacts.files.size() << " files under " << manifest.out_dir
              << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
