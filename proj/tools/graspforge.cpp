#include "graspforge/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace graspforge;
  CLI::App app{"graspforge: grasp synthesis and demonstration generation"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  std::optional<std::string> out;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config, "run configuration (JSON)")->required();
    cmd->add_option("--seed", seed, "base seed (overrides the config)");
    cmd->add_option("--strategy", strategy, "Pinch2 | Tripod3 | WholeHand | Bimanual | auto");
    cmd->add_option("--out", out, "output directory (overrides the config)");
    cmd->add_option("--jobs", opts.jobs, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* synth = app.add_subcommand("synthesize", "optimize a batch of candidate grasps");
  add_common(synth);
  auto* select = app.add_subcommand("select", "filter the batch and pick the preferred grasp");
  add_common(select);
  std::string batch_file;
  select->add_option("--batch", batch_file, "batch file (default <out>/batch.json)");
  auto* demo = app.add_subcommand("demo", "plan and validate a demonstration, append to dataset");
  add_common(demo);
  std::string selection_file;
  demo->add_option("--grasp", selection_file, "selection file (default <out>/selection.json)");

  auto* stats = app.add_subcommand("stats", "summarize a dataset directory");
  std::string dataset_dir;
  stats->add_option("dataset", dataset_dir, "dataset directory")->required();

  auto* inspect = app.add_subcommand("inspect-mesh", "print mesh properties");
  std::string mesh_file;
  std::optional<double> mass;
  inspect->add_option("mesh", mesh_file, "OBJ file")->required();
  inspect->add_option("--mass", mass, "object mass in kg for the strategy hint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  opts.overrides.seed = seed;
  opts.overrides.strategy = strategy;
  if (out) opts.overrides.out = *out;
  if (!batch_file.empty()) opts.batch = batch_file;
  if (!selection_file.empty()) opts.selection = selection_file;

  if (*synth) return cmd_synthesize(opts, std::cout, std::cerr);
  if (*select) return cmd_select(opts, std::cout, std::cerr);
  if (*demo) return cmd_demo(opts, std::cout, std::cerr);
  if (*stats) return cmd_stats(dataset_dir, std::cout, std::cerr);
  if (*inspect) return cmd_inspect_mesh(mesh_file, mass, std::cout, std::cerr);
  return kExitConfig;
}
