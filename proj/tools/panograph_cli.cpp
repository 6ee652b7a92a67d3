#include "panograph/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

using namespace panograph;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::size_t jobs = 1;
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("-c,--config", common.config_path, "Config file (key = value lines)");
  cmd->add_option("--set", common.overrides, "Override a config key, e.g. --set epochs=5")->type_name("KEY=VALUE");
  cmd->add_option("-j,--jobs", common.jobs, "Worker threads for frame-parallel stages")->check(CLI::PositiveNumber);
}

PipelineConfig load_config(const Common& common) {
  PipelineConfig config = common.config_path.empty() ? PipelineConfig{} : PipelineConfig::load(common.config_path);
  for (const auto& o : common.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + o + "'");
    config.set(o.substr(0, eq), o.substr(eq + 1));
  }
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-based panoptic segmentation of LiDAR point clouds"};
  app.require_subcommand(1);
  Common common;

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labelled dataset");
  add_common(synth_cmd, common);
  synth_cmd->add_option("-o,--out", synth.out, "Output dataset directory")->required();
  synth_cmd->add_flag("--force", synth.force, "Write into a non-empty directory");

  ClusterArgs cluster;
  auto* cluster_cmd = app.add_subcommand("cluster", "Over-segment the thing points of every frame");
  add_common(cluster_cmd, common);
  cluster_cmd->add_option("-d,--data", cluster.data, "Dataset directory")->required();
  cluster_cmd->add_option("-o,--out", cluster.out, "Output directory for cluster labels")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train the edge classifier");
  add_common(train_cmd, common);
  train_cmd->add_option("-d,--data", train.data, "Training dataset directory")->required();
  train_cmd->add_option("--checkpoint", train.checkpoint, "Checkpoint file (rewritten every epoch)")->required();
  train_cmd->add_option("--log", train.log, "CSV loss log");
  train_cmd->add_flag("--resume", train.resume, "Continue from the checkpoint");

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "Predict panoptic labels");
  add_common(infer_cmd, common);
  infer_cmd->add_option("-d,--data", infer.data, "Dataset directory")->required();
  infer_cmd->add_option("--checkpoint", infer.checkpoint, "Trained checkpoint")->required();
  infer_cmd->add_option("-o,--out", infer.out, "Output directory")->required();
  infer_cmd->add_option("--semantics", infer.semantics, "'gt' or a directory of predicted .label files")
      ->capture_default_str();
  infer_cmd->add_flag("--dump-adjacency", infer.dump_adjacency, "Write each frame's adjacency matrix as JSON");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Compute PQ/SQ/RQ/mIoU");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--pred", eval.pred, "Predicted labels directory")->required();
  eval_cmd->add_option("--gt", eval.gt, "Ground-truth labels directory")->required();
  eval_cmd->add_option("-o,--out", eval.out, "Report path prefix (.json and .txt)");
  eval_cmd->add_flag("--strict", eval.strict, "Fail when a frame has no counterpart");

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare clustering baselines with graph merging");
  add_common(ablate_cmd, common);
  ablate_cmd->add_option("-d,--data", ablate.data, "Evaluation dataset directory")->required();
  ablate_cmd->add_option("--checkpoint", ablate.checkpoint, "Trained checkpoint")->required();
  ablate_cmd->add_option("-o,--out", ablate.out, "Report path prefix (.json and .txt)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const PipelineConfig config = load_config(common);
    if (*synth_cmd) {
      synth.jobs = common.jobs;
      cmd_synth(config, synth);
      std::cout << "wrote " << config.synth_count << " frames to " << synth.out.string() << "\n";
    } else if (*cluster_cmd) {
      cluster.jobs = common.jobs;
      cmd_cluster(config, cluster);
    } else if (*train_cmd) {
      train.jobs = common.jobs;
      for (const auto& e : cmd_train(config, train)) {
        std::cout << "epoch " << e.epoch << "  loss " << e.mean_loss << "  edge accuracy " << e.edge_accuracy << "\n";
      }
    } else if (*infer_cmd) {
      infer.jobs = common.jobs;
      cmd_infer(config, infer);
    } else if (*eval_cmd) {
      std::cout << report_table({{"pred", cmd_eval(config, eval)}});
    } else if (*ablate_cmd) {
      ablate.jobs = common.jobs;
      std::cout << ablation_table(cmd_ablate(config, ablate));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitOk;
}
