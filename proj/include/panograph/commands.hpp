#pragma once

#include "panograph/config.hpp"
#include "panograph/metrics.hpp"
#include "panograph/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace panograph {

// Dataset layout (SemanticKITTI style):
//   <root>/velodyne/<name>.bin
//   <root>/labels/<name>.label
//   <root>/manifest.json   (written by synth)
//   <root>/classes.txt     (written by synth)
struct DatasetPaths {
  std::filesystem::path root;
  std::filesystem::path bin(const std::string& name) const { return root / "velodyne" / (name + ".bin"); }
  std::filesystem::path label(const std::string& name) const { return root / "labels" / (name + ".label"); }
};

// Sorted frame names (stems of velodyne/*.bin). IoError if the directory is missing.
std::vector<std::string> list_frames(const std::filesystem::path& root);

// A directory of .label files: `dir/labels` when it exists, otherwise `dir`.
std::filesystem::path resolve_label_dir(const std::filesystem::path& dir);

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumerical = 3 };

// Maps an exception thrown by a command to the documented exit code.
int exit_code_for(const std::exception& e);

struct SynthArgs {
  std::filesystem::path out;
  bool force = false;
  std::size_t jobs = 1;
};
// Writes config.synth_count frames; frame i uses seed mix_seed(synth_seed, i).
void cmd_synth(const PipelineConfig& config, const SynthArgs& args);

struct ClusterArgs {
  std::filesystem::path data;
  std::filesystem::path out;  // receives <name>.label with instance = cluster id + 1
  std::size_t jobs = 1;
};
void cmd_cluster(const PipelineConfig& config, const ClusterArgs& args);

struct TrainArgs {
  std::filesystem::path data;
  std::filesystem::path checkpoint;
  std::filesystem::path log;  // CSV: epoch,mean_loss,edge_accuracy
  bool resume = false;
  std::size_t jobs = 1;
};
std::vector<EpochStats> cmd_train(const PipelineConfig& config, const TrainArgs& args);

struct InferArgs {
  std::filesystem::path data;
  std::filesystem::path checkpoint;
  std::filesystem::path out;       // receives labels/<name>.label
  std::string semantics = "gt";    // "gt" or a directory of predicted .label files
  bool dump_adjacency = false;     // also write adjacency/<name>.json
  std::size_t jobs = 1;
};
void cmd_infer(const PipelineConfig& config, const InferArgs& args);

struct EvalArgs {
  std::filesystem::path pred;
  std::filesystem::path gt;
  std::filesystem::path out;  // writes <out>.json and <out>.txt
  bool strict = false;
};
PQReport cmd_eval(const PipelineConfig& config, const EvalArgs& args);

struct AblationRow {
  std::string method;
  PQReport report;
};

struct AblateArgs {
  std::filesystem::path data;
  std::filesystem::path checkpoint;
  std::filesystem::path out;  // writes <out>.json and <out>.txt
  std::size_t jobs = 1;
};
// DBSCAN, HDBSCAN and mean shift clusters used directly as instances, and the
// full graph merge, evaluated on the same frames with ground-truth semantics.
std::vector<AblationRow> cmd_ablate(const PipelineConfig& config, const AblateArgs& args);

// Rows with the columns PQ, PQ^Th, RQ^Th, SQ^Th in percent.
std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace panograph
