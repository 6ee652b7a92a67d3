#pragma once

#include "panograph/metrics.hpp"
#include "panograph/pipeline.hpp"
#include "panograph/scene_io.hpp"
#include "panograph/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace panograph {

// Flat `key = value` settings. Lines starting with '#' are comments. Every key
// is typed; unknown keys and unparsable values raise ConfigError.
struct PipelineConfig {
  // Class table file; empty selects the built-in synthetic table.
  std::filesystem::path class_table;

  // Synthesis
  std::size_t synth_count = 10;
  std::uint64_t synth_seed = 0;
  bool synth_crowding = false;

  // Clustering
  std::string cluster_method = "hdbscan";
  std::size_t hdbscan_min_cluster_size = 10;
  std::size_t hdbscan_min_samples = 5;
  double dbscan_eps = 0.5;
  std::size_t dbscan_min_points = 5;
  double meanshift_bandwidth = 1.5;
  bool cluster_per_class = true;

  // Model and merging
  double voxel_size = 0.1;
  std::size_t normal_neighbors = 16;
  double tau = 0.5;
  bool assign_noise_to_nearest = false;

  // Optimisation
  double learning_rate = 0.001;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  bool class_weights = false;

  // Evaluation
  int ignore_class = 0;  // negative: no ignore class
  std::size_t min_stuff_points = 0;

  static PipelineConfig parse(const std::string& text);
  static PipelineConfig load(const std::filesystem::path& path);
  // Applies one `key=value` assignment.
  void set(const std::string& key, const std::string& value);
  // Range checks; parse() calls this. Throws ConfigError.
  void validate() const;
  std::string to_text() const;
  static std::vector<std::string> keys();

  ClassTable classes() const;
  OversegmentParams oversegment() const;
  PipelineOptions pipeline() const;
  Hyperparameters hyperparameters() const;
  EvalOptions eval() const;
};

}  // namespace panograph
