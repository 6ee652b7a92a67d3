#include "panograph/commands.hpp"

#include "panograph/parallel.hpp"
#include "panograph/pipeline.hpp"
#include "panograph/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace panograph {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::set<std::string> label_stems(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("label directory " + dir.string() + " does not exist");
  std::set<std::string> stems;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".label") stems.insert(e.path().stem().string());
  }
  return stems;
}

std::vector<PointCloudFrame> read_dataset(const DatasetPaths& data, const std::vector<std::string>& names,
                                          std::size_t jobs) {
  std::vector<PointCloudFrame> frames(names.size());
  parallel_for(names.size(), jobs, [&](std::size_t i) {
    frames[i] = read_frame(data.bin(names[i]), data.label(names[i]));
  });
  return frames;
}

void check_class_table(const ClassTable& classes) {
  if (classes.num_classes() > kProbabilityWidth) {
    throw ConfigError("class table has " + std::to_string(classes.num_classes()) + " ids, the model supports at most " +
                      std::to_string(kProbabilityWidth));
  }
}

Checkpoint load_compatible_checkpoint(const fs::path& path, const PipelineConfig& config, const ClassTable& classes) {
  Checkpoint c = read_checkpoint(path);
  if (c.num_classes != classes.num_classes()) {
    throw ShapeError("checkpoint was trained with " + std::to_string(c.num_classes) + " classes, the class table has " +
                     std::to_string(classes.num_classes()));
  }
  if (c.voxel_size != config.voxel_size) {
    throw ConfigError("checkpoint voxel_size " + std::to_string(c.voxel_size) + " differs from config voxel_size " +
                      std::to_string(config.voxel_size));
  }
  return c;
}

std::string format_log_row(const EpochStats& s) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%zu,%.9f,%.9f\n", s.epoch, s.mean_loss, s.edge_accuracy);
  return buf;
}

constexpr const char* kLogHeader = "epoch,mean_loss,edge_accuracy\n";

}  // namespace

std::vector<std::string> list_frames(const fs::path& root) {
  const fs::path dir = root / "velodyne";
  if (!fs::is_directory(dir)) throw IoError("dataset " + root.string() + " has no velodyne/ directory");
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".bin") names.push_back(e.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

fs::path resolve_label_dir(const fs::path& dir) {
  return fs::is_directory(dir / "labels") ? dir / "labels" : dir;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const TrainingError*>(&e)) return kExitNumerical;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InputError*>(&e)) return kExitUsage;
  return kExitData;
}

// ---------------------------------------------------------------------------

void cmd_synth(const PipelineConfig& config, const SynthArgs& args) {
  if (args.out.empty()) throw InputError("synth: an output directory is required");
  if (fs::exists(args.out) && !fs::is_empty(args.out)) {
    if (!args.force) throw InputError("output directory " + args.out.string() + " is not empty (use --force)");
    fs::remove_all(args.out / "velodyne");
    fs::remove_all(args.out / "labels");
    fs::remove(args.out / "manifest.json");
  }
  const DatasetPaths data{args.out};
  fs::create_directories(args.out / "velodyne");
  fs::create_directories(args.out / "labels");

  const std::size_t n = config.synth_count;
  std::vector<std::string> names(n);
  std::vector<std::uint64_t> seeds(n);
  std::vector<std::size_t> sizes(n);
  parallel_for(n, args.jobs, [&](std::size_t i) {
    char name[16];
    std::snprintf(name, sizeof(name), "%06zu", i);
    names[i] = name;
    SyntheticSceneConfig scene;
    scene.seed = seeds[i] = mix_seed(config.synth_seed, i);
    scene.crowding = config.synth_crowding;
    const PointCloudFrame frame = generate_synthetic_scene(scene);
    sizes[i] = frame.size();
    write_frame(frame, data.bin(names[i]), data.label(names[i]));
  });

  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) frames.push_back({{"name", names[i]}, {"seed", seeds[i]}, {"points", sizes[i]}});
  const nlohmann::json manifest = {{"count", n},
                                   {"seed", config.synth_seed},
                                   {"crowding", config.synth_crowding},
                                   {"frames", frames}};
  write_text(args.out / "manifest.json", manifest.dump(2) + "\n");
  synthetic_class_table().save(args.out / "classes.txt");
}

void cmd_cluster(const PipelineConfig& config, const ClusterArgs& args) {
  const ClassTable classes = config.classes();
  const DatasetPaths data{args.data};
  const auto names = list_frames(args.data);
  const auto params = config.oversegment();
  std::vector<std::size_t> counts(names.size());
  fs::create_directories(args.out);
  parallel_for(names.size(), args.jobs, [&](std::size_t i) {
    const PointCloudFrame frame = read_frame(data.bin(names[i]), data.label(names[i]));
    const ForegroundClusters clusters = oversegment_foreground(frame, classes, params);
    std::vector<std::uint16_t> ids(frame.size(), 0);
    for (std::size_t k = 0; k < clusters.point_indices.size(); ++k) {
      const auto c = clusters.assignment.labels[k];
      if (c == ClusterAssignment::kNoise) continue;
      if (c + 1 > 0xFFFF) throw DataError("frame " + names[i] + " has more clusters than the label field holds");
      ids[clusters.point_indices[k]] = static_cast<std::uint16_t>(c + 1);
    }
    write_labels(frame.semantic, ids, args.out / (names[i] + ".label"));
    counts[i] = static_cast<std::size_t>(clusters.assignment.n_clusters);
  });
  nlohmann::json summary = nlohmann::json::array();
  for (std::size_t i = 0; i < names.size(); ++i) summary.push_back({{"name", names[i]}, {"clusters", counts[i]}});
  write_text(args.out / "clusters.json",
             nlohmann::json({{"method", config.cluster_method}, {"frames", summary}}).dump(2) + "\n");
}

std::vector<EpochStats> cmd_train(const PipelineConfig& config, const TrainArgs& args) {
  if (args.checkpoint.empty()) throw InputError("train: a checkpoint path is required");
  const ClassTable classes = config.classes();
  check_class_table(classes);
  const DatasetPaths data{args.data};
  const auto names = list_frames(args.data);
  if (names.empty()) throw DataError("dataset " + args.data.string() + " is empty");
  if (args.resume && !fs::exists(args.checkpoint)) {
    throw InputError("cannot resume: checkpoint " + args.checkpoint.string() + " does not exist");
  }

  const auto frames = read_dataset(data, names, args.jobs);
  const bool any_instance = std::any_of(frames.begin(), frames.end(), [&](const PointCloudFrame& f) {
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f.instance[i] != 0 && classes.is_thing(f.semantic[i])) return true;
    return false;
  });
  if (!any_instance) throw DataError("dataset " + args.data.string() + " carries no ground-truth instances");

  const PipelineOptions options = config.pipeline();
  std::vector<TrainSample> samples(frames.size());
  parallel_for(frames.size(), args.jobs,
               [&](std::size_t i) { samples[i] = make_train_sample(frames[i], classes, options, names[i]); });

  TrainState state;
  std::string log_text = kLogHeader;
  if (args.resume) {
    const Checkpoint c = load_compatible_checkpoint(args.checkpoint, config, classes);
    if (c.seed != config.seed) throw ConfigError("checkpoint seed differs from config seed");
    state = c.state;
    state.hyper = config.hyperparameters();
    // Keep the log rows of the epochs already in the checkpoint.
    if (!args.log.empty() && fs::exists(args.log)) {
      std::istringstream in(read_text(args.log));
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (std::stoull(line.substr(0, line.find(','))) > state.epoch) break;
        log_text += line + "\n";
      }
    }
  } else {
    state = TrainState::fresh(config.seed, config.hyperparameters());
  }

  TrainConfig tc;
  tc.epochs = config.epochs;
  tc.seed = config.seed;
  tc.loss.class_weights = config.class_weights;
  tc.tau = config.tau;
  tc.divergence_dump = args.checkpoint.string() + ".diverged";
  tc.num_classes = static_cast<std::uint32_t>(classes.num_classes());
  tc.voxel_size = config.voxel_size;

  if (args.checkpoint.has_parent_path()) fs::create_directories(args.checkpoint.parent_path());
  if (!args.log.empty()) write_text(args.log, log_text);
  return train(samples, tc, state, [&](const TrainState& s, const EpochStats& e) {
    write_checkpoint(args.checkpoint, Checkpoint{s, tc.num_classes, config.voxel_size, config.seed});
    if (!args.log.empty()) {
      log_text += format_log_row(e);
      write_text(args.log, log_text);
    }
  });
}

void cmd_infer(const PipelineConfig& config, const InferArgs& args) {
  const ClassTable classes = config.classes();
  check_class_table(classes);
  const Checkpoint checkpoint = load_compatible_checkpoint(args.checkpoint, config, classes);
  const DatasetPaths data{args.data};
  const auto names = list_frames(args.data);
  const bool use_gt = args.semantics == "gt";
  fs::path semantic_dir;
  if (!use_gt) {
    semantic_dir = resolve_label_dir(args.semantics);
    if (!fs::is_directory(semantic_dir)) {
      throw InputError("--semantics must be 'gt' or a directory of .label files, got '" + args.semantics + "'");
    }
  }
  const PipelineOptions options = config.pipeline();
  fs::create_directories(args.out / "labels");
  if (args.dump_adjacency) fs::create_directories(args.out / "adjacency");

  parallel_for(names.size(), args.jobs, [&](std::size_t i) {
    PointCloudFrame frame;
    if (use_gt) {
      frame = read_frame(data.bin(names[i]), data.label(names[i]));
    } else {
      frame.points = read_points(data.bin(names[i]));
      read_labels(semantic_dir / (names[i] + ".label"), frame.semantic, frame.instance);
      if (frame.semantic.size() != frame.points.size()) {
        throw DataError("semantic labels for " + names[i] + " do not match its point count");
      }
    }
    // Only semantics are an input; ground-truth instances never reach the model.
    std::fill(frame.instance.begin(), frame.instance.end(), 0);
    const FrameResult r = infer_frame(frame, classes, checkpoint.state.params, options);
    write_labels(r.panoptic.semantic, r.panoptic.instance, args.out / "labels" / (names[i] + ".label"));
    if (args.dump_adjacency) {
      write_text(args.out / "adjacency" / (names[i] + ".json"), adjacency_to_json(r.adjacency).dump() + "\n");
    }
  });
}

PQReport cmd_eval(const PipelineConfig& config, const EvalArgs& args) {
  const ClassTable classes = config.classes();
  const fs::path pred_dir = resolve_label_dir(args.pred), gt_dir = resolve_label_dir(args.gt);
  const auto pred = label_stems(pred_dir), gt = label_stems(gt_dir);
  std::vector<std::string> missing, common;
  for (const auto& s : gt) {
    if (pred.count(s)) common.push_back(s);
    else missing.push_back(s + ".label (no prediction)");
  }
  for (const auto& s : pred)
    if (!gt.count(s)) missing.push_back(s + ".label (no ground truth)");
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += "\n  " + m;
    if (args.strict) throw DataError("prediction and ground-truth directories differ:" + list);
    std::cerr << "warning: skipping frames without a counterpart:" << list << "\n";
  }

  PanopticEvaluator evaluator(classes, config.eval());
  for (const auto& name : common) {
    PanopticFrame p, g;
    read_labels(pred_dir / (name + ".label"), p.semantic, p.instance);
    read_labels(gt_dir / (name + ".label"), g.semantic, g.instance);
    if (p.size() != g.size()) throw DataError("frame " + name + ": prediction and ground truth differ in point count");
    evaluator.add_frame(p, g);
  }
  const PQReport report = evaluator.report();
  if (!args.out.empty()) {
    write_text(args.out.string() + ".json", report_to_json(report).dump(2) + "\n");
    write_text(args.out.string() + ".txt", report_table({{"pred", report}}));
  }
  return report;
}

std::vector<AblationRow> cmd_ablate(const PipelineConfig& config, const AblateArgs& args) {
  const ClassTable classes = config.classes();
  check_class_table(classes);
  const Checkpoint checkpoint = load_compatible_checkpoint(args.checkpoint, config, classes);
  const DatasetPaths data{args.data};
  const auto names = list_frames(args.data);
  const PipelineOptions options = config.pipeline();

  const std::vector<std::pair<std::string, ClusterMethod>> baselines = {
      {"DBSCAN", ClusterMethod::dbscan}, {"HDBSCAN", ClusterMethod::hdbscan}, {"MeanShift", ClusterMethod::meanshift}};
  constexpr std::size_t kRows = 4;
  std::vector<std::array<PanopticFrame, kRows>> results(names.size());
  std::vector<PanopticFrame> truth(names.size());
  parallel_for(names.size(), args.jobs, [&](std::size_t i) {
    PointCloudFrame frame = read_frame(data.bin(names[i]), data.label(names[i]));
    truth[i] = panoptic_from_frame(frame);
    std::fill(frame.instance.begin(), frame.instance.end(), 0);
    for (std::size_t b = 0; b < baselines.size(); ++b) {
      OversegmentParams p = options.cluster;
      p.method = baselines[b].second;
      results[i][b] = clusters_as_instances(frame, classes, oversegment_foreground(frame, classes, p), options.fusion);
    }
    results[i][3] = infer_frame(frame, classes, checkpoint.state.params, options).panoptic;
  });

  std::vector<AblationRow> rows;
  for (std::size_t r = 0; r < kRows; ++r) {
    PanopticEvaluator evaluator(classes, config.eval());
    for (std::size_t i = 0; i < names.size(); ++i) evaluator.add_frame(results[i][r], truth[i]);
    rows.push_back({r < baselines.size() ? baselines[r].first + " as instances" : "Graph merge", evaluator.report()});
  }
  if (!args.out.empty()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& row : rows) j.push_back({{"method", row.method}, {"report", report_to_json(row.report)}});
    write_text(args.out.string() + ".json", j.dump(2) + "\n");
    write_text(args.out.string() + ".txt", ablation_table(rows));
  }
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.method.size());
  auto cell = [](const std::optional<double>& v) {
    char buf[32];
    if (v) std::snprintf(buf, sizeof(buf), "%7.1f", 100.0 * *v);
    else std::snprintf(buf, sizeof(buf), "%7s", "-");
    return std::string(buf);
  };
  std::ostringstream out;
  out << "Method" << std::string(width - 6, ' ') << "     PQ  PQ^Th  RQ^Th  SQ^Th\n";
  for (const auto& r : rows) {
    out << r.method << std::string(width - r.method.size(), ' ') << cell(r.report.pq) << cell(r.report.pq_th)
        << cell(r.report.rq_th) << cell(r.report.sq_th) << '\n';
  }
  return out.str();
}

}  // namespace panograph
