#include "panograph/commands.hpp"

#include "../support/temp_dir.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

using namespace panograph;

namespace {

PipelineConfig small_config() {
  PipelineConfig c;
  c.synth_count = 5;
  c.synth_seed = 7;
  c.synth_crowding = true;
  c.epochs = 5;
  c.seed = 7;
  return c;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::size_t count_files(const std::filesystem::path& dir) {
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

}  // namespace

TEST_SUITE("commands") {

TEST_CASE("synth writes the requested frames, a manifest and a class table") {
  TempDir dir;
  const auto cfg = small_config();
  cmd_synth(cfg, {dir / "ds"});
  CHECK(list_frames(dir / "ds") == std::vector<std::string>{"000000", "000001", "000002", "000003", "000004"});
  CHECK(count_files(dir / "ds" / "labels") == 5);
  const auto manifest = nlohmann::json::parse(file_bytes(dir / "ds" / "manifest.json"));
  CHECK(manifest["frames"].size() == 5);
  CHECK(ClassTable::parse(file_bytes(dir / "ds" / "classes.txt")).to_text() == synthetic_class_table().to_text());

  // Same seed, same bytes.
  cmd_synth(cfg, {dir / "again"});
  for (const auto& name : list_frames(dir / "ds")) {
    DatasetPaths a{dir / "ds"}, b{dir / "again"};
    CHECK(file_bytes(a.bin(name)) == file_bytes(b.bin(name)));
    CHECK(file_bytes(a.label(name)) == file_bytes(b.label(name)));
  }
  // Parallel generation gives the same bytes.
  cmd_synth(cfg, {dir / "par", false, 3});
  CHECK(file_bytes(DatasetPaths{dir / "par"}.label("000003")) == file_bytes(DatasetPaths{dir / "ds"}.label("000003")));

  CHECK_THROWS_AS(cmd_synth(cfg, {dir / "ds"}), InputError);
  PipelineConfig fewer = cfg;
  fewer.synth_count = 2;
  cmd_synth(fewer, {dir / "ds", true});
  CHECK(list_frames(dir / "ds").size() == 2);
}

TEST_CASE("cluster writes one label file per frame") {
  TempDir dir;
  auto cfg = small_config();
  cfg.synth_count = 2;
  cmd_synth(cfg, {dir / "ds"});
  cmd_cluster(cfg, {dir / "ds", dir / "clusters"});
  for (const auto& name : list_frames(dir / "ds")) {
    const auto frame = read_frame(DatasetPaths{dir / "ds"}.bin(name), DatasetPaths{dir / "ds"}.label(name));
    std::vector<std::uint16_t> sem, ins;
    read_labels(dir / "clusters" / (name + ".label"), sem, ins);
    CHECK(sem == frame.semantic);
    std::size_t clustered = 0;
    for (std::size_t i = 0; i < ins.size(); ++i) {
      if (ins[i] != 0) {
        ++clustered;
        CHECK(synthetic_class_table().is_thing(sem[i]));
      }
    }
    CHECK(clustered > 0);
  }
  CHECK(std::filesystem::exists(dir / "clusters" / "clusters.json"));
}

TEST_CASE("train logs one row per epoch and resumes bit-exactly") {
  TempDir dir;
  const auto cfg = small_config();
  cmd_synth(cfg, {dir / "ds"});
  const auto stats = cmd_train(cfg, {dir / "ds", dir / "full.ckpt", dir / "full.csv"});
  REQUIRE(stats.size() == 5);
  const auto lines = read_lines(dir / "full.csv");
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "epoch,mean_loss,edge_accuracy");
  CHECK(lines[5].rfind("5,", 0) == 0);
  CHECK(stats.back().mean_loss < stats.front().mean_loss);

  auto three = cfg;
  three.epochs = 3;
  cmd_train(three, {dir / "ds", dir / "part.ckpt", dir / "part.csv"});
  CHECK(read_lines(dir / "part.csv").size() == 4);
  const auto rest = cmd_train(cfg, {dir / "ds", dir / "part.ckpt", dir / "part.csv", true});
  CHECK(rest.size() == 2);
  CHECK(file_bytes(dir / "part.ckpt") == file_bytes(dir / "full.ckpt"));
  CHECK(file_bytes(dir / "part.csv") == file_bytes(dir / "full.csv"));

  auto other_seed = cfg;
  other_seed.seed = 8;
  CHECK_THROWS_AS(cmd_train(other_seed, {dir / "ds", dir / "part.ckpt", {}, true}), ConfigError);
  CHECK_THROWS_AS(cmd_train(cfg, {dir / "ds", dir / "none.ckpt", {}, true}), InputError);
}

TEST_CASE("training needs frames with instances") {
  TempDir dir;
  std::filesystem::create_directories(dir / "empty" / "velodyne");
  CHECK_THROWS_AS(cmd_train(small_config(), {dir / "empty", dir / "x.ckpt"}), DataError);
  CHECK_THROWS_AS(cmd_train(small_config(), {dir / "missing", dir / "x.ckpt"}), IoError);
}

TEST_CASE("infer and eval: outputs parse back and scores are sane") {
  TempDir dir;
  auto cfg = small_config();
  cfg.epochs = 2;
  cmd_synth(cfg, {dir / "ds"});
  cmd_train(cfg, {dir / "ds", dir / "m.ckpt"});
  cmd_infer(cfg, {dir / "ds", dir / "m.ckpt", dir / "pred", "gt", true});
  for (const auto& name : list_frames(dir / "ds")) {
    const auto gt = read_frame(DatasetPaths{dir / "ds"}.bin(name), DatasetPaths{dir / "ds"}.label(name));
    std::vector<std::uint16_t> sem, ins;
    read_labels(dir / "pred" / "labels" / (name + ".label"), sem, ins);
    REQUIRE(sem.size() == gt.size());
    for (std::size_t i = 0; i < sem.size(); ++i)
      if (!synthetic_class_table().is_thing(sem[i])) CHECK(ins[i] == 0);
    const auto adj = nlohmann::json::parse(file_bytes(dir / "pred" / "adjacency" / (name + ".json")));
    CHECK(adj.contains("adjacency"));
  }

  // Deterministic across runs and thread counts.
  cmd_infer(cfg, {dir / "ds", dir / "m.ckpt", dir / "pred2", "gt", false, 4});
  for (const auto& name : list_frames(dir / "ds"))
    CHECK(file_bytes(dir / "pred" / "labels" / (name + ".label")) ==
          file_bytes(dir / "pred2" / "labels" / (name + ".label")));

  const PQReport r = cmd_eval(cfg, {dir / "pred", dir / "ds", dir / "report"});
  REQUIRE(r.pq.has_value());
  CHECK(*r.pq > 0.0);
  CHECK(*r.pq <= 1.0);
  CHECK(*r.miou == 1.0);  // semantics come from the ground truth
  CHECK(nlohmann::json::parse(file_bytes(dir / "report.json"))["frames"] == 5);
  CHECK(file_bytes(dir / "report.txt").find("PQ^Th") != std::string::npos);

  // A missing prediction is a warning unless --strict.
  std::filesystem::remove(dir / "pred" / "labels" / "000002.label");
  CHECK(cmd_eval(cfg, {dir / "pred", dir / "ds"}).frames == 4);
  CHECK_THROWS_AS(cmd_eval(cfg, {dir / "pred", dir / "ds", {}, true}), DataError);

  // Class table and voxel size must match the checkpoint.
  auto coarse = cfg;
  coarse.voxel_size = 0.2;
  CHECK_THROWS_AS(cmd_infer(coarse, {dir / "ds", dir / "m.ckpt", dir / "bad"}), ConfigError);
  write_bytes(dir / "three.txt", "0,unlabeled,stuff\n1,car,thing\n2,road,stuff\n");
  auto small_table = cfg;
  small_table.class_table = dir / "three.txt";
  CHECK_THROWS_AS(cmd_infer(small_table, {dir / "ds", dir / "m.ckpt", dir / "bad"}), ShapeError);
  CHECK_THROWS_AS(cmd_infer(cfg, {dir / "ds", dir / "m.ckpt", dir / "bad", "nowhere"}), InputError);
}

TEST_CASE("infer handles frames without foreground") {
  TempDir dir;
  auto cfg = small_config();
  cfg.epochs = 1;
  cmd_synth(cfg, {dir / "ds"});
  cmd_train(cfg, {dir / "ds", dir / "m.ckpt"});
  // Relabel every point of one frame as road.
  const DatasetPaths ds{dir / "ds"};
  auto frame = read_frame(ds.bin("000000"), ds.label("000000"));
  std::fill(frame.semantic.begin(), frame.semantic.end(), synthetic_class::road);
  std::fill(frame.instance.begin(), frame.instance.end(), 0);
  write_frame(frame, ds.bin("000000"), ds.label("000000"));
  cmd_infer(cfg, {dir / "ds", dir / "m.ckpt", dir / "pred"});
  std::vector<std::uint16_t> sem, ins;
  read_labels(dir / "pred" / "labels" / "000000.label", sem, ins);
  CHECK(sem == frame.semantic);
  CHECK(ins == frame.instance);
}

TEST_CASE("ablate reports the three clustering baselines and the graph merge") {
  TempDir dir;
  auto cfg = small_config();
  cfg.synth_count = 2;
  cfg.epochs = 1;
  cmd_synth(cfg, {dir / "ds"});
  cmd_train(cfg, {dir / "ds", dir / "m.ckpt"});
  const auto rows = cmd_ablate(cfg, {dir / "ds", dir / "m.ckpt", dir / "ablation"});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].method == "DBSCAN as instances");
  CHECK(rows[3].method == "Graph merge");
  const std::string table = file_bytes(dir / "ablation.txt");
  CHECK(table == ablation_table(rows));
  CHECK(table.find("MeanShift as instances") != std::string::npos);
  CHECK(nlohmann::json::parse(file_bytes(dir / "ablation.json")).size() == 4);
}

TEST_CASE("errors map to exit codes") {
  CHECK(exit_code_for(ConfigError("x")) == kExitUsage);
  CHECK(exit_code_for(InputError("x")) == kExitUsage);
  CHECK(exit_code_for(DataError("x")) == kExitData);
  CHECK(exit_code_for(FormatError("x")) == kExitData);
  CHECK(exit_code_for(IoError("x")) == kExitData);
  CHECK(exit_code_for(ShapeError("x")) == kExitData);
  CHECK(exit_code_for(TrainingError("x")) == kExitNumerical);
}

}  // TEST_SUITE
