#include "panograph/config.hpp"

#include "../support/temp_dir.hpp"

#include <doctest.h>

using namespace panograph;

TEST_SUITE("config") {

TEST_CASE("defaults describe the documented pipeline") {
  const PipelineConfig c;
  CHECK(c.oversegment().method == ClusterMethod::hdbscan);
  CHECK(c.oversegment().min_cluster_size == 10);
  CHECK(c.hyperparameters().learning_rate == 0.001);
  CHECK(c.hyperparameters().momentum == 0.9);
  CHECK(c.hyperparameters().weight_decay == 0.0005);
  CHECK(c.pipeline().tau == 0.5);
  CHECK(c.pipeline().features.voxel_size == 0.1);
  CHECK(c.eval().ignore_class == std::optional<std::uint16_t>{0});
  CHECK(c.classes().num_classes() == synthetic_class_table().num_classes());
}

TEST_CASE("key = value text parses with comments and blank lines") {
  const auto c = PipelineConfig::parse(
      "# clustering\n"
      "cluster_method = dbscan\n"
      "\n"
      "dbscan_eps=0.75\n"
      "cluster_per_class = false\n"
      "epochs = 3\n"
      "ignore_class = -1\n");
  CHECK(c.oversegment().method == ClusterMethod::dbscan);
  CHECK(c.oversegment().dbscan_eps == 0.75);
  CHECK_FALSE(c.oversegment().per_class);
  CHECK(c.epochs == 3);
  CHECK_FALSE(c.eval().ignore_class.has_value());
}

TEST_CASE("unknown keys and malformed values are configuration errors") {
  CHECK_THROWS_AS(PipelineConfig::parse("no_such_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::parse("epochs = three\n"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::parse("epochs = 3x\n"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::parse("tau = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::parse("voxel_size = 0\n"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::parse("cluster_method = kmeans\n"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::parse("class_weights = maybe\n"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::parse("just words\n"), ConfigError);
  PipelineConfig c;
  CHECK_THROWS_AS(c.set("learning_rate", "fast"), ConfigError);
}

TEST_CASE("to_text round-trips every key") {
  PipelineConfig c;
  c.set("synth_seed", "18446744073709551615");
  c.set("meanshift_bandwidth", "0.1");
  c.set("class_table", "tables/my classes.txt");
  c.set("assign_noise_to_nearest", "true");
  const std::string text = c.to_text();
  for (const auto& key : PipelineConfig::keys()) CHECK(text.find(key + " = ") != std::string::npos);
  const PipelineConfig back = PipelineConfig::parse(text);
  CHECK(back.to_text() == text);
  CHECK(back.synth_seed == 18446744073709551615ull);
  CHECK(back.meanshift_bandwidth == 0.1);
  CHECK(back.class_table == "tables/my classes.txt");
  CHECK(back.assign_noise_to_nearest);
}

TEST_CASE("class tables load from the configured file") {
  TempDir dir;
  write_bytes(dir / "classes.txt", "0,unlabeled,stuff\n1,bike,thing\n2,grass,stuff\n");
  write_bytes(dir / "run.cfg", "class_table = " + (dir / "classes.txt").string() + "\n");
  const auto c = PipelineConfig::load(dir / "run.cfg");
  CHECK(c.classes().num_classes() == 3);
  CHECK(c.classes().is_thing(1));
  CHECK_THROWS_AS(PipelineConfig::load(dir / "missing.cfg"), ConfigError);
}

}  // TEST_SUITE
