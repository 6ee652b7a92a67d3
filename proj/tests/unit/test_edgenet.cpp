#include "panograph/edgenet.hpp"

#include "../support/gradcheck.hpp"
#include "../support/oracles.hpp"
#include "../support/toy.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace panograph;

namespace {

Tensor random_tensor(Rng& rng, std::string name, std::vector<std::size_t> shape, double scale = 0.5) {
  Tensor t(std::move(name), std::move(shape));
  for (double& v : t.data) v = rng.uniform(-scale, scale);
  return t;
}

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1, 1);
  return m;
}

EdgeNetParams random_params(std::uint64_t seed) {
  EdgeNetParams p = EdgeNetParams::initialize(seed);
  Rng rng(seed + 100);
  for (Tensor* t : p.tensors())
    if (t->shape.size() == 1)
      for (double& v : t->data) v = rng.uniform(-0.1, 0.1);
  return p;
}

// Renumbers the clusters of an input by `perm` (old id -> new id).
EdgeNetInput permute_clusters(const EdgeNetInput& in, const std::vector<std::size_t>& perm) {
  EdgeNetInput out = in;
  for (auto& c : out.point_cluster) c = static_cast<std::int32_t>(perm[static_cast<std::size_t>(c)]);
  for (std::size_t i = 0; i < perm.size(); ++i)
    out.centroid.row(static_cast<Eigen::Index>(perm[i])) = in.centroid.row(static_cast<Eigen::Index>(i));
  return out;
}

}  // namespace

TEST_SUITE("edgenet") {

TEST_CASE("kernel offsets enumerate the 3x3x3 cube") {
  CHECK(kernel_offset(0) == std::array<int, 3>{-1, -1, -1});
  CHECK(kernel_offset(kCenterOffset) == std::array<int, 3>{0, 0, 0});
  CHECK(kernel_offset(26) == std::array<int, 3>{1, 1, 1});
  for (std::size_t k = 0; k < kKernelVolume; ++k) {
    const auto d = kernel_offset(k);
    CHECK(static_cast<std::size_t>(9 * (d[0] + 1) + 3 * (d[1] + 1) + (d[2] + 1)) == k);
  }
}

TEST_CASE("parameter tensors have the documented shapes") {
  const EdgeNetParams p = EdgeNetParams::initialize(3);
  CHECK(p.conv1_weight.size() == 27 * 24 * 64);
  CHECK(p.conv2_weight.size() == 27 * 64 * 32);
  CHECK(p.sage1_self.size() == 35 * 64);
  CHECK(p.mlp1_weight.size() == 64 * 32);
  CHECK(p.mlp2_weight.size() == 32 * 2);
  std::size_t total = 0;
  std::set<std::string> names;
  for (const Tensor* t : p.tensors()) {
    total += t->size();
    names.insert(t->name);
  }
  CHECK(total == p.parameter_count());
  CHECK(names.size() == EdgeNetParams::kNumTensors);
  CHECK(p.all_finite());
  for (double v : p.conv1_bias.data) CHECK(v == 0.0);
  const double bound = std::sqrt(6.0 / (27.0 * 24.0));
  for (double v : p.conv1_weight.data) {
    CHECK(std::abs(v) <= bound);
    CHECK(static_cast<double>(static_cast<float>(v)) == v);
  }
  CHECK(EdgeNetParams::initialize(3).conv2_weight.data == p.conv2_weight.data);
  CHECK(EdgeNetParams::initialize(4).conv2_weight.data != p.conv2_weight.data);
}

TEST_CASE("voxelize averages points per site with floor semantics") {
  const std::vector<Vec3> pts = {Vec3(0.01, 0.02, 0.03), Vec3(0.09, 0.01, 0.05), Vec3(-0.05, 0.0, 0.0),
                                 Vec3(0.15, 0.0, 0.0)};
  Matrix feat(4, 2);
  feat << 1, 2, 3, 4, 5, 6, 7, 8;
  const auto v = voxelize(pts, feat, 0.1);
  REQUIRE(v.sites.size() == 3);
  CHECK(v.sites[0] == std::array<std::int32_t, 3>{0, 0, 0});
  CHECK(v.sites[1] == std::array<std::int32_t, 3>{-1, 0, 0});
  CHECK(v.sites[2] == std::array<std::int32_t, 3>{1, 0, 0});
  CHECK(v.point_to_site == std::vector<std::uint32_t>{0, 0, 1, 2});
  CHECK(v.features(0, 0) == 2.0);
  CHECK(v.features(0, 1) == 3.0);
  CHECK(v.features(2, 1) == 8.0);
}

TEST_CASE("voxelize is invariant to whole-voxel translations") {
  Rng rng(2);
  std::vector<Vec3> pts;
  for (int i = 0; i < 50; ++i)
    pts.emplace_back(0.05 + 0.1 * static_cast<double>(rng.below(6)), 0.05 + 0.1 * static_cast<double>(rng.below(6)),
                     0.05 + 0.1 * static_cast<double>(rng.below(6)));
  const Matrix feat = random_matrix(rng, 50, 3);
  const auto a = voxelize(pts, feat, 0.1);
  std::vector<Vec3> shifted = pts;
  for (auto& p : shifted) p += Vec3(1.0, -2.0, 3.0);
  const auto b = voxelize(shifted, feat, 0.1);
  REQUIRE(a.sites.size() == b.sites.size());
  for (std::size_t s = 0; s < a.sites.size(); ++s) {
    CHECK(b.sites[s][0] == a.sites[s][0] + 10);
    CHECK(b.sites[s][1] == a.sites[s][1] - 20);
    CHECK(b.sites[s][2] == a.sites[s][2] + 30);
  }
  CHECK(a.features == b.features);
  CHECK(a.point_to_site == b.point_to_site);
  CHECK_THROWS(voxelize(pts, feat, 0.0));
}

TEST_CASE("rulebook pairs connect neighbouring sites") {
  const std::vector<std::array<std::int32_t, 3>> sites = {{0, 0, 0}, {1, 0, 0}, {5, 5, 5}};
  const Rulebook r = build_rulebook(sites);
  CHECK(r.pairs[kCenterOffset].size() == 3);
  // Output site 0 reads input site 1 through offset (+1, 0, 0).
  const std::size_t plus_x = 9 * 2 + 3 * 1 + 1;
  const std::size_t minus_x = 9 * 0 + 3 * 1 + 1;
  REQUIRE(r.pairs[plus_x].size() == 1);
  CHECK(r.pairs[plus_x][0] == std::pair<std::uint32_t, std::uint32_t>{1, 0});
  REQUIRE(r.pairs[minus_x].size() == 1);
  CHECK(r.pairs[minus_x][0] == std::pair<std::uint32_t, std::uint32_t>{0, 1});
  std::size_t total = 0;
  for (const auto& p : r.pairs) total += p.size();
  CHECK(total == 5);
}

TEST_CASE("an isolated site only sees the centre weight") {
  Rng rng(6);
  const Tensor w = random_tensor(rng, "w", {27, 3, 4});
  const Tensor b = random_tensor(rng, "b", {4});
  const Matrix x = random_matrix(rng, 1, 3);
  const Matrix y = sparse_conv(build_rulebook({{{7, -3, 2}}}), x, w, b);
  for (int o = 0; o < 4; ++o) {
    double acc = b.data[static_cast<std::size_t>(o)];
    for (int f = 0; f < 3; ++f) acc += x(0, f) * w.data[static_cast<std::size_t>((13 * 3 + f) * 4 + o)];
    CHECK(y(0, o) == doctest::Approx(std::max(acc, 0.0)).epsilon(1e-12));
  }
}

TEST_CASE("zero weights give ReLU of the bias") {
  Rng rng(8);
  const std::vector<std::array<std::int32_t, 3>> sites = {{0, 0, 0}, {0, 0, 1}, {2, 2, 2}};
  Tensor w("w", {27, 3, 3});
  Tensor b("b", {3});
  b.data = {-1.0, 0.0, 2.5};
  const Matrix y = sparse_conv(build_rulebook(sites), random_matrix(rng, 3, 3), w, b);
  for (Eigen::Index s = 0; s < 3; ++s) {
    CHECK(y(s, 0) == 0.0);
    CHECK(y(s, 1) == 0.0);
    CHECK(y(s, 2) == 2.5);
  }
}

TEST_CASE("sparse convolution equals a dense convolution on random grids") {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const std::array<int, 3> dims = {static_cast<int>(3 + rng.below(4)), static_cast<int>(3 + rng.below(4)),
                                     static_cast<int>(3 + rng.below(4))};
    std::vector<std::array<std::int32_t, 3>> active;
    for (int x = 0; x < dims[0]; ++x)
      for (int y = 0; y < dims[1]; ++y)
        for (int z = 0; z < dims[2]; ++z)
          if (rng.uniform() < 0.4) active.push_back({x, y, z});
    if (active.empty()) continue;
    const Matrix x = random_matrix(rng, static_cast<Eigen::Index>(active.size()), 5);
    const Tensor w = random_tensor(rng, "w", {27, 5, 6});
    const Tensor b = random_tensor(rng, "b", {6});
    const Matrix got = sparse_conv(build_rulebook(active), x, w, b);
    const Matrix want = oracle::dense_conv(dims, active, x, w, b);
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("cluster pooling averages the site features of member points") {
  Matrix sites(3, 2);
  sites << 1, 10, 2, 20, 4, 40;
  const std::vector<std::uint32_t> p2s = {0, 0, 1, 2};
  const std::vector<std::int32_t> cluster = {0, 0, 0, 1};
  const Matrix pooled = cluster_avg_pool(sites, p2s, cluster, 2);
  // Points contribute their site, so site 0 counts twice for cluster 0.
  CHECK(pooled(0, 0) == doctest::Approx(4.0 / 3.0));
  CHECK(pooled(0, 1) == doctest::Approx(40.0 / 3.0));
  CHECK(pooled(1, 0) == 4.0);
}

TEST_CASE("SAGE layers: single node, identical nodes, permutation equivariance") {
  Rng rng(21);
  const Tensor ws = random_tensor(rng, "s", {4, 3});
  const Tensor wn = random_tensor(rng, "n", {4, 3});
  const Tensor b = random_tensor(rng, "b", {3});

  const Matrix one = random_matrix(rng, 1, 4);
  const Matrix y1 = sage_conv_forward(one, ws, wn, b, false);
  for (int o = 0; o < 3; ++o) {
    double acc = b.data[static_cast<std::size_t>(o)];
    for (int f = 0; f < 4; ++f) acc += one(0, f) * ws.data[static_cast<std::size_t>(f * 3 + o)];
    CHECK(y1(0, o) == doctest::Approx(acc).epsilon(1e-12));
  }

  Matrix same(4, 4);
  for (int r = 0; r < 4; ++r) same.row(r) = one.row(0);
  const Matrix ys = sage_conv_forward(same, ws, wn, b, true);
  for (int r = 1; r < 4; ++r) CHECK((ys.row(r) - ys.row(0)).norm() == 0.0);

  const Matrix h = random_matrix(rng, 5, 4);
  const std::vector<int> perm = {3, 0, 4, 1, 2};
  Matrix hp(5, 4);
  for (int i = 0; i < 5; ++i) hp.row(perm[static_cast<std::size_t>(i)]) = h.row(i);
  const Matrix y = sage_conv_forward(h, ws, wn, b, true);
  const Matrix yp = sage_conv_forward(hp, ws, wn, b, true);
  for (int i = 0; i < 5; ++i) CHECK((yp.row(perm[static_cast<std::size_t>(i)]) - y.row(i)).norm() <= 1e-12);
}

TEST_CASE("edge MLP outputs distributions and is order-sensitive") {
  Rng rng(5);
  const Matrix h = random_matrix(rng, 3, static_cast<Eigen::Index>(kEmbeddingWidth));
  std::vector<std::pair<std::size_t, std::size_t>> edges = {{0, 1}, {1, 0}, {2, 2}, {0, 2}};
  const EdgeNetParams p = random_params(9);
  const Matrix out = edge_mlp_forward(h, edges, p);
  REQUIRE(out.rows() == 4);
  for (Eigen::Index r = 0; r < 4; ++r) {
    CHECK(out.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out(r, 0) >= 0.0);
    CHECK(out(r, 1) >= 0.0);
  }
  CHECK(out(0, 1) != out(1, 1));

  EdgeNetParams zero = p;
  zero.set_zero();
  const Matrix half = edge_mlp_forward(h, edges, zero);
  for (Eigen::Index r = 0; r < 4; ++r) CHECK(half(r, 1) == 0.5);
}

TEST_CASE("forward: shapes, determinism and cluster relabelling") {
  const auto t = toy::three_cluster_problem();
  const EdgeNetParams p = random_params(2);
  const Matrix a = forward(t.input, p);
  CHECK(a.rows() == 3);
  CHECK(a.cols() == 3);
  CHECK(a.allFinite());
  CHECK(forward(t.input, p) == a);

  const std::vector<std::size_t> perm = {2, 0, 1};
  const Matrix b = forward(permute_clusters(t.input, perm), p);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(b(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(perm[j])) ==
            doctest::Approx(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))).epsilon(1e-12));
}

TEST_CASE("forward on a single cluster yields a finite 1x1 matrix") {
  PointCloudFrame f;
  Rng rng(1);
  toy::add_patch(f, rng, 2.0, 0.0, 0.0, 3, 3, 0.08, synthetic_class::car, 1);
  const ClassTable classes = synthetic_class_table();
  const auto clusters = oversegment_foreground(f, classes, toy::toy_clustering());
  REQUIRE(clusters.assignment.n_clusters == 1);
  const Matrix p = forward(f, classes, clusters, random_params(4));
  CHECK(p.rows() == 1);
  CHECK(std::isfinite(p(0, 0)));
  CHECK(loss_value(prepare_input(f, classes, clusters, {}), associate_clusters(f, clusters), random_params(4)) == 0.0);
}

TEST_CASE("prepare_input uses only clustered foreground points") {
  const auto t = toy::three_cluster_problem();
  const std::size_t members = t.clusters.point_indices.size() - t.clusters.assignment.noise_count();
  CHECK(t.input.point_cluster.size() == members);
  CHECK(t.input.voxels.point_to_site.size() == members);
  CHECK(t.input.voxels.features.cols() == static_cast<Eigen::Index>(kPointFeatureWidth));
  CHECK(t.input.num_clusters() == 3);
}

TEST_CASE("loss: ln 2 at zero parameters, near zero when confident") {
  const auto t = toy::three_cluster_problem();
  EdgeNetParams p;
  p.set_zero();
  CHECK(loss_value(t.input, t.labels, p) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const LossResult r = loss_and_grad(t.input, t.labels, p, LossOptions{true});
  CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(r.grads.all_finite());

  EdgeLabelMatrix all_linked = t.labels;
  std::fill(all_linked.values.begin(), all_linked.values.end(), 1);
  p.mlp2_bias.data = {-20.0, 20.0};
  CHECK(loss_value(t.input, all_linked, p) < 1e-15);
  CHECK_THROWS_AS(loss_value(t.input, EdgeLabelMatrix{2, {1, 0, 0, 1}}, p), ShapeError);
}

TEST_CASE("class weights balance the two edge classes") {
  const auto t = toy::three_cluster_problem();
  // One linked pair in each direction out of six ordered pairs.
  EdgeNetParams p;
  p.set_zero();
  p.mlp2_bias.data = {0.0, 1.0};
  const double lp = std::log(1.0 + std::exp(-1.0));  // -log p_connect
  const double ln = std::log(1.0 + std::exp(1.0));   // -log p_disconnect
  CHECK(loss_value(t.input, t.labels, p) == doctest::Approx((2 * lp + 4 * ln) / 6.0).epsilon(1e-12));
  CHECK(loss_value(t.input, t.labels, p, LossOptions{true}) == doctest::Approx((lp + ln) / 2.0).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central differences on sampled components") {
  const auto t = toy::three_cluster_problem(1, 2);
  const double h = 1e-4;
  const std::uint64_t seed = gradcheck::smooth_seed(t.input, h);
  REQUIRE(seed != 0);
  const EdgeNetParams p = EdgeNetParams::initialize(seed);
  for (bool weights : {false, true}) {
    const auto s = gradcheck::check(t.input, t.labels, p, LossOptions{weights}, 37, h);
    CAPTURE(s.worst.tensor);
    CAPTURE(s.worst.index);
    CHECK(s.checked > 1000);
    CHECK(s.worst.relative <= 1e-4);
    CHECK(s.worst_group() <= 1e-4);
  }
}

}  // TEST_SUITE
