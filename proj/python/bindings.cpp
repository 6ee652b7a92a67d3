#include "panograph/clustering.hpp"
#include "panograph/commands.hpp"
#include "panograph/config.hpp"
#include "panograph/graph_builder.hpp"
#include "panograph/instance_merger.hpp"
#include "panograph/metrics.hpp"
#include "panograph/pipeline.hpp"
#include "panograph/scene_io.hpp"
#include "panograph/trainer.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include <cstring>

namespace py = pybind11;
using namespace panograph;

namespace {

template <typename T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename T>
py::array_t<T> to_numpy(const std::vector<T>& v) {
  py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
  if (!v.empty()) std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(T));
  return out;
}

template <typename T>
std::vector<T> from_numpy(const Array<T>& a) {
  if (a.ndim() != 1) throw ShapeError("expected a one-dimensional array");
  return std::vector<T>(a.data(), a.data() + a.size());
}

py::dict frame_to_dict(const PointCloudFrame& f) {
  py::array_t<float> points({static_cast<py::ssize_t>(f.size()), py::ssize_t{4}});
  if (f.size()) std::memcpy(points.mutable_data(), f.points.data(), f.size() * sizeof(Point));
  py::dict d;
  d["points"] = points;
  d["semantic"] = to_numpy(f.semantic);
  d["instance"] = to_numpy(f.instance);
  return d;
}

PointCloudFrame frame_from_arrays(const Array<float>& points, const Array<std::uint16_t>& semantic,
                                  const Array<std::uint16_t>& instance) {
  if (points.ndim() != 2 || points.shape(1) != 4) throw ShapeError("points must have shape (N, 4)");
  PointCloudFrame f;
  f.points.resize(static_cast<std::size_t>(points.shape(0)));
  if (!f.points.empty()) std::memcpy(f.points.data(), points.data(), f.points.size() * sizeof(Point));
  f.semantic = from_numpy(semantic);
  f.instance = from_numpy(instance);
  if (f.semantic.size() != f.size() || f.instance.size() != f.size())
    throw ShapeError("points, semantic and instance differ in length");
  return f;
}

std::string value_text(const py::handle& v) {
  if (py::isinstance<py::bool_>(v)) return v.cast<bool>() ? "true" : "false";
  return py::str(v).cast<std::string>();
}

PipelineConfig make_config(const py::dict& overrides) {
  PipelineConfig c;
  for (const auto& [key, value] : overrides) c.set(py::str(key).cast<std::string>(), value_text(value));
  c.validate();
  return c;
}

py::object json_to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Graph-based panoptic segmentation of LiDAR point clouds";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<DataError>(m, "DataError", error.ptr());
  py::register_exception<InputError>(m, "InputError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<TrainingError>(m, "TrainingError", error.ptr());

  m.def(
      "read_frame",
      [](const std::filesystem::path& bin, const std::filesystem::path& label) {
        return frame_to_dict(read_frame(bin, label));
      },
      py::arg("bin_path"), py::arg("label_path"),
      "Read a .bin/.label pair into {'points', 'semantic', 'instance'} arrays.");
  m.def(
      "write_frame",
      [](const Array<float>& points, const Array<std::uint16_t>& semantic, const Array<std::uint16_t>& instance,
         const std::filesystem::path& bin, const std::filesystem::path& label) {
        write_frame(frame_from_arrays(points, semantic, instance), bin, label);
      },
      py::arg("points"), py::arg("semantic"), py::arg("instance"), py::arg("bin_path"), py::arg("label_path"));
  m.def(
      "synthetic_scene",
      [](std::uint64_t seed, bool crowding) {
        SyntheticSceneConfig c;
        c.seed = seed;
        c.crowding = crowding;
        return frame_to_dict(generate_synthetic_scene(c));
      },
      py::arg("seed"), py::arg("crowding") = false);
  m.def("synthetic_class_table", [] { return synthetic_class_table().to_text(); },
        "The built-in class table in 'id,name,thing|stuff' form.");

  m.def(
      "oversegment",
      [](const Array<float>& points, const Array<std::uint16_t>& semantic, const py::dict& config) {
        const PointCloudFrame f =
            frame_from_arrays(points, semantic, Array<std::uint16_t>(static_cast<py::ssize_t>(semantic.size())));
        const PipelineConfig c = make_config(config);
        const ForegroundClusters fg = oversegment_foreground(f, c.classes(), c.oversegment());
        std::vector<std::int32_t> labels(f.size(), ClusterAssignment::kNoise);
        for (std::size_t k = 0; k < fg.point_indices.size(); ++k) labels[fg.point_indices[k]] = fg.assignment.labels[k];
        return to_numpy(labels);
      },
      py::arg("points"), py::arg("semantic"), py::arg("config") = py::dict(),
      "Cluster ids per point for thing points, -1 for noise and stuff.");

  m.def(
      "associate_clusters",
      [](const Array<std::int64_t>& clusters, const Array<std::int64_t>& instances, std::size_t n) {
        const EdgeLabelMatrix e = associate_clusters(from_numpy(clusters), from_numpy(instances), n);
        py::array_t<std::uint8_t> out({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(n)});
        if (n) std::memcpy(out.mutable_data(), e.values.data(), e.values.size());
        return out;
      },
      py::arg("cluster_ids"), py::arg("instance_ids"), py::arg("n_clusters"));

  m.def(
      "connected_components",
      [](const Array<std::uint8_t>& adjacency) {
        if (adjacency.ndim() != 2 || adjacency.shape(0) != adjacency.shape(1))
          throw ShapeError("adjacency must be a square matrix");
        AdjacencyMatrix a;
        a.n = static_cast<std::size_t>(adjacency.shape(0));
        a.values.assign(adjacency.data(), adjacency.data() + adjacency.size());
        return to_numpy(connected_components(a));
      },
      py::arg("adjacency"));

  m.def(
      "evaluate",
      [](const std::vector<std::pair<Array<std::uint16_t>, Array<std::uint16_t>>>& pred,
         const std::vector<std::pair<Array<std::uint16_t>, Array<std::uint16_t>>>& gt, const py::dict& config) {
        auto frames = [](const auto& list) {
          std::vector<PanopticFrame> out;
          for (const auto& [s, i] : list) out.push_back({from_numpy(s), from_numpy(i)});
          return out;
        };
        const PipelineConfig c = make_config(config);
        return json_to_python(report_to_json(compute_pq(frames(pred), frames(gt), c.classes(), c.eval())));
      },
      py::arg("pred"), py::arg("gt"), py::arg("config") = py::dict(),
      "PQ/SQ/RQ/mIoU for lists of (semantic, instance) pairs; undefined values are the string 'undefined'.");

  m.def(
      "synth",
      [](const std::filesystem::path& out, const py::dict& config, bool force) {
        cmd_synth(make_config(config), {out, force});
      },
      py::arg("out"), py::arg("config") = py::dict(), py::arg("force") = false);
  m.def(
      "train",
      [](const std::filesystem::path& data, const std::filesystem::path& checkpoint, const py::dict& config,
         const std::filesystem::path& log, bool resume) {
        py::list rows;
        for (const auto& e : cmd_train(make_config(config), {data, checkpoint, log, resume})) {
          py::dict row;
          row["epoch"] = e.epoch;
          row["mean_loss"] = e.mean_loss;
          row["edge_accuracy"] = e.edge_accuracy;
          row["frames"] = e.frames;
          rows.append(row);
        }
        return rows;
      },
      py::arg("data"), py::arg("checkpoint"), py::arg("config") = py::dict(), py::arg("log") = std::filesystem::path(),
      py::arg("resume") = false);
  m.def(
      "infer",
      [](const std::filesystem::path& data, const std::filesystem::path& checkpoint, const std::filesystem::path& out,
         const py::dict& config, const std::string& semantics, bool dump_adjacency) {
        cmd_infer(make_config(config), {data, checkpoint, out, semantics, dump_adjacency});
      },
      py::arg("data"), py::arg("checkpoint"), py::arg("out"), py::arg("config") = py::dict(),
      py::arg("semantics") = "gt", py::arg("dump_adjacency") = false);
  m.def(
      "eval",
      [](const std::filesystem::path& pred, const std::filesystem::path& gt, const py::dict& config, bool strict) {
        return json_to_python(report_to_json(cmd_eval(make_config(config), {pred, gt, {}, strict})));
      },
      py::arg("pred"), py::arg("gt"), py::arg("config") = py::dict(), py::arg("strict") = false);
}
