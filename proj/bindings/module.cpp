#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tc/metrics.hpp"
#include "tc/network.hpp"
#include "tc/ply_io.hpp"
#include "tc/precompute.hpp"
#include "tc/scene.hpp"
#include "tc/training.hpp"

namespace py = pybind11;

namespace {

py::dict cloud_to_dict(const tc::PointCloud& cloud) {
  py::dict out;
  out["positions"] = cloud.positions;
  if (cloud.has_labels()) out["labels"] = cloud.labels;
  if (cloud.has_colors()) out["colors"] = cloud.colors;
  return out;
}

tc::TrainConfig make_config(int classes, int epochs, double lr, int rotations, uint64_t seed,
                            int threads) {
  tc::set_thread_count(threads);
  tc::TrainConfig config;
  config.num_classes = classes;
  config.epochs = epochs;
  config.learning_rate = lr;
  config.rotations = rotations;
  config.seed = seed;
  return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "tangent-convolution point cloud segmentation core";

  m.def(
      "generate_scene",
      [](const std::string& spec_text, uint64_t seed) {
        const tc::SceneSpec spec = tc::parse_scene_spec_text(spec_text, "<python>");
        return cloud_to_dict(tc::generate_scene(spec, seed));
      },
      py::arg("spec_text"), py::arg("seed") = 0,
      "Sample a labeled synthetic scene from a scene-spec string.");

  m.def(
      "read_ply", [](const std::string& path) { return cloud_to_dict(tc::read_ply(path)); },
      py::arg("path"));

  m.def(
      "write_ply",
      [](const std::string& path, const std::vector<tc::Vec3>& positions,
         const std::vector<int32_t>& labels, bool colorize_labels) {
        tc::PointCloud cloud;
        cloud.positions = positions;
        cloud.labels = labels;
        tc::write_ply(cloud, path,
                      colorize_labels ? tc::ColorizeBy::Labels : tc::ColorizeBy::None);
      },
      py::arg("path"), py::arg("positions"), py::arg("labels") = std::vector<int32_t>{},
      py::arg("colorize_labels") = false);

  m.def(
      "receptive_field",
      [](double r0) { return tc::receptive_field(tc::NetworkSpec{}, r0); }, py::arg("r0") = 0.05,
      "Receptive field in meters of the default U-shaped network.");

  m.def(
      "precompute",
      [](const std::string& input_ply, const std::string& cache_path, double base_cell,
         int levels) {
        tc::HierarchyConfig config;
        config.base_cell = base_cell;
        config.pixel_size0 = base_cell;
        config.levels = levels;
        const tc::Hierarchy h = tc::build_hierarchy(tc::read_ply(input_ply), config);
        tc::save_plan_cache(h, cache_path);
        std::vector<std::size_t> counts;
        for (const auto& level : h.levels) counts.push_back(level.cloud.size());
        return counts;
      },
      py::arg("input_ply"), py::arg("cache_path"), py::arg("base_cell") = 0.05,
      py::arg("levels") = 3, "Build and cache per-level plans; returns per-level point counts.");

  m.def(
      "train",
      [](const std::vector<std::string>& scene_plys, const std::string& checkpoint, int classes,
         int epochs, double lr, int rotations, uint64_t seed, int threads) {
        const tc::TrainConfig config = make_config(classes, epochs, lr, rotations, seed, threads);
        std::vector<tc::PointCloud> scenes;
        for (const auto& path : scene_plys) scenes.push_back(tc::read_ply(path));
        tc::Network net(tc::make_network_spec(config), config.seed);
        std::vector<tc::AdamState> adam;
        const tc::TrainOutput out = tc::train(net, adam, scenes, config);
        net.save_checkpoint(checkpoint, adam, config.epochs);
        return out.epoch_loss;
      },
      py::arg("scene_plys"), py::arg("checkpoint"), py::arg("classes"), py::arg("epochs") = 20,
      py::arg("lr") = 1e-4, py::arg("rotations") = 1, py::arg("seed") = 0, py::arg("threads") = 1,
      "Train the segmentation network; returns the per-epoch loss curve.");

  m.def(
      "segment",
      [](const std::string& input_ply, const std::string& checkpoint, int classes,
         uint64_t seed, int threads) {
        const tc::TrainConfig config = make_config(classes, 0, 0.0, 1, seed, threads);
        const tc::PointCloud cloud = tc::read_ply(input_ply);
        tc::Network net(tc::make_network_spec(config), config.seed);
        net.load_checkpoint(checkpoint, nullptr);
        const tc::PreparedBatch batch =
            tc::prepare_batch(cloud, config.hierarchy, config.signals);
        return tc::predict_full(net, batch);
      },
      py::arg("input_ply"), py::arg("checkpoint"), py::arg("classes"), py::arg("seed") = 0,
      py::arg("threads") = 1, "Per-point class predictions for a scan.");

  m.def(
      "evaluate",
      [](const std::vector<int32_t>& predictions, const std::vector<int32_t>& truth,
         int classes) {
        const tc::Metrics metrics = tc::evaluate(predictions, truth, classes);
        py::dict out;
        out["miou"] = metrics.miou;
        out["mean_accuracy"] = metrics.mean_accuracy;
        out["overall_accuracy"] = metrics.overall_accuracy;
        out["confusion"] = metrics.confusion.counts;
        return out;
      },
      py::arg("predictions"), py::arg("truth"), py::arg("classes"));

  m.attr("UNLABELED") = tc::kUnlabeled;
}
