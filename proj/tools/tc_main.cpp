// tc: tangent-convolution point cloud segmentation toolkit.
//
// Subcommands: gen-scene, precompute, train, segment, evaluate, benchmark.

#include <chrono>
#include <iostream>
#include <sys/resource.h>

#include <CLI11.hpp>

#include "tc/engine.hpp"
#include "tc/metrics.hpp"
#include "tc/network.hpp"
#include "tc/ply_io.hpp"
#include "tc/precompute.hpp"
#include "tc/scene.hpp"
#include "tc/training.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double peak_rss_gb() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return static_cast<double>(usage.ru_maxrss) / (1024.0 * 1024.0);  // ru_maxrss is KiB on Linux
}

struct CommonOptions {
  uint64_t seed = 0;
  int threads = 1;
  bool deterministic = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--threads", threads, "worker thread count");
    cmd->add_flag("--deterministic", deterministic, "force sequential execution");
  }
  void apply() const { tc::set_thread_count(deterministic ? 1 : threads); }
};

struct HierarchyOptions {
  tc::HierarchyConfig config;
  std::string scheme = "nn";

  void attach(CLI::App* cmd) {
    cmd->add_option("--base-cell", config.base_cell, "base quantization cell, meters");
    cmd->add_option("--r0", config.pixel_size0, "level-0 tangent image pixel size, meters");
    cmd->add_option("--levels", config.levels, "hierarchy level count");
    cmd->add_option("--image-side", config.image_side, "tangent image side l (odd)");
    cmd->add_option("--scheme", scheme, "signal interpolation: nn or gaussian")
        ->check(CLI::IsMember({"nn", "gaussian"}));
    cmd->add_option("--top-k", config.top_k, "gaussian scheme neighbor count");
    cmd->add_option("--sigma-factor", config.sigma_factor, "gaussian sigma as multiple of r");
  }
  tc::HierarchyConfig resolve() const {
    tc::HierarchyConfig c = config;
    c.gaussian = scheme == "gaussian";
    return c;
  }
};

tc::InputSignalConfig parse_signals(const std::string& s) {
  tc::InputSignalConfig config;
  config.distance = config.height = config.normals = config.rgb = false;
  std::string rest = s;
  auto rgb = rest.find("RGB");
  if (rgb != std::string::npos) {
    config.rgb = true;
    rest.erase(rgb, 3);
  }
  for (char c : rest) {
    if (c == 'D') config.distance = true;
    else if (c == 'H') config.height = true;
    else if (c == 'N') config.normals = true;
    else throw CLI::ValidationError("--signals", std::string("unknown signal '") + c + "'");
  }
  if (config.channels() == 0) throw CLI::ValidationError("--signals", "no signals selected");
  return config;
}

struct TrainOptions {
  tc::TrainConfig config;
  std::string signals = "DHN";
  std::string batch_mode = "whole";

  void attach(CLI::App* cmd) {
    cmd->add_option("--epochs", config.epochs, "training epochs");
    cmd->add_option("--lr", config.learning_rate, "Adam learning rate");
    cmd->add_option("--lr-decay", config.lr_decay, "per-epoch learning rate factor");
    cmd->add_option("--grad-clip", config.grad_clip, "global gradient norm cap (0 = off)");
    cmd->add_option("--rotations", config.rotations, "rotation augmentation copies");
    cmd->add_option("--classes", config.num_classes, "number of classes");
    cmd->add_option("--signals", signals, "input signals, e.g. DHN or DHNRGB");
    cmd->add_option("--batch", batch_mode, "batch strategy: whole or sphere")
        ->check(CLI::IsMember({"whole", "sphere"}));
    cmd->add_option("--sphere-radius", config.sphere_radius, "sphere batch radius, meters");
    cmd->add_option("--spheres-per-scene", config.spheres_per_scene, "sphere batches per scene");
    cmd->add_flag("--uniform-weights", "disable negative-log class weighting");
  }
  tc::TrainConfig resolve(const CommonOptions& common, const HierarchyOptions& hierarchy,
                          const CLI::App* cmd) const {
    tc::TrainConfig c = config;
    c.seed = common.seed;
    c.signals = parse_signals(signals);
    c.batch_strategy =
        batch_mode == "sphere" ? tc::BatchStrategy::Sphere : tc::BatchStrategy::WholeScene;
    c.hierarchy = hierarchy.resolve();
    c.neg_log_weights = cmd->count("--uniform-weights") == 0;
    return c;
  }
};

int cmd_gen_scene(const std::string& scene_path, const std::string& output,
                  const CommonOptions& common) {
  const tc::SceneSpec spec = tc::parse_scene_spec(scene_path);
  const tc::PointCloud cloud = tc::generate_scene(spec, common.seed);
  tc::write_ply(cloud, output, tc::ColorizeBy::Labels);
  std::cout << "gen-scene: " << cloud.size() << " points, "
            << spec.primitives.size() << " primitives -> " << output << "\n";
  return 0;
}

int cmd_precompute(const std::string& input, const std::string& output,
                   const CommonOptions& common, const HierarchyOptions& hierarchy,
                   bool scaling_check) {
  const tc::PointCloud cloud = tc::read_ply(input);
  const auto start = std::chrono::steady_clock::now();
  const tc::Hierarchy h = tc::build_hierarchy(cloud, hierarchy.resolve());
  const double elapsed = seconds_since(start);
  tc::save_plan_cache(h, output);

  std::cout << "precompute: " << h.levels.size() << " levels in " << elapsed << " s\n";
  for (const auto& level : h.levels)
    std::cout << "  level " << level.level << ": " << level.cloud.size() << " points, r="
              << level.pixel_size << " m, R=" << level.radius << " m\n";

  if (scaling_check && cloud.size() >= 1000) {
    tc::PointCloud half;
    for (std::size_t i = 0; i < cloud.size(); i += 2) {
      half.positions.push_back(cloud.positions[i]);
      if (cloud.has_labels()) half.labels.push_back(cloud.labels[i]);
      if (cloud.has_colors()) half.colors.push_back(cloud.colors[i]);
    }
    const auto half_start = std::chrono::steady_clock::now();
    tc::build_hierarchy(half, hierarchy.resolve());
    const double half_elapsed = seconds_since(half_start);
    std::cout << "scaling: full/half runtime ratio " << elapsed / std::max(half_elapsed, 1e-9)
              << " (linear target <= 2.5)\n";
  }
  (void)common;
  return 0;
}

int cmd_train(const std::vector<std::string>& inputs, const std::string& checkpoint_out,
              const std::string& resume, const std::string& plans_path,
              const std::string& loss_csv, const CommonOptions& common,
              const TrainOptions& train_opts, const HierarchyOptions& hierarchy,
              const CLI::App* cmd) {
  const tc::TrainConfig config = train_opts.resolve(common, hierarchy, cmd);
  std::vector<tc::PointCloud> scenes;
  for (const auto& path : inputs) scenes.push_back(tc::read_ply(path));

  tc::Network net(tc::make_network_spec(config), config.seed);
  std::vector<tc::AdamState> adam;
  int64_t start_epoch = 0;
  if (!resume.empty()) start_epoch = net.load_checkpoint(resume, &adam);

  const tc::PreparedBatch* prepared = nullptr;
  tc::PreparedBatch from_cache;
  if (!plans_path.empty()) {
    if (scenes.size() != 1)
      throw tc::TrainError("--plans requires exactly one input scene");
    tc::Hierarchy h = tc::load_plan_cache(plans_path);
    if (h.source_hash != tc::position_hash(scenes[0]))
      throw tc::TrainError("plan cache does not match input scene (hash mismatch)");
    from_cache.hierarchy = std::move(h);
    from_cache.input_channels = config.signals.channels();
    from_cache.inputs = tc::assemble_inputs(from_cache.hierarchy.levels[0].cloud,
                                            from_cache.hierarchy.levels[0].frames, config.signals);
    prepared = &from_cache;
  }

  const tc::TrainOutput result =
      prepared ? tc::train_single(net, adam, *prepared, config, start_epoch)
               : tc::train(net, adam, scenes, config, start_epoch);

  net.save_checkpoint(checkpoint_out, adam, start_epoch + config.epochs);
  if (!loss_csv.empty()) tc::write_loss_csv(result.epoch_loss, loss_csv);
  if (!result.epoch_loss.empty())
    std::cout << "train: final mean loss " << result.epoch_loss.back() << " after "
              << start_epoch + config.epochs << " epochs\n";
  else
    std::cout << "train: 0 epochs run (epoch counter at " << start_epoch << ")\n";
  return 0;
}

int cmd_segment(const std::string& input, const std::string& checkpoint,
                const std::string& output, const std::string& plans_path,
                const CommonOptions& common, const TrainOptions& train_opts,
                const HierarchyOptions& hierarchy, const CLI::App* cmd) {
  const tc::TrainConfig config = train_opts.resolve(common, hierarchy, cmd);
  tc::PointCloud cloud = tc::read_ply(input);

  tc::PreparedBatch batch;
  if (!plans_path.empty()) {
    tc::Hierarchy h = tc::load_plan_cache(plans_path);
    if (h.source_hash != tc::position_hash(cloud))
      throw tc::TrainError("plan cache does not match input scene (hash mismatch)");
    batch.hierarchy = std::move(h);
    batch.input_channels = config.signals.channels();
    batch.inputs = tc::assemble_inputs(batch.hierarchy.levels[0].cloud,
                                       batch.hierarchy.levels[0].frames, config.signals);
  } else {
    batch = tc::prepare_batch(cloud, config.hierarchy, config.signals);
  }

  tc::Network net(tc::make_network_spec(config), config.seed);
  net.load_checkpoint(checkpoint, nullptr);
  cloud.labels = tc::predict_full(net, batch);
  tc::write_ply(cloud, output, tc::ColorizeBy::Labels);
  std::cout << "segment: " << cloud.size() << " points -> " << output << "\n";
  return 0;
}

int cmd_evaluate(const std::string& pred_path, const std::string& truth_path, int num_classes,
                 const std::string& confusion_csv) {
  const tc::PointCloud pred = tc::read_ply(pred_path);
  const tc::PointCloud truth = tc::read_ply(truth_path);
  if (!pred.has_labels() || !truth.has_labels())
    throw tc::TrainError("both prediction and truth must carry labels");
  const tc::Metrics m = tc::evaluate(pred.labels, truth.labels, num_classes);
  std::cout << "mIoU " << m.miou << "\nmA " << m.mean_accuracy << "\noA " << m.overall_accuracy
            << "\n";
  if (!confusion_csv.empty()) m.confusion.write_csv(confusion_csv);
  return 0;
}

int cmd_benchmark(const std::string& input, const CommonOptions& common,
                  const TrainOptions& train_opts, const HierarchyOptions& hierarchy,
                  const CLI::App* cmd) {
  const tc::TrainConfig config = train_opts.resolve(common, hierarchy, cmd);
  const tc::PointCloud cloud = tc::read_ply(input);

  const auto prep_start = std::chrono::steady_clock::now();
  const tc::PreparedBatch batch = tc::prepare_batch(cloud, config.hierarchy, config.signals);
  const double prep = seconds_since(prep_start);

  tc::Network net(tc::make_network_spec(config), config.seed);
  const auto fp_start = std::chrono::steady_clock::now();
  tc::predict_level0(net, batch);
  const double forward = seconds_since(fp_start);

  // One forward pass covers the full scan, so FP and Full coincide.
  std::cout << "Prep (s) FP (s) Full (s) Mem (GB)\n"
            << prep << " " << forward << " " << forward << " " << peak_rss_gb() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tangent-convolution point cloud segmentation toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a key=value config file");

  CommonOptions common;
  HierarchyOptions hierarchy;
  TrainOptions train_opts;

  // gen-scene
  auto* gen = app.add_subcommand("gen-scene", "sample a labeled synthetic scene");
  std::string gen_scene_file, gen_output;
  gen->add_option("--scene", gen_scene_file, "scene spec file")->required();
  gen->add_option("--output", gen_output, "output PLY path")->required();
  common.attach(gen);

  // precompute
  auto* pre = app.add_subcommand("precompute", "build and cache per-level plans");
  std::string pre_input, pre_output;
  bool scaling_check = false;
  pre->add_option("--input", pre_input, "input PLY")->required();
  pre->add_option("--output", pre_output, "plan cache path")->required();
  pre->add_flag("--scaling-check", scaling_check, "also time a 2x subsample and print the ratio");
  common.attach(pre);
  hierarchy.attach(pre);

  // train
  auto* tr = app.add_subcommand("train", "train the segmentation network");
  std::vector<std::string> train_inputs;
  std::string ckpt_out = "model.ckpt", resume, train_plans, loss_csv;
  tr->add_option("--input", train_inputs, "training scene PLY files")->required();
  tr->add_option("--checkpoint", ckpt_out, "checkpoint output path");
  tr->add_option("--resume", resume, "resume from checkpoint");
  tr->add_option("--plans", train_plans, "plan cache for a single whole-scene input");
  tr->add_option("--loss-csv", loss_csv, "per-epoch loss curve CSV");
  common.attach(tr);
  hierarchy.attach(tr);
  train_opts.attach(tr);

  // segment
  auto* seg = app.add_subcommand("segment", "label a point cloud with a trained model");
  std::string seg_input, seg_ckpt, seg_output, seg_plans;
  seg->add_option("--input", seg_input, "input PLY")->required();
  seg->add_option("--checkpoint", seg_ckpt, "trained checkpoint")->required();
  seg->add_option("--output", seg_output, "labeled output PLY")->required();
  seg->add_option("--plans", seg_plans, "plan cache for the input");
  common.attach(seg);
  hierarchy.attach(seg);
  train_opts.attach(seg);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "compare predicted labels against ground truth");
  std::string ev_pred, ev_truth, ev_confusion;
  int ev_classes = 2;
  ev->add_option("--pred", ev_pred, "predicted PLY")->required();
  ev->add_option("--truth", ev_truth, "ground-truth PLY")->required();
  ev->add_option("--classes", ev_classes, "number of classes")->required();
  ev->add_option("--confusion-csv", ev_confusion, "confusion matrix CSV path");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "report Prep/FP/Full/Mem for one scan");
  std::string bench_input;
  bench->add_option("--input", bench_input, "input PLY")->required();
  common.attach(bench);
  hierarchy.attach(bench);
  train_opts.attach(bench);

  CLI11_PARSE(app, argc, argv);

  try {
    common.apply();
    if (gen->parsed()) return cmd_gen_scene(gen_scene_file, gen_output, common);
    if (pre->parsed())
      return cmd_precompute(pre_input, pre_output, common, hierarchy, scaling_check);
    if (tr->parsed())
      return cmd_train(train_inputs, ckpt_out, resume, train_plans, loss_csv, common, train_opts,
                       hierarchy, tr);
    if (seg->parsed())
      return cmd_segment(seg_input, seg_ckpt, seg_output, seg_plans, common, train_opts, hierarchy,
                         seg);
    if (ev->parsed()) return cmd_evaluate(ev_pred, ev_truth, ev_classes, ev_confusion);
    if (bench->parsed())
      return cmd_benchmark(bench_input, common, train_opts, hierarchy, bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
