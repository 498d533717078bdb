#include "tc/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace tc {

void TrainConfig::validate() const {
  if (epochs < 0) throw TrainError("epochs must be >= 0");
  if (learning_rate < 0.0) throw TrainError("learning rate must be >= 0");
  if (sphere_radius <= 0.0) throw TrainError("sphere radius must be > 0");
  if (rotations < 1) throw TrainError("rotations must be >= 1");
  if (num_classes < 2) throw TrainError("need at least 2 classes");
  if (signals.channels() == 0) throw TrainError("no input signals selected");
}

NetworkSpec make_network_spec(const TrainConfig& config) {
  NetworkSpec spec;
  spec.input_channels = config.signals.channels();
  spec.num_classes = config.num_classes;
  spec.distance_images = config.signals.distance;
  spec.pool_mode = config.pool_mode;
  spec.decoder_convs = {config.decoder_l0_convs, 2};
  return spec;
}

std::vector<Batch> make_batches(const PointCloud& scene, const std::string& scene_id,
                                const TrainConfig& config, uint64_t seed) {
  if (!scene.has_labels()) throw TrainError("training scene has no labels");
  std::vector<Batch> batches;
  if (config.batch_strategy == BatchStrategy::WholeScene) {
    batches.push_back({scene, scene_id + ":whole"});
    return batches;
  }

  std::vector<int> labeled;
  for (int i = 0; i < static_cast<int>(scene.size()); ++i)
    if (scene.labels[i] != kUnlabeled) labeled.push_back(i);
  if (labeled.empty()) throw TrainError("no labeled points to center spheres on");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, labeled.size() - 1);
  const double r2 = config.sphere_radius * config.sphere_radius;
  for (int b = 0; b < config.spheres_per_scene; ++b) {
    const Vec3 center = scene.positions[static_cast<std::size_t>(labeled[pick(rng)])];
    Batch batch;
    batch.cache_key = scene_id + ":sphere" + std::to_string(b);
    for (std::size_t i = 0; i < scene.size(); ++i) {
      if (squared_norm(scene.positions[i] - center) > r2) continue;
      batch.cloud.positions.push_back(scene.positions[i]);
      batch.cloud.labels.push_back(scene.labels[i]);
      if (scene.has_colors()) batch.cloud.colors.push_back(scene.colors[i]);
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::vector<PointCloud> rotate_augment(const PointCloud& cloud, int count) {
  if (count < 1) throw TrainError("rotation count must be >= 1");
  Vec3 centroid{0.0, 0.0, 0.0};
  for (const auto& p : cloud.positions) centroid = centroid + p;
  if (!cloud.positions.empty()) centroid = centroid * (1.0 / static_cast<double>(cloud.size()));

  std::vector<PointCloud> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    if (k == 0) {
      out.push_back(cloud);
      continue;
    }
    const double angle = 2.0 * std::numbers::pi * k / count;
    const double c = std::cos(angle), s = std::sin(angle);
    PointCloud rotated = cloud;
    for (auto& p : rotated.positions) {
      const double x = p[0] - centroid[0], y = p[1] - centroid[1];
      p[0] = centroid[0] + c * x - s * y;
      p[1] = centroid[1] + s * x + c * y;
    }
    out.push_back(std::move(rotated));
  }
  return out;
}

PreparedBatch prepare_batch(const PointCloud& cloud, const HierarchyConfig& hierarchy_config,
                            const InputSignalConfig& signals) {
  PreparedBatch out;
  out.hierarchy = build_hierarchy(cloud, hierarchy_config);
  out.input_channels = signals.channels();
  out.inputs = assemble_inputs(out.hierarchy.levels[0].cloud, out.hierarchy.levels[0].frames,
                               signals);
  return out;
}

namespace {

// Scales all parameter gradients so their global L2 norm stays under cap.
void clip_gradients(const std::vector<TensorPtr>& params, double cap) {
  if (cap <= 0.0) return;
  double sq = 0.0;
  for (const auto& p : params)
    for (double g : p->grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm <= cap) return;
  const double scale = cap / norm;
  for (const auto& p : params)
    for (double& g : p->grad) g *= scale;
}

}  // namespace

TrainOutput train(Network& net, std::vector<AdamState>& adam,
                  const std::vector<PointCloud>& scenes, const TrainConfig& config,
                  int64_t start_epoch) {
  config.validate();
  if (scenes.empty()) throw TrainError("no training scenes");

  // Batch descriptors over all scenes and rotations; plans fill lazily.
  struct Slot {
    PointCloud cloud;
    std::string key;
    std::unique_ptr<PreparedBatch> prepared;
  };
  std::vector<Slot> slots;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const auto rotations = rotate_augment(scenes[s], config.rotations);
    for (std::size_t r = 0; r < rotations.size(); ++r) {
      const std::string id = "scene" + std::to_string(s) + ":rot" + std::to_string(r);
      for (auto& batch : make_batches(rotations[r], id, config, config.seed + 7919 * s + r)) {
        slots.push_back({std::move(batch.cloud), std::move(batch.cache_key), nullptr});
      }
    }
  }

  TrainOutput out;
  {
    // Negative-log-histogram weights from the labels the loss will see.
    std::vector<int32_t> all_labels;
    for (const auto& scene : scenes) {
      auto [level0, plan] = base_quantize(scene, config.hierarchy.base_cell);
      all_labels.insert(all_labels.end(), level0.labels.begin(), level0.labels.end());
    }
    out.class_weight = config.neg_log_weights
                           ? class_weights(all_labels, config.num_classes)
                           : std::vector<double>(static_cast<std::size_t>(config.num_classes), 1.0);
  }

  AdamConfig adam_config;
  adam_config.lr = config.learning_rate;

  std::vector<std::size_t> order(slots.size());

  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::mt19937_64 shuffle_rng(config.seed ^ (0x9e3779b97f4a7c15ull * static_cast<uint64_t>(
                                                   start_epoch + epoch + 1)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    adam_config.lr = config.learning_rate *
                     std::pow(config.lr_decay, static_cast<double>(start_epoch + epoch));

    double loss_sum = 0.0;
    for (std::size_t bi : order) {
      Slot& slot = slots[bi];
      if (!slot.prepared) {
        slot.prepared = std::make_unique<PreparedBatch>(
            prepare_batch(slot.cloud, config.hierarchy, config.signals));
      }
      PreparedBatch& batch = *slot.prepared;
      const int n0 = static_cast<int>(batch.hierarchy.levels[0].cloud.size());

      for (auto& p : net.params()) p->zero_grad();
      Graph graph;
      TensorPtr inputs = graph.leaf({n0, batch.input_channels}, batch.inputs);
      TensorPtr logits;
      TensorPtr loss;
      try {
        logits = net.forward(graph, batch.hierarchy, inputs);
        loss = graph.weighted_cross_entropy(logits, batch.hierarchy.levels[0].cloud.labels,
                                            out.class_weight);
      } catch (const EngineError& e) {
        throw TrainError("aborted at epoch " + std::to_string(start_epoch + epoch) + ", batch '" +
                         slot.key + "': " + e.what());
      }
      if (!std::isfinite(loss->value[0]))
        throw TrainError("non-finite loss at epoch " + std::to_string(start_epoch + epoch) +
                         ", batch '" + slot.key + "'");
      graph.backward(loss);
      clip_gradients(net.params(), config.grad_clip);
      if (config.learning_rate > 0.0) adam_step(net.params(), adam, adam_config);
      loss_sum += loss->value[0];
    }
    out.epoch_loss.push_back(loss_sum / static_cast<double>(slots.size()));
  }
  return out;
}

TrainOutput train_single(Network& net, std::vector<AdamState>& adam, const PreparedBatch& batch,
                         const TrainConfig& config, int64_t start_epoch) {
  config.validate();
  const PointCloud& level0 = batch.hierarchy.levels[0].cloud;
  if (!level0.has_labels()) throw TrainError("prepared batch has no labels");

  TrainOutput out;
  out.class_weight =
      config.neg_log_weights
          ? class_weights(level0.labels, config.num_classes)
          : std::vector<double>(static_cast<std::size_t>(config.num_classes), 1.0);

  AdamConfig adam_config;
  adam_config.lr = config.learning_rate;
  const int n0 = static_cast<int>(level0.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    adam_config.lr = config.learning_rate *
                     std::pow(config.lr_decay, static_cast<double>(start_epoch + epoch));
    for (auto& p : net.params()) p->zero_grad();
    Graph graph;
    TensorPtr inputs = graph.leaf({n0, batch.input_channels}, batch.inputs);
    TensorPtr loss;
    try {
      TensorPtr logits = net.forward(graph, batch.hierarchy, inputs);
      loss = graph.weighted_cross_entropy(logits, level0.labels, out.class_weight);
    } catch (const EngineError& e) {
      throw TrainError("aborted at epoch " + std::to_string(start_epoch + epoch) + ": " +
                       e.what());
    }
    if (!std::isfinite(loss->value[0]))
      throw TrainError("non-finite loss at epoch " + std::to_string(start_epoch + epoch));
    graph.backward(loss);
    clip_gradients(net.params(), config.grad_clip);
    if (config.learning_rate > 0.0) adam_step(net.params(), adam, adam_config);
    out.epoch_loss.push_back(loss->value[0]);
  }
  return out;
}

namespace {

std::vector<int32_t> argmax_labels(const Tensor& logits) {
  const int n = logits.shape[0], classes = logits.shape[1];
  std::vector<int32_t> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double* row = &logits.value[static_cast<std::size_t>(i) * classes];
    int best = 0;
    for (int c = 1; c < classes; ++c)
      if (row[c] > row[best]) best = c;  // strict: ties keep the smaller id
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

}  // namespace

std::vector<int32_t> predict_level0(const Network& net, const PreparedBatch& batch) {
  Graph graph;
  const int n0 = static_cast<int>(batch.hierarchy.levels[0].cloud.size());
  TensorPtr inputs = graph.leaf({n0, batch.input_channels}, batch.inputs);
  TensorPtr logits = net.forward(graph, batch.hierarchy, inputs);
  return argmax_labels(*logits);
}

std::vector<int32_t> predict_full(const Network& net, const PreparedBatch& batch) {
  const std::vector<int32_t> level0 = predict_level0(net, batch);
  const PoolPlan& base = batch.hierarchy.base_plan;
  std::vector<int32_t> full(static_cast<std::size_t>(base.fine_count));
  for (int i = 0; i < base.fine_count; ++i)
    full[static_cast<std::size_t>(i)] = level0[static_cast<std::size_t>(base.parent[i])];
  return full;
}

std::vector<NoiseRow> noise_harness(const SceneSpec& train_template,
                                    const SceneSpec& test_template,
                                    const std::vector<double>& sigmas, const TrainConfig& config,
                                    int train_scenes, uint64_t scene_seed) {
  std::vector<NoiseRow> rows;
  for (std::size_t si = 0; si < sigmas.size(); ++si) {
    SceneSpec train_spec = train_template;
    SceneSpec test_spec = test_template;
    train_spec.noise_sigma = sigmas[si];
    test_spec.noise_sigma = sigmas[si];

    std::vector<PointCloud> scenes;
    for (int s = 0; s < train_scenes; ++s)
      scenes.push_back(generate_scene(train_spec, scene_seed + 101 * s));
    const PointCloud test = generate_scene(test_spec, scene_seed + 99991);

    Network net(make_network_spec(config), config.seed);
    std::vector<AdamState> adam;
    train(net, adam, scenes, config, 0);

    PreparedBatch batch = prepare_batch(test, config.hierarchy, config.signals);
    const auto predictions = predict_full(net, batch);
    rows.push_back({sigmas[si], evaluate(predictions, test.labels, config.num_classes)});
  }
  return rows;
}

void write_loss_csv(const std::vector<double>& losses, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw TrainError("cannot write loss csv '" + path + "'");
  out << "epoch,mean_loss\n";
  out.precision(17);
  for (std::size_t i = 0; i < losses.size(); ++i) out << i << "," << losses[i] << "\n";
}

void write_metrics_csv(const Metrics& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw TrainError("cannot write metrics csv '" + path + "'");
  out.precision(17);
  out << "metric,value\nmIoU," << m.miou << "\nmA," << m.mean_accuracy << "\noA,"
      << m.overall_accuracy << "\n";
}

}  // namespace tc
