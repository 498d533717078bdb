#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tc/metrics.hpp"
#include "tc/network.hpp"
#include "tc/precompute.hpp"
#include "tc/scene.hpp"

namespace tc {

class TrainError : public std::runtime_error {
 public:
  explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class BatchStrategy { WholeScene, Sphere };

struct TrainConfig {
  int epochs = 100;
  uint64_t seed = 0;
  double learning_rate = 1e-4;
  double lr_decay = 1.0;    // per-epoch multiplicative factor
  double grad_clip = 0.0;   // global gradient-norm cap; 0 disables
  BatchStrategy batch_strategy = BatchStrategy::WholeScene;
  double sphere_radius = 6.0;
  int spheres_per_scene = 4;
  int rotations = 8;  // copies per scene, rotated about the vertical axis
  bool neg_log_weights = true;
  int num_classes = 2;
  InputSignalConfig signals;
  HierarchyConfig hierarchy;
  PoolMode pool_mode = PoolMode::Average;
  int decoder_l0_convs = 2;

  void validate() const;
};

NetworkSpec make_network_spec(const TrainConfig& config);

struct Batch {
  PointCloud cloud;
  std::string cache_key;
};

// whole_scene: one batch per scene. sphere: spheres_per_scene batches,
// each centered on a uniformly drawn labeled point with all points within
// sphere_radius. Deterministic under seed; centers are fixed up front so
// plan caches stay valid across epochs.
std::vector<Batch> make_batches(const PointCloud& scene, const std::string& scene_id,
                                const TrainConfig& config, uint64_t seed);

// Rotations by 2*pi*k/count about +z through the scan centroid; element 0
// is the identity copy.
std::vector<PointCloud> rotate_augment(const PointCloud& cloud, int count);

// Hierarchy plus the assembled level-0 input tensor for one batch.
struct PreparedBatch {
  Hierarchy hierarchy;
  std::vector<double> inputs;
  int input_channels = 0;
};

PreparedBatch prepare_batch(const PointCloud& cloud, const HierarchyConfig& hierarchy_config,
                            const InputSignalConfig& signals);

struct TrainOutput {
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  std::vector<double> class_weight;
};

// Runs epochs x batches of forward/backward/adam. Batches are prepared on
// first touch and cached for the duration of the call. Deterministic for
// a fixed seed. Throws TrainError with diagnostics on a non-finite loss.
TrainOutput train(Network& net, std::vector<AdamState>& adam,
                  const std::vector<PointCloud>& scenes, const TrainConfig& config,
                  int64_t start_epoch = 0);

// Same loop over one already-prepared whole-scene batch, e.g. restored
// from a plan cache. Rotation and sphere settings are ignored.
TrainOutput train_single(Network& net, std::vector<AdamState>& adam, const PreparedBatch& batch,
                         const TrainConfig& config, int64_t start_epoch = 0);

// Per-point argmax at level 0 (ties: smaller class id).
std::vector<int32_t> predict_level0(const Network& net, const PreparedBatch& batch);

// Level-0 predictions mapped back to the original points through the base
// quantization (every original point inherits its representative's label).
std::vector<int32_t> predict_full(const Network& net, const PreparedBatch& batch);

struct NoiseRow {
  double sigma;
  Metrics metrics;
};

// Trains one model per sigma on freshly generated noisy scenes and
// evaluates on a noisy test scene; values are emitted without monotonicity
// assertions.
std::vector<NoiseRow> noise_harness(const SceneSpec& train_template,
                                    const SceneSpec& test_template,
                                    const std::vector<double>& sigmas, const TrainConfig& config,
                                    int train_scenes, uint64_t scene_seed);

void write_loss_csv(const std::vector<double>& losses, const std::string& path);
void write_metrics_csv(const Metrics& m, const std::string& path);

}  // namespace tc
