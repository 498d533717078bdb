#pragma once

#include <string>
#include <vector>

#include "tc/engine.hpp"
#include "tc/precompute.hpp"

namespace tc {

class NetworkError : public std::runtime_error {
 public:
  explicit NetworkError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input signal selection; all channels are normalized to [0,1].
// The distance signal is per-neighbor rather than per-point, so enabling
// it routes the per-level distance images into the first gather of every
// level instead of adding a level-0 column (an optional placeholder
// column keeps the m arithmetic of the D/H/N/RGB table).
struct InputSignalConfig {
  bool distance = true;
  bool height = true;
  bool normals = true;
  bool rgb = false;
  bool distance_placeholder_column = true;

  int channels() const {
    int m = 0;
    if (distance && distance_placeholder_column) m += 1;
    if (height) m += 1;
    if (normals) m += 3;
    if (rgb) m += 3;
    return m;
  }
};

struct NetworkSpec {
  int input_channels = 5;  // m
  int num_classes = 2;     // n
  bool distance_images = true;
  PoolMode pool_mode = PoolMode::Average;
  int levels = 3;
  // 3x3 tangent convs per level walked by the U; encoder order. Used both
  // to build the parameter set and for receptive-field arithmetic.
  std::vector<int> encoder_convs{2, 2, 2};
  std::vector<int> decoder_convs{2, 2};  // level 0, level 1
  std::vector<int> encoder_channels{32, 64, 128};
};

// Receptive field in meters: every 3x3 conv at level k contributes
// R_k = 2 * r0 * 2^k.
double receptive_field(const NetworkSpec& spec, double pixel_size0);

// Builds the N x m level-0 input tensor from the selected signals.
// H = (z - z_min) / (z_max - z_min) per scan (all-zero if degenerate),
// N = (n_p + 1) / 2, RGB passthrough, D placeholder column = 0.
std::vector<double> assemble_inputs(const PointCloud& level0, const std::vector<TangentFrame>& frames,
                                    const InputSignalConfig& config);

// The U-shaped segmentation network: two pool/unpool pairs, skip
// connections by channel concatenation, Leaky ReLU 0.2 everywhere except
// the final 1x1 projection to class scores.
class Network {
 public:
  Network(const NetworkSpec& spec, uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  std::vector<TensorPtr>& params() { return params_; }
  const std::vector<std::string>& param_names() const { return names_; }

  // Level-0 logits, shape N x n. The hierarchy must stay alive until
  // Graph::backward has run (plans are captured by reference).
  TensorPtr forward(Graph& graph, const Hierarchy& hierarchy, const TensorPtr& inputs) const;

  void save_checkpoint(const std::string& path, const std::vector<AdamState>& adam,
                       int64_t epoch) const;
  // Returns the stored epoch counter.
  int64_t load_checkpoint(const std::string& path, std::vector<AdamState>* adam);

 private:
  TensorPtr tangent_layer(Graph& graph, const TensorPtr& f, const Hierarchy& h, int level,
                          int param_index, bool with_distance, bool activate) const;

  NetworkSpec spec_;
  std::vector<TensorPtr> params_;  // kernel, bias, kernel, bias, ...
  std::vector<std::string> names_;
};

}  // namespace tc
