#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tc/precompute.hpp"

namespace tc {

class EngineError : public std::runtime_error {
 public:
  explicit EngineError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class PoolMode { Average, Max };

// Dense value + gradient pair. Rank 2 tensors are N x C feature maps,
// rank 3 are N x L x C gathered intermediates, rank 0/1 scalars.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;

  static std::shared_ptr<Tensor> make(std::vector<int> shape);
  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
};

using TensorPtr = std::shared_ptr<Tensor>;

// Tape of backward closures recorded by forward ops. One graph per
// forward/backward pass; parameters live outside and are reused.
class Graph {
 public:
  explicit Graph(bool check_finite = true) : check_finite_(check_finite) {}

  // Wraps existing data as a graph leaf (no copy of gradient semantics;
  // gradients accumulate into t->grad).
  TensorPtr leaf(std::vector<int> shape, const std::vector<double>& values);

  // M[n,l,c] = F[I[n,l], c]; backward scatter-adds.
  TensorPtr gather(const TensorPtr& f, const int32_t* index, int pixels);

  // M = sum_i H_i (*) M_i with constant weights (no gradient into H).
  TensorPtr weighted_mix(const std::vector<TensorPtr>& parts,
                         const std::vector<const double*>& weights);

  // Appends one constant channel (N x L values) to an N x L x C tensor.
  TensorPtr append_constant_channel(const TensorPtr& m, const double* channel);

  // out[n,o] = sum_{l,c} M[n,l,c] * W[l,c,o] + bias[o].
  TensorPtr tangent_conv(const TensorPtr& m, const TensorPtr& kernel, const TensorPtr& bias);

  // Per-point affine map, W of shape C_in x C_out.
  TensorPtr conv1x1(const TensorPtr& f, const TensorPtr& kernel, const TensorPtr& bias);

  TensorPtr leaky_relu(const TensorPtr& f, double slope = 0.2);

  TensorPtr pool(const TensorPtr& f, const PoolPlan& plan, PoolMode mode);
  TensorPtr unpool(const TensorPtr& f, const PoolPlan& plan);

  TensorPtr concat(const TensorPtr& a, const TensorPtr& b);

  // Mean over labeled points of class_weight[label] * (-log softmax[label]).
  // Unlabeled points are skipped; throws if none are labeled.
  TensorPtr weighted_cross_entropy(const TensorPtr& logits, const std::vector<int32_t>& labels,
                                   const std::vector<double>& class_weights);

  // sum_i coeffs[i] * t[i]; test utility for scalarizing outputs.
  TensorPtr weighted_sum(const TensorPtr& t, const std::vector<double>& coeffs);

  // Seeds d(loss)/d(loss) = 1 and runs the tape in reverse.
  void backward(const TensorPtr& loss);

 private:
  TensorPtr record(TensorPtr out, std::function<void()> backward_fn, const char* op);

  std::vector<std::function<void()>> tape_;
  bool check_finite_;
};

struct AdamState {
  std::vector<double> m, v;
  int64_t step = 0;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One Adam update over a parameter set; states are matched by position.
void adam_step(const std::vector<TensorPtr>& params, std::vector<AdamState>& states,
               const AdamConfig& config);

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void fan_uniform_init(Tensor& t, int fan_in, int fan_out, uint64_t seed);

}  // namespace tc
