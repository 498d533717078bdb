#include "tc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace tc {

TensorPtr Tensor::make(std::vector<int> shape) {
  auto t = std::make_shared<Tensor>();
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  t->shape = std::move(shape);
  t->value.assign(n, 0.0);
  t->grad.assign(n, 0.0);
  return t;
}

TensorPtr Graph::record(TensorPtr out, std::function<void()> backward_fn, const char* op) {
  if (check_finite_) {
    for (double v : out->value) {
      if (!std::isfinite(v)) throw EngineError(std::string("non-finite value produced by ") + op);
    }
  }
  tape_.push_back(std::move(backward_fn));
  return out;
}

void Graph::backward(const TensorPtr& loss) {
  if (loss->size() != 1) throw EngineError("backward expects a scalar loss");
  loss->grad[0] = 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
}

TensorPtr Graph::leaf(std::vector<int> shape, const std::vector<double>& values) {
  auto t = Tensor::make(std::move(shape));
  if (t->size() != values.size()) throw EngineError("leaf data size mismatch");
  t->value = values;
  return t;
}

TensorPtr Graph::gather(const TensorPtr& f, const int32_t* index, int pixels) {
  if (f->shape.size() != 2) throw EngineError("gather expects an N x C input");
  const int n = f->dim(0), c = f->dim(1);
  auto out = Tensor::make({n, pixels, c});
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < pixels; ++l) {
      const int32_t src = index[static_cast<std::size_t>(i) * pixels + l];
      if (src < 0 || src >= n) throw EngineError("gather index out of range");
      const double* from = &f->value[static_cast<std::size_t>(src) * c];
      double* to = &out->value[(static_cast<std::size_t>(i) * pixels + l) * c];
      std::copy(from, from + c, to);
    }
  }
  return record(out, [f, out, index, pixels, n, c]() {
    for (int i = 0; i < n; ++i) {
      for (int l = 0; l < pixels; ++l) {
        const int32_t src = index[static_cast<std::size_t>(i) * pixels + l];
        const double* g = &out->grad[(static_cast<std::size_t>(i) * pixels + l) * c];
        double* to = &f->grad[static_cast<std::size_t>(src) * c];
        for (int ch = 0; ch < c; ++ch) to[ch] += g[ch];
      }
    }
  }, "gather");
}

TensorPtr Graph::weighted_mix(const std::vector<TensorPtr>& parts,
                              const std::vector<const double*>& weights) {
  if (parts.empty() || parts.size() != weights.size())
    throw EngineError("weighted_mix needs matching tensors and weights");
  const auto& shape = parts[0]->shape;
  if (shape.size() != 3) throw EngineError("weighted_mix expects N x L x C tensors");
  for (const auto& p : parts)
    if (p->shape != shape) throw EngineError("weighted_mix shape mismatch");
  const int n = shape[0], pixels = shape[1], c = shape[2];
  auto out = Tensor::make(shape);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const double* w = weights[i];
    const double* v = parts[i]->value.data();
    double* o = out->value.data();
    for (int row = 0; row < n * pixels; ++row) {
      const double wi = w[row];
      for (int ch = 0; ch < c; ++ch) o[row * c + ch] += wi * v[row * c + ch];
    }
  }
  return record(out, [parts, weights, out, n, pixels, c]() {
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const double* w = weights[i];
      double* g = parts[i]->grad.data();
      const double* og = out->grad.data();
      for (int row = 0; row < n * pixels; ++row) {
        const double wi = w[row];
        for (int ch = 0; ch < c; ++ch) g[row * c + ch] += wi * og[row * c + ch];
      }
    }
  }, "weighted_mix");
}

TensorPtr Graph::append_constant_channel(const TensorPtr& m, const double* channel) {
  if (m->shape.size() != 3) throw EngineError("append_constant_channel expects N x L x C");
  const int n = m->dim(0), pixels = m->dim(1), c = m->dim(2);
  auto out = Tensor::make({n, pixels, c + 1});
  for (int row = 0; row < n * pixels; ++row) {
    const double* from = &m->value[static_cast<std::size_t>(row) * c];
    double* to = &out->value[static_cast<std::size_t>(row) * (c + 1)];
    std::copy(from, from + c, to);
    to[c] = channel[row];
  }
  return record(out, [m, out, n, pixels, c]() {
    for (int row = 0; row < n * pixels; ++row) {
      const double* g = &out->grad[static_cast<std::size_t>(row) * (c + 1)];
      double* to = &m->grad[static_cast<std::size_t>(row) * c];
      for (int ch = 0; ch < c; ++ch) to[ch] += g[ch];
    }
  }, "append_constant_channel");
}

TensorPtr Graph::tangent_conv(const TensorPtr& m, const TensorPtr& kernel, const TensorPtr& bias) {
  if (m->shape.size() != 3 || kernel->shape.size() != 3)
    throw EngineError("tangent_conv expects M: N x L x C_in and W: L x C_in x C_out");
  const int n = m->dim(0), pixels = m->dim(1), cin = m->dim(2);
  if (kernel->dim(0) != pixels || kernel->dim(1) != cin)
    throw EngineError("tangent_conv kernel shape mismatch");
  const int cout = kernel->dim(2);
  if (bias->size() != static_cast<std::size_t>(cout))
    throw EngineError("tangent_conv bias shape mismatch");

  auto out = Tensor::make({n, cout});
  const int flat = pixels * cin;
  parallel_for(0, n, [&](int i) {
    const double* mv = &m->value[static_cast<std::size_t>(i) * flat];
    double* ov = &out->value[static_cast<std::size_t>(i) * cout];
    std::copy(bias->value.begin(), bias->value.end(), ov);
    for (int lc = 0; lc < flat; ++lc) {
      const double x = mv[lc];
      const double* w = &kernel->value[static_cast<std::size_t>(lc) * cout];
      for (int o = 0; o < cout; ++o) ov[o] += x * w[o];
    }
  });
  return record(out, [m, kernel, bias, out, n, cout, flat]() {
    parallel_for(0, n, [&](int i) {
      const double* og = &out->grad[static_cast<std::size_t>(i) * cout];
      double* mg = &m->grad[static_cast<std::size_t>(i) * flat];
      for (int lc = 0; lc < flat; ++lc) {
        const double* w = &kernel->value[static_cast<std::size_t>(lc) * cout];
        double acc = 0.0;
        for (int o = 0; o < cout; ++o) acc += og[o] * w[o];
        mg[lc] += acc;
      }
    });
    // Weight/bias gradients reduce over points: sequential, fixed order.
    for (int i = 0; i < n; ++i) {
      const double* mv = &m->value[static_cast<std::size_t>(i) * flat];
      const double* og = &out->grad[static_cast<std::size_t>(i) * cout];
      for (int lc = 0; lc < flat; ++lc) {
        const double x = mv[lc];
        if (x == 0.0) continue;
        double* wg = &kernel->grad[static_cast<std::size_t>(lc) * cout];
        for (int o = 0; o < cout; ++o) wg[o] += x * og[o];
      }
      for (int o = 0; o < cout; ++o) bias->grad[o] += og[o];
    }
  }, "tangent_conv");
}

TensorPtr Graph::conv1x1(const TensorPtr& f, const TensorPtr& kernel, const TensorPtr& bias) {
  if (f->shape.size() != 2 || kernel->shape.size() != 2)
    throw EngineError("conv1x1 expects F: N x C_in and W: C_in x C_out");
  const int n = f->dim(0), cin = f->dim(1);
  if (kernel->dim(0) != cin) throw EngineError("conv1x1 kernel shape mismatch");
  const int cout = kernel->dim(1);
  if (bias->size() != static_cast<std::size_t>(cout)) throw EngineError("conv1x1 bias mismatch");

  auto out = Tensor::make({n, cout});
  parallel_for(0, n, [&](int i) {
    const double* fv = &f->value[static_cast<std::size_t>(i) * cin];
    double* ov = &out->value[static_cast<std::size_t>(i) * cout];
    std::copy(bias->value.begin(), bias->value.end(), ov);
    for (int c = 0; c < cin; ++c) {
      const double x = fv[c];
      const double* w = &kernel->value[static_cast<std::size_t>(c) * cout];
      for (int o = 0; o < cout; ++o) ov[o] += x * w[o];
    }
  });
  return record(out, [f, kernel, bias, out, n, cin, cout]() {
    parallel_for(0, n, [&](int i) {
      const double* og = &out->grad[static_cast<std::size_t>(i) * cout];
      double* fg = &f->grad[static_cast<std::size_t>(i) * cin];
      for (int c = 0; c < cin; ++c) {
        const double* w = &kernel->value[static_cast<std::size_t>(c) * cout];
        double acc = 0.0;
        for (int o = 0; o < cout; ++o) acc += og[o] * w[o];
        fg[c] += acc;
      }
    });
    for (int i = 0; i < n; ++i) {
      const double* fv = &f->value[static_cast<std::size_t>(i) * cin];
      const double* og = &out->grad[static_cast<std::size_t>(i) * cout];
      for (int c = 0; c < cin; ++c) {
        double* wg = &kernel->grad[static_cast<std::size_t>(c) * cout];
        for (int o = 0; o < cout; ++o) wg[o] += fv[c] * og[o];
      }
      for (int o = 0; o < cout; ++o) bias->grad[o] += og[o];
    }
  }, "conv1x1");
}

TensorPtr Graph::leaky_relu(const TensorPtr& f, double slope) {
  auto out = Tensor::make(f->shape);
  for (std::size_t i = 0; i < f->size(); ++i) {
    const double x = f->value[i];
    out->value[i] = x > 0.0 ? x : slope * x;
  }
  return record(out, [f, out, slope]() {
    for (std::size_t i = 0; i < f->size(); ++i)
      f->grad[i] += out->grad[i] * (f->value[i] > 0.0 ? 1.0 : slope);
  }, "leaky_relu");
}

TensorPtr Graph::pool(const TensorPtr& f, const PoolPlan& plan, PoolMode mode) {
  if (f->shape.size() != 2) throw EngineError("pool expects N x C");
  if (f->dim(0) != plan.fine_count) throw EngineError("pool plan/tensor size mismatch");
  const int c = f->dim(1);
  auto out = Tensor::make({plan.coarse_count, c});
  // Max mode remembers the winning member per output slot (smallest index
  // wins ties because members are ascending and comparison is strict).
  auto argmax = std::make_shared<std::vector<int32_t>>();
  if (mode == PoolMode::Max)
    argmax->assign(static_cast<std::size_t>(plan.coarse_count) * c, -1);

  for (int row = 0; row < plan.coarse_count; ++row) {
    const int begin = plan.offsets[row], end = plan.offsets[row + 1];
    double* ov = &out->value[static_cast<std::size_t>(row) * c];
    if (mode == PoolMode::Average) {
      for (int m = begin; m < end; ++m) {
        const double* fv = &f->value[static_cast<std::size_t>(plan.members[m]) * c];
        for (int ch = 0; ch < c; ++ch) ov[ch] += fv[ch];
      }
      const double inv = 1.0 / static_cast<double>(end - begin);
      for (int ch = 0; ch < c; ++ch) ov[ch] *= inv;
    } else {
      for (int ch = 0; ch < c; ++ch) {
        double best = -std::numeric_limits<double>::infinity();
        int32_t best_member = -1;
        for (int m = begin; m < end; ++m) {
          const double v = f->value[static_cast<std::size_t>(plan.members[m]) * c + ch];
          if (v > best) {
            best = v;
            best_member = plan.members[m];
          }
        }
        ov[ch] = best;
        (*argmax)[static_cast<std::size_t>(row) * c + ch] = best_member;
      }
    }
  }
  const PoolPlan* planp = &plan;
  return record(out, [f, out, planp, mode, argmax, c]() {
    if (mode == PoolMode::Average) {
      for (int row = 0; row < planp->coarse_count; ++row) {
        const int begin = planp->offsets[row], end = planp->offsets[row + 1];
        const double inv = 1.0 / static_cast<double>(end - begin);
        const double* og = &out->grad[static_cast<std::size_t>(row) * c];
        for (int m = begin; m < end; ++m) {
          double* fg = &f->grad[static_cast<std::size_t>(planp->members[m]) * c];
          for (int ch = 0; ch < c; ++ch) fg[ch] += og[ch] * inv;
        }
      }
    } else {
      for (int row = 0; row < planp->coarse_count; ++row) {
        const double* og = &out->grad[static_cast<std::size_t>(row) * c];
        for (int ch = 0; ch < c; ++ch) {
          const int32_t member = (*argmax)[static_cast<std::size_t>(row) * c + ch];
          f->grad[static_cast<std::size_t>(member) * c + ch] += og[ch];
        }
      }
    }
  }, "pool");
}

TensorPtr Graph::unpool(const TensorPtr& f, const PoolPlan& plan) {
  if (f->shape.size() != 2) throw EngineError("unpool expects N x C");
  if (f->dim(0) != plan.coarse_count) throw EngineError("unpool plan/tensor size mismatch");
  const int c = f->dim(1);
  auto out = Tensor::make({plan.fine_count, c});
  for (int i = 0; i < plan.fine_count; ++i) {
    const int32_t parent = plan.parent[i];
    const double* fv = &f->value[static_cast<std::size_t>(parent) * c];
    std::copy(fv, fv + c, &out->value[static_cast<std::size_t>(i) * c]);
  }
  const PoolPlan* planp = &plan;
  return record(out, [f, out, planp, c]() {
    for (int i = 0; i < planp->fine_count; ++i) {
      const int32_t parent = planp->parent[i];
      const double* og = &out->grad[static_cast<std::size_t>(i) * c];
      double* fg = &f->grad[static_cast<std::size_t>(parent) * c];
      for (int ch = 0; ch < c; ++ch) fg[ch] += og[ch];
    }
  }, "unpool");
}

TensorPtr Graph::concat(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape.size() != 2 || b->shape.size() != 2 || a->dim(0) != b->dim(0))
    throw EngineError("concat expects N x C_a and N x C_b");
  const int n = a->dim(0), ca = a->dim(1), cb = b->dim(1);
  auto out = Tensor::make({n, ca + cb});
  for (int i = 0; i < n; ++i) {
    double* to = &out->value[static_cast<std::size_t>(i) * (ca + cb)];
    std::copy(&a->value[static_cast<std::size_t>(i) * ca],
              &a->value[static_cast<std::size_t>(i) * ca] + ca, to);
    std::copy(&b->value[static_cast<std::size_t>(i) * cb],
              &b->value[static_cast<std::size_t>(i) * cb] + cb, to + ca);
  }
  return record(out, [a, b, out, n, ca, cb]() {
    for (int i = 0; i < n; ++i) {
      const double* og = &out->grad[static_cast<std::size_t>(i) * (ca + cb)];
      double* ag = &a->grad[static_cast<std::size_t>(i) * ca];
      double* bg = &b->grad[static_cast<std::size_t>(i) * cb];
      for (int ch = 0; ch < ca; ++ch) ag[ch] += og[ch];
      for (int ch = 0; ch < cb; ++ch) bg[ch] += og[ca + ch];
    }
  }, "concat");
}

TensorPtr Graph::weighted_cross_entropy(const TensorPtr& logits,
                                        const std::vector<int32_t>& labels,
                                        const std::vector<double>& class_weights) {
  if (logits->shape.size() != 2) throw EngineError("cross entropy expects N x n_classes");
  const int n = logits->dim(0), classes = logits->dim(1);
  if (labels.size() != static_cast<std::size_t>(n)) throw EngineError("label count mismatch");

  // Softmax probabilities kept for the backward pass.
  auto probs = std::make_shared<std::vector<double>>(logits->size());
  int labeled = 0;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* lv = &logits->value[static_cast<std::size_t>(i) * classes];
    double* pv = &(*probs)[static_cast<std::size_t>(i) * classes];
    double max_logit = lv[0];
    for (int c = 1; c < classes; ++c) max_logit = std::max(max_logit, lv[c]);
    double denom = 0.0;
    for (int c = 0; c < classes; ++c) {
      pv[c] = std::exp(lv[c] - max_logit);
      denom += pv[c];
    }
    for (int c = 0; c < classes; ++c) pv[c] /= denom;
    const int32_t y = labels[i];
    if (y == kUnlabeled) continue;
    if (y < 0 || y >= classes) throw EngineError("label out of range");
    ++labeled;
    total += class_weights[static_cast<std::size_t>(y)] * (-std::log(std::max(pv[y], 1e-300)));
  }
  if (labeled == 0) throw EngineError("all points unlabeled in cross entropy");

  auto out = Tensor::make({1});
  out->value[0] = total / labeled;
  return record(out, [logits, out, probs, lab = labels, wts = class_weights, n, classes,
                      labeled]() {
    const double scale = out->grad[0] / labeled;
    for (int i = 0; i < n; ++i) {
      const int32_t y = lab[static_cast<std::size_t>(i)];
      if (y == kUnlabeled) continue;
      const double w = wts[static_cast<std::size_t>(y)];
      const double* pv = &(*probs)[static_cast<std::size_t>(i) * classes];
      double* lg = &logits->grad[static_cast<std::size_t>(i) * classes];
      for (int c = 0; c < classes; ++c)
        lg[c] += scale * w * (pv[c] - (c == y ? 1.0 : 0.0));
    }
  }, "weighted_cross_entropy");
}

TensorPtr Graph::weighted_sum(const TensorPtr& t, const std::vector<double>& coeffs) {
  if (coeffs.size() != t->size()) throw EngineError("weighted_sum coefficient mismatch");
  auto out = Tensor::make({1});
  for (std::size_t i = 0; i < t->size(); ++i) out->value[0] += coeffs[i] * t->value[i];
  return record(out, [t, out, c = coeffs]() {
    for (std::size_t i = 0; i < t->size(); ++i) t->grad[i] += out->grad[0] * c[i];
  }, "weighted_sum");
}

void adam_step(const std::vector<TensorPtr>& params, std::vector<AdamState>& states,
               const AdamConfig& config) {
  if (states.size() != params.size()) states.resize(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p];
    AdamState& s = states[p];
    if (s.m.size() != t.size()) {
      s.m.assign(t.size(), 0.0);
      s.v.assign(t.size(), 0.0);
      s.step = 0;
    }
    ++s.step;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(s.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(s.step));
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double g = t.grad[i];
      s.m[i] = config.beta1 * s.m[i] + (1.0 - config.beta1) * g;
      s.v[i] = config.beta2 * s.v[i] + (1.0 - config.beta2) * g * g;
      const double mhat = s.m[i] / bc1;
      const double vhat = s.v[i] / bc2;
      t.value[i] -= config.lr * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  }
}

void fan_uniform_init(Tensor& t, int fan_in, int fan_out, uint64_t seed) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-bound, bound);
  for (double& v : t.value) v = uni(rng);
}

}  // namespace tc
