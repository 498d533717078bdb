#include "tc/network.hpp"

#include <cmath>

#include "tc/serialize.hpp"

namespace tc {

double receptive_field(const NetworkSpec& spec, double pixel_size0) {
  double total = 0.0;
  for (int k = 0; k < spec.levels; ++k) {
    int convs = spec.encoder_convs[static_cast<std::size_t>(k)];
    if (k < static_cast<int>(spec.decoder_convs.size()))
      convs += spec.decoder_convs[static_cast<std::size_t>(k)];
    const double radius = 2.0 * pixel_size0 * std::pow(2.0, k);
    total += convs * radius;
  }
  return total;
}

std::vector<double> assemble_inputs(const PointCloud& level0,
                                    const std::vector<TangentFrame>& frames,
                                    const InputSignalConfig& config) {
  const int m = config.channels();
  if (m == 0) throw NetworkError("no input signals selected");
  const std::size_t n = level0.size();
  if (config.rgb && !level0.has_colors()) throw NetworkError("RGB requested but cloud has no colors");
  if (config.normals && frames.size() != n) throw NetworkError("normals requested without frames");

  double z_min = 0.0, z_max = 0.0;
  if (config.height && n > 0) {
    z_min = z_max = level0.positions[0][2];
    for (const auto& p : level0.positions) {
      z_min = std::min(z_min, p[2]);
      z_max = std::max(z_max, p[2]);
    }
  }
  const bool degenerate_height = z_max - z_min <= 0.0;

  std::vector<double> out(n * static_cast<std::size_t>(m), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = &out[i * static_cast<std::size_t>(m)];
    int c = 0;
    if (config.distance && config.distance_placeholder_column) row[c++] = 0.0;
    if (config.height)
      row[c++] = degenerate_height ? 0.0 : (level0.positions[i][2] - z_min) / (z_max - z_min);
    if (config.normals) {
      for (int d = 0; d < 3; ++d) row[c++] = 0.5 * (frames[i].normal[d] + 1.0);
    }
    if (config.rgb) {
      for (int d = 0; d < 3; ++d) row[c++] = level0.colors[i][d];
    }
  }
  return out;
}

Network::Network(const NetworkSpec& spec, uint64_t seed) : spec_(spec) {
  if (spec.levels != 3 || spec.encoder_convs.size() != 3 || spec.decoder_convs.size() != 2)
    throw NetworkError("forward path supports the canonical 3-level U shape");
  const int pixels = 9;  // 3x3 filters
  const int dch = spec.distance_images ? 1 : 0;
  const int c0 = spec.encoder_channels[0], c1 = spec.encoder_channels[1],
            c2 = spec.encoder_channels[2];

  uint64_t param_seed = seed;
  auto add_conv = [&](const std::string& name, int cin, int cout) {
    auto w = Tensor::make({pixels, cin, cout});
    fan_uniform_init(*w, pixels * cin, cout, param_seed++);
    auto b = Tensor::make({cout});
    params_.push_back(w);
    names_.push_back(name + ".weight");
    params_.push_back(b);
    names_.push_back(name + ".bias");
  };
  auto add_head = [&](const std::string& name, int cin, int cout) {
    auto w = Tensor::make({cin, cout});
    fan_uniform_init(*w, cin, cout, param_seed++);
    auto b = Tensor::make({cout});
    params_.push_back(w);
    names_.push_back(name + ".weight");
    params_.push_back(b);
    names_.push_back(name + ".bias");
  };

  add_conv("enc0a", spec.input_channels + dch, c0);
  add_conv("enc0b", c0, c0);
  add_conv("enc1a", c0 + dch, c1);
  add_conv("enc1b", c1, c1);
  add_conv("bottom_a", c1 + dch, c2);
  add_conv("bottom_b", c2, c1);
  add_conv("dec1a", 2 * c1 + dch, c1);
  add_conv("dec1b", c1, c0);
  // Decoder level 0 after concat(unpooled c0, skip c0).
  int dec0_in = 2 * c0 + dch;
  for (int i = 0; i < spec.decoder_convs[0]; ++i) {
    add_conv("dec0_" + std::to_string(i), dec0_in, 2 * c0);
    dec0_in = 2 * c0;
  }
  add_head("head", dec0_in, spec.num_classes);
}

TensorPtr Network::tangent_layer(Graph& graph, const TensorPtr& f, const Hierarchy& h, int level,
                                 int param_index, bool with_distance, bool activate) const {
  const ConvPlan& plan = h.conv[static_cast<std::size_t>(level)];
  const int pixels = plan.pixels();
  const std::size_t rows = static_cast<std::size_t>(plan.count) * pixels;

  TensorPtr mixed;
  if (plan.k == 1) {
    mixed = graph.gather(f, plan.indices.data(), pixels);
  } else {
    std::vector<TensorPtr> parts;
    std::vector<const double*> weights;
    for (int ki = 0; ki < plan.k; ++ki) {
      parts.push_back(graph.gather(f, plan.indices.data() + static_cast<std::size_t>(ki) * rows,
                                   pixels));
      weights.push_back(plan.weights.data() + static_cast<std::size_t>(ki) * rows);
    }
    mixed = graph.weighted_mix(parts, weights);
  }

  if (with_distance) {
    // The constant channel is consumed during the forward op only; the
    // backward pass never reads it, so a local buffer suffices.
    std::vector<double> channel(rows);
    for (std::size_t i = 0; i < rows; ++i)
      channel[i] = normalized_distance(plan.distance[i], h.levels[level].radius);
    mixed = graph.append_constant_channel(mixed, channel.data());
  }

  TensorPtr out = graph.tangent_conv(mixed, params_[static_cast<std::size_t>(param_index)],
                                     params_[static_cast<std::size_t>(param_index) + 1]);
  return activate ? graph.leaky_relu(out, 0.2) : out;
}

TensorPtr Network::forward(Graph& graph, const Hierarchy& h, const TensorPtr& inputs) const {
  if (static_cast<int>(h.levels.size()) != spec_.levels)
    throw NetworkError("hierarchy level count does not match network spec");
  if (inputs->dim(0) != static_cast<int>(h.levels[0].cloud.size()) ||
      inputs->dim(1) != spec_.input_channels)
    throw NetworkError("input tensor shape does not match hierarchy/spec");
  const bool dch = spec_.distance_images;
  int pi = 0;
  auto next = [&]() {
    int idx = pi;
    pi += 2;
    return idx;
  };

  // Encoder.
  TensorPtr x = tangent_layer(graph, inputs, h, 0, next(), dch, true);   // enc0a
  x = tangent_layer(graph, x, h, 0, next(), false, true);                // enc0b
  TensorPtr skip0 = x;
  x = graph.pool(x, h.pools[0], spec_.pool_mode);

  x = tangent_layer(graph, x, h, 1, next(), dch, true);                  // enc1a
  x = tangent_layer(graph, x, h, 1, next(), false, true);                // enc1b
  TensorPtr skip1 = x;
  x = graph.pool(x, h.pools[1], spec_.pool_mode);

  // Bottleneck.
  x = tangent_layer(graph, x, h, 2, next(), dch, true);                  // bottom_a
  x = tangent_layer(graph, x, h, 2, next(), false, true);                // bottom_b

  // Decoder.
  x = graph.unpool(x, h.pools[1]);
  x = graph.concat(x, skip1);
  x = tangent_layer(graph, x, h, 1, next(), dch, true);                  // dec1a
  x = tangent_layer(graph, x, h, 1, next(), false, true);                // dec1b

  x = graph.unpool(x, h.pools[0]);
  x = graph.concat(x, skip0);
  for (int i = 0; i < spec_.decoder_convs[0]; ++i)
    x = tangent_layer(graph, x, h, 0, next(), dch && i == 0, true);      // dec0_i

  return graph.conv1x1(x, params_[static_cast<std::size_t>(pi)],
                       params_[static_cast<std::size_t>(pi) + 1]);       // head
}

namespace {
constexpr char kCkptMagic[8] = {'T', 'C', 'C', 'K', 'P', 'T', '\0', '\0'};
constexpr uint32_t kCkptVersion = 1;
}  // namespace

void Network::save_checkpoint(const std::string& path, const std::vector<AdamState>& adam,
                              int64_t epoch) const {
  BinaryWriter w(path);
  w.put(kCkptMagic);
  w.put<uint32_t>(kCkptVersion);
  w.put<int64_t>(epoch);
  w.put<uint64_t>(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    w.put_string(names_[i]);
    w.put<uint32_t>(static_cast<uint32_t>(params_[i]->shape.size()));
    for (int d : params_[i]->shape) w.put<int32_t>(d);
    w.put_vector(params_[i]->value);
  }
  w.put<uint8_t>(adam.empty() ? 0 : 1);
  if (!adam.empty()) {
    w.put<uint64_t>(adam.size());
    for (const auto& s : adam) {
      w.put<int64_t>(s.step);
      w.put_vector(s.m);
      w.put_vector(s.v);
    }
  }
  w.finish();
}

int64_t Network::load_checkpoint(const std::string& path, std::vector<AdamState>* adam) {
  BinaryReader r(path);
  r.expect_magic(kCkptMagic, sizeof(kCkptMagic));
  const auto version = r.get<uint32_t>();
  if (version != kCkptVersion)
    throw NetworkError(path + ": unsupported checkpoint version " + std::to_string(version));
  const auto epoch = r.get<int64_t>();
  const auto count = r.get<uint64_t>();
  if (count != params_.size())
    throw NetworkError(path + ": checkpoint parameter count mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string name = r.get_string();
    if (name != names_[i])
      throw NetworkError(path + ": parameter name mismatch: " + name + " vs " + names_[i]);
    const auto rank = r.get<uint32_t>();
    std::vector<int> shape(rank);
    for (auto& d : shape) d = r.get<int32_t>();
    if (shape != params_[i]->shape) throw NetworkError(path + ": shape mismatch for " + name);
    params_[i]->value = r.get_vector<double>();
  }
  if (adam) adam->clear();
  if (r.get<uint8_t>() != 0) {
    const auto n = r.get<uint64_t>();
    std::vector<AdamState> states(n);
    for (auto& s : states) {
      s.step = r.get<int64_t>();
      s.m = r.get_vector<double>();
      s.v = r.get_vector<double>();
    }
    if (adam) *adam = std::move(states);
  }
  return epoch;
}

}  // namespace tc
