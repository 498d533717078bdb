#include <doctest.h>

#include <cmath>

#include "tc/scene.hpp"
#include "tc/training.hpp"

using tc::operator+;
using tc::operator-;
using tc::operator*;


namespace {

tc::PointCloud tiny_scene(uint64_t seed) {
  tc::SceneSpec spec;
  spec.density = 800.0;
  spec.noise_sigma = 0.002;
  spec.primitives.push_back({tc::PlanePrimitive{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, 0});
  spec.primitives.push_back({tc::SpherePrimitive{{0.5, 0.5, 0.3}, 0.2}, 1});
  return tc::generate_scene(spec, seed);
}

}  // namespace

TEST_CASE("confusion matrix and metrics on a hand-checked case") {
  // truth:      0 0 1 1 1 0
  // prediction: 0 1 1 0 1 0
  const std::vector<int32_t> truth = {0, 0, 1, 1, 1, 0};
  const std::vector<int32_t> pred = {0, 1, 1, 0, 1, 0};
  const tc::Metrics m = tc::evaluate(pred, truth, 2);

  CHECK(m.confusion.at(0, 0) == 2);
  CHECK(m.confusion.at(0, 1) == 1);
  CHECK(m.confusion.at(1, 0) == 1);
  CHECK(m.confusion.at(1, 1) == 2);
  CHECK(m.overall_accuracy == doctest::Approx(4.0 / 6.0));
  CHECK(m.mean_accuracy == doctest::Approx(2.0 / 3.0));
  CHECK(m.miou == doctest::Approx(0.5));  // both classes: 2 / (3 + 3 - 2)
}

TEST_CASE("unlabeled truth is excluded from metrics") {
  const std::vector<int32_t> truth = {0, tc::kUnlabeled, 1, tc::kUnlabeled};
  const std::vector<int32_t> pred = {0, 1, 1, 0};
  const tc::Metrics m = tc::evaluate(pred, truth, 2);
  CHECK(m.confusion.total() == 2);
  CHECK(m.overall_accuracy == doctest::Approx(1.0));
  CHECK_THROWS_AS(
      tc::evaluate({0, 0}, {tc::kUnlabeled, tc::kUnlabeled}, 2), tc::CloudError);
}

TEST_CASE("classes absent from truth and prediction drop out of the means") {
  // class 2 never appears anywhere; class 1 only in prediction
  const std::vector<int32_t> truth = {0, 0, 0, 0};
  const std::vector<int32_t> pred = {0, 0, 1, 0};
  const tc::Metrics m = tc::evaluate(pred, truth, 3);
  CHECK(m.mean_accuracy == doctest::Approx(0.75));  // only class 0 has truth rows
  // IoU: class 0 = 3/4, class 1 = 0/1, class 2 skipped
  CHECK(m.miou == doctest::Approx((0.75 + 0.0) / 2.0));
}

TEST_CASE("class weights follow the negative log histogram") {
  const std::vector<int32_t> balanced = {0, 1, 0, 1};
  const auto w = tc::class_weights(balanced, 2);
  CHECK(w[0] == doctest::Approx(std::log(2.0)));
  CHECK(w[1] == doctest::Approx(std::log(2.0)));

  // class frequency 1/e gives weight exactly 1
  std::vector<int32_t> skewed;
  const int total = 1000;
  const int rare = static_cast<int>(std::round(total / std::exp(1.0)));
  for (int i = 0; i < rare; ++i) skewed.push_back(1);
  while (static_cast<int>(skewed.size()) < total) skewed.push_back(0);
  const auto w2 = tc::class_weights(skewed, 2);
  CHECK(w2[1] == doctest::Approx(1.0).epsilon(0.01));

  // an absent class is treated as a single count
  const auto w3 = tc::class_weights({0, 0, 0, 0}, 2);
  CHECK(w3[1] == doctest::Approx(std::log(4.0)));
}

TEST_CASE("whole-scene batching yields one batch; spheres stay inside the radius") {
  const tc::PointCloud scene = tiny_scene(1);
  tc::TrainConfig config;
  config.batch_strategy = tc::BatchStrategy::WholeScene;
  auto whole = tc::make_batches(scene, "s", config, 5);
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].cloud.size() == scene.size());

  config.batch_strategy = tc::BatchStrategy::Sphere;
  config.sphere_radius = 0.3;
  config.spheres_per_scene = 3;
  auto spheres = tc::make_batches(scene, "s", config, 5);
  auto again = tc::make_batches(scene, "s", config, 5);
  REQUIRE(spheres.size() == 3);
  for (std::size_t b = 0; b < 3; ++b) {
    CHECK(spheres[b].cloud.size() > 0);
    CHECK(spheres[b].cloud.positions == again[b].cloud.positions);  // seed deterministic
    // every batch fits in a ball of the configured radius around some center
    tc::Vec3 lo = spheres[b].cloud.positions[0], hi = lo;
    for (const auto& p : spheres[b].cloud.positions)
      for (int d = 0; d < 3; ++d) {
        lo[d] = std::min(lo[d], p[d]);
        hi[d] = std::max(hi[d], p[d]);
      }
    for (int d = 0; d < 3; ++d) CHECK(hi[d] - lo[d] <= 2.0 * config.sphere_radius + 1e-12);
  }
}

TEST_CASE("rotation augmentation preserves geometry invariants") {
  const tc::PointCloud scene = tiny_scene(2);
  const auto copies = tc::rotate_augment(scene, 4);
  REQUIRE(copies.size() == 4);
  CHECK(copies[0].positions == scene.positions);  // identity copy first

  tc::Vec3 centroid{0, 0, 0};
  for (const auto& p : scene.positions) centroid = centroid + p;
  centroid = centroid * (1.0 / static_cast<double>(scene.size()));

  for (std::size_t k = 1; k < 4; ++k) {
    REQUIRE(copies[k].positions.size() == scene.size());
    CHECK(copies[k].positions != scene.positions);
    for (std::size_t i = 0; i < scene.size(); i += 97) {
      CHECK(copies[k].positions[i][2] == doctest::Approx(scene.positions[i][2]));  // z fixed
      CHECK(tc::norm(copies[k].positions[i] - centroid) ==
            doctest::Approx(tc::norm(scene.positions[i] - centroid)).epsilon(1e-9));
    }
    CHECK(copies[k].labels == scene.labels);
  }
}

TEST_CASE("training with lr = 0 leaves parameters untouched and loss flat") {
  const tc::PointCloud scene = tiny_scene(3);
  tc::TrainConfig config;
  config.epochs = 3;
  config.learning_rate = 0.0;
  config.rotations = 1;
  config.num_classes = 2;

  tc::Network net(tc::make_network_spec(config), 1);
  std::vector<std::vector<double>> before;
  for (const auto& p : net.params()) before.push_back(p->value);

  std::vector<tc::AdamState> adam;
  const tc::TrainOutput out = tc::train(net, adam, {scene}, config);

  for (std::size_t i = 0; i < before.size(); ++i) CHECK(net.params()[i]->value == before[i]);
  REQUIRE(out.epoch_loss.size() == 3);
  CHECK(out.epoch_loss[0] == out.epoch_loss[1]);
  CHECK(out.epoch_loss[1] == out.epoch_loss[2]);
  CHECK(adam.empty());
}

TEST_CASE("training is seed deterministic") {
  const tc::PointCloud scene = tiny_scene(4);
  tc::TrainConfig config;
  config.epochs = 2;
  config.learning_rate = 1e-3;
  config.rotations = 2;
  config.num_classes = 2;

  tc::Network a(tc::make_network_spec(config), 7);
  tc::Network b(tc::make_network_spec(config), 7);
  std::vector<tc::AdamState> adam_a, adam_b;
  const auto out_a = tc::train(a, adam_a, {scene}, config);
  const auto out_b = tc::train(b, adam_b, {scene}, config);
  CHECK(out_a.epoch_loss == out_b.epoch_loss);
  for (std::size_t i = 0; i < a.params().size(); ++i)
    CHECK(a.params()[i]->value == b.params()[i]->value);
}

TEST_CASE("the network overfits a tiny scene") {
  const tc::PointCloud scene = tiny_scene(5);
  tc::TrainConfig config;
  config.epochs = 60;
  config.learning_rate = 2e-3;
  config.rotations = 1;
  config.num_classes = 2;

  tc::Network net(tc::make_network_spec(config), 3);
  std::vector<tc::AdamState> adam;
  const tc::TrainOutput out = tc::train(net, adam, {scene}, config);
  REQUIRE(out.epoch_loss.size() == 60);
  CHECK(out.epoch_loss.back() < 0.05);
  CHECK(out.epoch_loss.back() < out.epoch_loss.front());

  // and the predictions reflect it
  const tc::PreparedBatch batch = tc::prepare_batch(scene, config.hierarchy, config.signals);
  const auto pred = tc::predict_full(net, batch);
  const tc::Metrics m = tc::evaluate(pred, scene.labels, 2);
  CHECK(m.overall_accuracy > 0.9);
}

TEST_CASE("train_single on a prepared batch matches the regular loop") {
  const tc::PointCloud scene = tiny_scene(6);
  tc::TrainConfig config;
  config.epochs = 2;
  config.learning_rate = 1e-3;
  config.rotations = 1;
  config.num_classes = 2;

  tc::Network a(tc::make_network_spec(config), 9);
  tc::Network b(tc::make_network_spec(config), 9);
  std::vector<tc::AdamState> adam_a, adam_b;
  tc::train(a, adam_a, {scene}, config);
  const tc::PreparedBatch batch = tc::prepare_batch(scene, config.hierarchy, config.signals);
  tc::train_single(b, adam_b, batch, config);
  for (std::size_t i = 0; i < a.params().size(); ++i)
    CHECK(a.params()[i]->value == b.params()[i]->value);
}

TEST_CASE("config validation rejects nonsense") {
  tc::TrainConfig config;
  config.epochs = -1;
  CHECK_THROWS_AS(config.validate(), tc::TrainError);
  config.epochs = 1;
  config.num_classes = 1;
  CHECK_THROWS_AS(config.validate(), tc::TrainError);
}
