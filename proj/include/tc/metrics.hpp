#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tc/point_cloud.hpp"

namespace tc {

// Rows = ground truth, columns = prediction. Unlabeled truth is excluded.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<int64_t> counts;  // n x n row-major

  int64_t& at(int truth, int pred) {
    return counts[static_cast<std::size_t>(truth) * num_classes + pred];
  }
  int64_t at(int truth, int pred) const {
    return counts[static_cast<std::size_t>(truth) * num_classes + pred];
  }
  int64_t total() const;
  void write_csv(const std::string& path) const;
};

struct Metrics {
  double miou = 0.0;
  double mean_accuracy = 0.0;
  double overall_accuracy = 0.0;
  ConfusionMatrix confusion;
};

ConfusionMatrix build_confusion(const std::vector<int32_t>& predictions,
                                const std::vector<int32_t>& truth, int num_classes);

// oA = trace/total; per-class accuracy over classes present in the truth;
// IoU over classes present in truth or prediction.
Metrics evaluate(const std::vector<int32_t>& predictions, const std::vector<int32_t>& truth,
                 int num_classes);
Metrics metrics_from_confusion(const ConfusionMatrix& cm);

// w_c = -log(count_c / total); absent classes get -log(1/total).
std::vector<double> class_weights(const std::vector<int32_t>& labels, int num_classes);

}  // namespace tc
