#include "tc/metrics.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace tc {

int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), int64_t{0});
}

void ConfusionMatrix::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw CloudError("cannot write confusion csv '" + path + "'");
  out << "truth\\pred";
  for (int c = 0; c < num_classes; ++c) out << "," << c;
  out << "\n";
  for (int t = 0; t < num_classes; ++t) {
    out << t;
    for (int p = 0; p < num_classes; ++p) out << "," << at(t, p);
    out << "\n";
  }
}

ConfusionMatrix build_confusion(const std::vector<int32_t>& predictions,
                                const std::vector<int32_t>& truth, int num_classes) {
  if (predictions.size() != truth.size())
    throw CloudError("prediction/truth size mismatch");
  ConfusionMatrix cm;
  cm.num_classes = num_classes;
  cm.counts.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == kUnlabeled) continue;
    if (truth[i] < 0 || truth[i] >= num_classes)
      throw CloudError("truth label out of range at " + std::to_string(i));
    if (predictions[i] < 0 || predictions[i] >= num_classes)
      throw CloudError("prediction out of range at " + std::to_string(i));
    ++cm.at(truth[i], predictions[i]);
  }
  return cm;
}

Metrics metrics_from_confusion(const ConfusionMatrix& cm) {
  const int n = cm.num_classes;
  const int64_t total = cm.total();
  if (total == 0) throw CloudError("no labeled points to evaluate");

  Metrics m;
  m.confusion = cm;
  int64_t trace = 0;
  double acc_sum = 0.0;
  int acc_classes = 0;
  double iou_sum = 0.0;
  int iou_classes = 0;
  for (int c = 0; c < n; ++c) {
    const int64_t diag = cm.at(c, c);
    trace += diag;
    int64_t row = 0, col = 0;
    for (int j = 0; j < n; ++j) {
      row += cm.at(c, j);
      col += cm.at(j, c);
    }
    if (row > 0) {
      acc_sum += static_cast<double>(diag) / static_cast<double>(row);
      ++acc_classes;
    }
    if (row + col > 0) {
      iou_sum += static_cast<double>(diag) / static_cast<double>(row + col - diag);
      ++iou_classes;
    }
  }
  m.overall_accuracy = static_cast<double>(trace) / static_cast<double>(total);
  m.mean_accuracy = acc_classes > 0 ? acc_sum / acc_classes : 0.0;
  m.miou = iou_classes > 0 ? iou_sum / iou_classes : 0.0;
  return m;
}

Metrics evaluate(const std::vector<int32_t>& predictions, const std::vector<int32_t>& truth,
                 int num_classes) {
  return metrics_from_confusion(build_confusion(predictions, truth, num_classes));
}

std::vector<double> class_weights(const std::vector<int32_t>& labels, int num_classes) {
  std::vector<int64_t> counts(static_cast<std::size_t>(num_classes), 0);
  int64_t total = 0;
  for (int32_t l : labels) {
    if (l == kUnlabeled) continue;
    if (l < 0 || l >= num_classes) throw CloudError("label out of range in class_weights");
    ++counts[static_cast<std::size_t>(l)];
    ++total;
  }
  if (total == 0) throw CloudError("no labeled points for class weights");
  std::vector<double> w(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    const double freq = counts[static_cast<std::size_t>(c)] > 0
                            ? static_cast<double>(counts[static_cast<std::size_t>(c)]) /
                                  static_cast<double>(total)
                            : 1.0 / static_cast<double>(total);
    w[static_cast<std::size_t>(c)] = -std::log(freq);
  }
  return w;
}

}  // namespace tc
