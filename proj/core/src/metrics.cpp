#include "vseg/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace vseg {

void Confusion::accumulate(const LabelMap& pred, const LabelMap& gt) {
  if (pred.h != gt.h || pred.w != gt.w)
    throw std::invalid_argument("Confusion: pred " + std::to_string(pred.h) + "x" +
                                std::to_string(pred.w) + " vs gt " + std::to_string(gt.h) +
                                "x" + std::to_string(gt.w));
  for (size_t i = 0; i < pred.ids.size(); ++i) {
    const int32_t p = pred.ids[i];
    const int32_t g = gt.ids[i];
    if (p < 0 || p >= num_classes || g < 0 || g >= num_classes)
      throw std::invalid_argument("Confusion: id out of range [0," +
                                  std::to_string(num_classes) + "): pred=" +
                                  std::to_string(p) + " gt=" + std::to_string(g));
    if (p == g) {
      ++intersection[static_cast<size_t>(p)];
      ++unions[static_cast<size_t>(p)];
    } else {
      ++unions[static_cast<size_t>(p)];
      ++unions[static_cast<size_t>(g)];
    }
  }
}

void Confusion::merge(const Confusion& other) {
  if (other.num_classes != num_classes)
    throw std::invalid_argument("Confusion::merge: class count mismatch");
  for (int64_t k = 0; k < num_classes; ++k) {
    intersection[static_cast<size_t>(k)] += other.intersection[static_cast<size_t>(k)];
    unions[static_cast<size_t>(k)] += other.unions[static_cast<size_t>(k)];
  }
}

double Confusion::iou(int64_t k) const {
  if (unions[static_cast<size_t>(k)] == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(intersection[static_cast<size_t>(k)]) /
         static_cast<double>(unions[static_cast<size_t>(k)]);
}

double Confusion::miou() const {
  double acc = 0.0;
  int64_t counted = 0;
  for (int64_t k = 0; k < num_classes; ++k) {
    const double v = iou(k);
    if (!std::isnan(v)) {
      acc += v;
      ++counted;
    }
  }
  return counted > 0 ? acc / static_cast<double>(counted) : 0.0;
}

}  // namespace vseg
