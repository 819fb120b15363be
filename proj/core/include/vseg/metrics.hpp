#pragma once

#include <cstdint>
#include <vector>

#include "vseg/tensor.hpp"

namespace vseg {

// Per-class intersection/union accumulator for mIoU.
struct Confusion {
  int64_t num_classes = 0;
  std::vector<int64_t> intersection;
  std::vector<int64_t> unions;

  Confusion() = default;
  explicit Confusion(int64_t classes)
      : num_classes(classes),
        intersection(static_cast<size_t>(classes), 0),
        unions(static_cast<size_t>(classes), 0) {}

  // intersection[k] += |pred=k and gt=k|, unions[k] += |pred=k or gt=k|.
  // Out-of-range ids are rejected.
  void accumulate(const LabelMap& pred, const LabelMap& gt);
  void merge(const Confusion& other);

  double iou(int64_t k) const;  // NaN when the class has zero union

  // Mean IoU over classes with nonzero union.
  double miou() const;
};

struct RunMetrics {
  int64_t num_classes = 0;
  std::vector<double> class_iou;
  double miou = 0.0;
  int64_t frames_evaluated = 0;  // frames scored against ground truth
  int64_t keyframe_count = 0;
  int64_t intermediate_count = 0;
  double mean_seconds_per_frame = 0.0;
  int64_t macs_keyframe = 0;      // analytic, per keyframe
  int64_t macs_intermediate = 0;  // analytic, per intermediate frame
  double macs_per_frame = 0.0;    // blended over the processed frame mix
};

}  // namespace vseg
