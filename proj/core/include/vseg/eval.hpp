#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "vseg/maccount.hpp"
#include "vseg/metrics.hpp"
#include "vseg/nets.hpp"
#include "vseg/pipeline.hpp"
#include "vseg/synthdata.hpp"

namespace vseg {

struct EvalProtocol {
  bool rotate = true;        // rotate the keyframe offset across clips
  int64_t fixed_offset = -1; // >= 0 pins the labeled-frame offset instead
  bool dense = false;        // score every processed frame, not just the labeled one
  int64_t labeled_index = -1;  // -1 = last frame of each clip
};

// Per-clip segmentation source; the model-backed implementation wraps
// run_clip, tests may substitute e.g. a ground-truth provider.
using ClipPredictor =
    std::function<ClipRunResult(const VideoClip& clip, int64_t clip_ordinal, int64_t t0)>;

RunMetrics evaluate_with(const std::vector<VideoClip>& clips, int64_t num_classes,
                         int64_t interval, const EvalProtocol& proto,
                         const ClipPredictor& predictor, int threads,
                         const MacBreakdown* macs);

RunMetrics evaluate(const std::vector<VideoClip>& clips, ModelSet& models,
                    const PipelineConfig& pc, const EvalProtocol& proto, int threads = 1);

// Fixed-order parallel map over [0, count): results are merged in index
// order so the reduction is deterministic for any thread count.
void parallel_for_ordered(int64_t count, int threads,
                          const std::function<void(int64_t)>& fn);

}  // namespace vseg
