#pragma once

#include <cstdint>

#include "vseg/nets.hpp"
#include "vseg/pipeline.hpp"

namespace vseg {

// Analytic multiply-accumulate totals per frame path. Counts cover the
// operators that execute on that path: convolutions (including padding
// positions), bilinear upsampling taps, the warp (4 MACs per output
// element), and the flow net when flow is learned. Pooling, activations and
// arg/softmax contribute no multiply-accumulates.
struct MacBreakdown {
  int64_t ref_feature = 0;
  int64_t ref_task = 0;
  int64_t upd_feature = 0;
  int64_t upd_task = 0;
  int64_t fusion = 0;
  int64_t warp = 0;
  int64_t flow = 0;

  int64_t keyframe_total = 0;
  int64_t intermediate_total = 0;
};

MacBreakdown mac_count(const NetConfig& net, const PipelineConfig& pc, int64_t h, int64_t w);

// Blended per-frame cost at keyframe interval n: one keyframe per n frames.
double blended_macs_per_frame(const MacBreakdown& bd, int64_t interval);

// Cost of the fusion layer alone, evaluated on the given grid; the
// fusion-location comparison reports both layers on the feature grid so the
// delta is purely channel-driven.
int64_t fusion_layer_macs(const NetConfig& net, FusionLocation loc, int64_t grid_h,
                          int64_t grid_w);

}  // namespace vseg
