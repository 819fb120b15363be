#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vseg/nets.hpp"
#include "vseg/synthdata.hpp"
#include "vseg/tensor.hpp"

namespace vseg {

enum class Mode { Accel, WarpOnly, SingleFrame };
std::string mode_name(Mode m);
Mode mode_from_name(const std::string& s);

enum class FlowSource { Oracle, Learned };
std::string flow_source_name(FlowSource f);
FlowSource flow_source_from_name(const std::string& s);

struct PipelineConfig {
  int64_t keyframe_interval = 5;
  Mode mode = Mode::Accel;
  FlowSource flow_source = FlowSource::Oracle;
  int64_t first_keyframe = 0;
  // Branch masking for the ablation study (intermediate frames only; the
  // fused prediction is replaced by the surviving branch, weights untouched).
  bool mask_reference = false;
  bool mask_update = false;

  void validate() const;
};

// Cached reference features plus bookkeeping for the current keyframe.
struct PipelineState {
  Tensor cache;  // f^c at feature resolution
  int64_t last_keyframe = -1;
  Tensor prev_frame;

  bool has_cache() const { return cache.defined(); }
};

// --- Graph-level compositions (shared verbatim by inference and training) ---

// Full reference network on a keyframe; returns the score map and (via
// features_out) the features that become the cache.
Var keyframe_forward(Graph& g, ModelSet& m, Var frame, Var* features_out);

struct IntermediateOut {
  Var scores;      // the prediction for this frame (mode/mask dependent)
  Var new_cache;   // warped reference features (always computed)
  Var ref_scores;  // invalid when the reference branch is masked
  Var upd_scores;  // invalid when the update branch is not run
};

// One intermediate frame: warp the cache by the (image-resolution) flow,
// evaluate the configured branches, and fuse.
IntermediateOut intermediate_forward(Graph& g, ModelSet& m, Var cache, Var flow_image,
                                     Var frame, const PipelineConfig& pc);

// Flow input selection: the oracle field when provided, else the flow net.
Var pipeline_flow(Graph& g, ModelSet& m, const PipelineConfig& pc,
                  const Tensor* oracle_flow, Var prev_frame, Var cur_frame);

// --- Stateful per-frame steps ------------------------------------------------

struct StepResult {
  Tensor scores;
  Tensor probs;
  LabelMap seg;
};

StepResult run_keyframe(const Tensor& frame, PipelineState& state, ModelSet& m);

// oracle_flow must be non-null when pc.flow_source is Oracle.
StepResult run_intermediate(const Tensor& frame, const Tensor* oracle_flow,
                            PipelineState& state, ModelSet& m, const PipelineConfig& pc);

// --- Whole-clip driver --------------------------------------------------------

struct ClipRunResult {
  int64_t t0 = 0;
  std::vector<LabelMap> segs;    // aligned with clip frames; empty before t0
  std::vector<bool> predicted;
  int64_t keyframe_count = 0;
  int64_t intermediate_count = 0;
  double keyframe_seconds = 0.0;
  double intermediate_seconds = 0.0;
};

// Processes frames t0..T-1; frame t is a keyframe iff (t - t0) mod n == 0
// (single_frame mode treats every frame as a keyframe and ignores n).
ClipRunResult run_clip(const VideoClip& clip, const PipelineConfig& pc, ModelSet& m);

// Keyframe placement for the evaluation rotation: picks the first keyframe
// so the labeled frame sits `clip_ordinal mod n` frames after the last
// keyframe, clamped when the clip is too short.
struct EvalSchedule {
  int64_t t0 = 0;
  int64_t offset = 0;
};
EvalSchedule schedule_eval_offsets(int64_t interval, int64_t clip_ordinal,
                                   int64_t labeled_index);

}  // namespace vseg
