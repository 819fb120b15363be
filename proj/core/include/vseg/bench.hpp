#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vseg/eval.hpp"
#include "vseg/nets.hpp"
#include "vseg/pipeline.hpp"

namespace vseg {

// Grid experiment over mode x update depth x keyframe interval.
struct SweepSpec {
  std::vector<Mode> modes = {Mode::Accel, Mode::WarpOnly, Mode::SingleFrame};
  std::vector<Depth> depths = all_depths();
  std::vector<int64_t> intervals = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  FlowSource flow_source = FlowSource::Oracle;
  EvalProtocol protocol;
  std::string ckpt_dir;  // pretrain_ref.ckpt, pretrain_single_<d>.ckpt, joint_<d>.ckpt
  int threads = 1;
};

struct SweepRow {
  Mode mode = Mode::Accel;
  Depth depth = Depth::T18;
  int64_t interval = 1;
  double miou = 0.0;
  double macs_per_frame = 0.0;
  double seconds_per_frame = 0.0;
  int64_t macs_keyframe = 0;
  int64_t macs_intermediate = 0;
};

std::vector<SweepRow> sweep(const SweepSpec& spec, const std::vector<VideoClip>& clips);

// Columns: mode,update_depth,keyframe_interval,miou,macs_per_frame,
// seconds_per_frame,macs_keyframe,macs_intermediate. `deterministic` zeroes
// the wall-clock column so reruns are byte-identical.
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     bool deterministic);

void write_sweep_svgs(const std::string& curves_path, const std::string& pareto_path,
                      const std::vector<SweepRow>& rows);

// Single-row summary for `eval`. Columns: mode,update_depth,keyframe_interval,
// miou,<per-class iou...>,frames,macs_per_frame,macs_keyframe,
// macs_intermediate,seconds_per_frame.
void write_metrics_csv(const std::string& path, const RunMetrics& m, Mode mode, Depth depth,
                       int64_t interval, bool deterministic);

// --- Ablation (branch contributions at fixed offset) -------------------------

struct AblateRow {
  std::string setting;  // reference_only | update_only | fused
  double miou = 0.0;
  double macs_per_frame = 0.0;
};

// Masks one fusion input at a time on the same trained bundle; rejects
// masking both.
std::vector<AblateRow> ablate(ModelSet& models, const std::vector<VideoClip>& clips,
                              int64_t interval, int64_t offset, FlowSource flow_source,
                              int threads);

void write_ablate_csv(const std::string& path, const std::vector<AblateRow>& rows);

// --- Fusion-location comparison ----------------------------------------------

struct FusionCompareRow {
  FusionLocation location = FusionLocation::Feature;
  double miou = 0.0;
  int64_t fusion_layer_macs_feature_grid = 0;  // both layers costed on the feature grid
  double macs_per_frame = 0.0;                 // full intermediate-path cost
};

std::vector<FusionCompareRow> compare_fusion_location(
    ModelSet& score_models, ModelSet& feature_models, const std::vector<VideoClip>& clips,
    int64_t interval, int64_t offset, FlowSource flow_source, int threads);

void write_fusion_csv(const std::string& path, const std::vector<FusionCompareRow>& rows);

}  // namespace vseg
