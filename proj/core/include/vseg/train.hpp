#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vseg/nets.hpp"
#include "vseg/pipeline.hpp"
#include "vseg/synthdata.hpp"

namespace vseg {

struct TrainConfig {
  int64_t keyframe_interval = 5;
  int64_t epochs = 30;
  double phase1_fraction = 0.8;  // SF-only phase share, mirrors 40 of 50
  double lr = 5e-4;
  double momentum = 0.0;
  double clip_norm = 5.0;
  FlowSource flow_source = FlowSource::Oracle;
  bool flow_trainable_phase2 = true;
  bool ref_feat_trainable_phase2 = false;
  bool log_wall_time = true;
  int64_t labeled_index = -1;  // -1 = last frame of each clip
  int64_t val_clips = 0;       // 0 = all, -1 = disable validation
  int32_t ignore_label = 255;
  uint64_t seed = 0;
  int64_t pretrain_epochs = 10;
  double pretrain_lr = -1.0;        // -1 = use lr
  double pretrain_momentum = -1.0;  // -1 = use momentum

  void validate() const;
  double effective_pretrain_lr() const { return pretrain_lr < 0 ? lr : pretrain_lr; }
  double effective_pretrain_momentum() const {
    return pretrain_momentum < 0 ? momentum : pretrain_momentum;
  }
  int64_t labeled_frame(int64_t clip_frames) const {
    return labeled_index < 0 ? clip_frames - 1 : labeled_index;
  }
};

// Training window for one sample: keyframe at the head, labeled frame at the
// tail; the head is clamped to the clip start for early labeled frames.
struct WindowSample {
  int64_t keyframe = 0;
  int64_t labeled = 0;
};
WindowSample build_training_sample(const VideoClip& clip, int64_t interval,
                                   int64_t labeled_index);

struct EpochLogRow {
  int64_t epoch = 0;
  int phase = 1;
  double mean_loss = 0.0;
  double val_miou = -1.0;  // <0 when validation is disabled
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochLogRow> log;
  int64_t phase1_epochs = 0;
  double best_val_miou = -1.0;
  bool any_nonfinite = false;
};

// Applies the phase freeze to the joint-training weight set.
void set_joint_phase(ModelSet& models, const TrainConfig& cfg, bool phase_two);

// One unrolled window: keyframe forward, intermediate frames through the
// tail, cross-entropy on the labeled frame, backward through time, one
// optimizer step. Returns the loss.
double joint_train_step(ModelSet& models, const VideoClip& clip, const WindowSample& w,
                        const TrainConfig& cfg, bool phase_two, Sgd& opt);

// Two-phase joint training; logs one CSV row per epoch. When validation is
// enabled the best-by-validation weights are restored at the end and written
// to ckpt_path (when nonempty).
TrainResult train_joint(ModelSet& models, const std::vector<VideoClip>& train_clips,
                        const std::vector<VideoClip>& val_clips, const TrainConfig& cfg,
                        const std::string& log_path, const std::string& ckpt_path);

// Single-frame pretraining of one feature+task pair with cross-entropy.
TrainResult pretrain_singleframe(FeatureNet& feat, TaskNet& task, const NetConfig& net,
                                 const std::vector<VideoClip>& train_clips,
                                 const std::vector<VideoClip>& val_clips,
                                 const TrainConfig& cfg, const std::string& log_path,
                                 const std::string& ckpt_path);

// mIoU of a single-frame net over the labeled frame of each clip.
double singleframe_miou(FeatureNet& feat, TaskNet& task, const std::vector<VideoClip>& clips,
                        const TrainConfig& cfg);

void write_train_log(const std::string& path, const std::vector<EpochLogRow>& rows);

}  // namespace vseg
