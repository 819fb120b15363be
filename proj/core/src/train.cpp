#include "vseg/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "vseg/kernels.hpp"
#include "vseg/metrics.hpp"
#include "vseg/rng.hpp"

namespace vseg {

void TrainConfig::validate() const {
  if (keyframe_interval < 1)
    throw std::invalid_argument("TrainConfig: keyframe_interval must be >= 1");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (phase1_fraction <= 0.0 || phase1_fraction >= 1.0)
    throw std::invalid_argument("TrainConfig: phase1_fraction must lie in (0,1)");
  if (lr <= 0.0) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("TrainConfig: momentum must lie in [0,1)");
  if (clip_norm <= 0.0) throw std::invalid_argument("TrainConfig: clip_norm must be > 0");
  if (pretrain_epochs < 1)
    throw std::invalid_argument("TrainConfig: pretrain_epochs must be >= 1");
}

WindowSample build_training_sample(const VideoClip& clip, int64_t interval,
                                   int64_t labeled_index) {
  const int64_t T = static_cast<int64_t>(clip.frames.size());
  if (labeled_index < 0 || labeled_index >= T)
    throw std::invalid_argument("build_training_sample: labeled index " +
                                std::to_string(labeled_index) + " outside clip of " +
                                std::to_string(T) + " frames");
  WindowSample w;
  w.labeled = labeled_index;
  w.keyframe = std::max<int64_t>(0, labeled_index - (interval - 1));
  return w;
}

void set_joint_phase(ModelSet& models, const TrainConfig& cfg, bool phase_two) {
  auto set_all = [](auto& net, const char* prefix, bool flag) {
    net.visit(prefix, [&](const std::string&, Parameter& p) { p.trainable = flag; });
  };
  set_all(models.ref_feat, "", phase_two && cfg.ref_feat_trainable_phase2);
  set_all(models.ref_task, "", phase_two);
  set_all(models.upd_feat, "", phase_two);
  set_all(models.upd_task, "", phase_two);
  set_all(models.fusion, "", true);  // SF trains in both phases
  const bool flow_on = phase_two && cfg.flow_source == FlowSource::Learned &&
                       cfg.flow_trainable_phase2;
  set_all(models.flow, "", flow_on);
}

double joint_train_step(ModelSet& models, const VideoClip& clip, const WindowSample& w,
                        const TrainConfig& cfg, bool phase_two, Sgd& opt) {
  (void)phase_two;
  if (w.labeled < w.keyframe)
    throw std::invalid_argument("joint_train_step: empty window");
  PipelineConfig pc;
  pc.keyframe_interval = cfg.keyframe_interval;
  pc.mode = Mode::Accel;
  pc.flow_source = cfg.flow_source;

  Graph g;
  Var prev = g.leaf(clip.frames[static_cast<size_t>(w.keyframe)]);
  Var feats;
  Var scores = keyframe_forward(g, models, prev, &feats);
  Var cache = feats;
  for (int64_t t = w.keyframe + 1; t <= w.labeled; ++t) {
    Var cur = g.leaf(clip.frames[static_cast<size_t>(t)]);
    const Tensor* oracle = cfg.flow_source == FlowSource::Oracle
                               ? &clip.flows[static_cast<size_t>(t - 1)]
                               : nullptr;
    Var flow_img = pipeline_flow(g, models, pc, oracle, prev, cur);
    IntermediateOut io = intermediate_forward(g, models, cache, flow_img, cur, pc);
    cache = io.new_cache;
    scores = io.scores;
    prev = cur;
  }
  Var loss = cross_entropy(scores, clip.labels[static_cast<size_t>(w.labeled)],
                           cfg.ignore_label);
  const double loss_value = loss.value().data()[0];
  g.backward(loss);
  auto params = models.params();
  clip_grad_norm(params, cfg.clip_norm);
  opt.step(params);
  return loss_value;
}

namespace {

std::vector<size_t> shuffled_indices(size_t count, Rng& rng) {
  std::vector<size_t> idx(count);
  for (size_t i = 0; i < count; ++i) idx[i] = i;
  for (size_t i = count; i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

std::vector<Tensor> snapshot_params(const std::vector<Parameter*>& params) {
  std::vector<Tensor> snap;
  snap.reserve(params.size());
  for (const Parameter* p : params) snap.push_back(p->value.clone());
  return snap;
}

void restore_params(const std::vector<Parameter*>& params, const std::vector<Tensor>& snap) {
  for (size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i].clone();
}

double joint_val_miou(ModelSet& models, const std::vector<VideoClip>& val_clips,
                      const TrainConfig& cfg, size_t limit) {
  if (val_clips.empty()) return -1.0;
  const size_t count = limit == 0 ? val_clips.size() : std::min(limit, val_clips.size());
  Confusion conf(models.cfg.num_classes);
  for (size_t i = 0; i < count; ++i) {
    const VideoClip& clip = val_clips[i];
    const int64_t j = cfg.labeled_frame(clip.params.frames);
    PipelineConfig pc;
    pc.keyframe_interval = cfg.keyframe_interval;
    pc.mode = Mode::Accel;
    pc.flow_source = cfg.flow_source;
    pc.first_keyframe =
        schedule_eval_offsets(cfg.keyframe_interval, static_cast<int64_t>(i), j).t0;
    ClipRunResult run = run_clip(clip, pc, models);
    conf.accumulate(run.segs[static_cast<size_t>(j)], clip.labels[static_cast<size_t>(j)]);
  }
  return conf.miou();
}

}  // namespace

TrainResult train_joint(ModelSet& models, const std::vector<VideoClip>& train_clips,
                        const std::vector<VideoClip>& val_clips, const TrainConfig& cfg,
                        const std::string& log_path, const std::string& ckpt_path) {
  cfg.validate();
  if (train_clips.empty()) throw std::invalid_argument("train_joint: empty dataset");
  TrainResult result;
  result.phase1_epochs =
      static_cast<int64_t>(std::ceil(cfg.phase1_fraction * static_cast<double>(cfg.epochs)));
  Rng rng(derive_seed(cfg.seed, "joint_train"));
  Sgd opt(cfg.lr, cfg.momentum);
  auto params = models.params();
  std::vector<Tensor> best;
  const size_t val_limit = cfg.val_clips > 0 ? static_cast<size_t>(cfg.val_clips) : 0;
  const bool do_val = cfg.val_clips >= 0 && !val_clips.empty();

  using clock = std::chrono::steady_clock;
  for (int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const bool phase_two = epoch > result.phase1_epochs;
    set_joint_phase(models, cfg, phase_two);
    const auto start = clock::now();
    double loss_sum = 0.0;
    const auto order = shuffled_indices(train_clips.size(), rng);
    for (size_t idx : order) {
      const VideoClip& clip = train_clips[idx];
      const WindowSample w = build_training_sample(
          clip, cfg.keyframe_interval, cfg.labeled_frame(clip.params.frames));
      const double loss = joint_train_step(models, clip, w, cfg, phase_two, opt);
      if (!std::isfinite(loss)) result.any_nonfinite = true;
      loss_sum += loss;
    }
    EpochLogRow row;
    row.epoch = epoch;
    row.phase = phase_two ? 2 : 1;
    row.mean_loss = loss_sum / static_cast<double>(train_clips.size());
    row.val_miou = do_val ? joint_val_miou(models, val_clips, cfg, val_limit) : -1.0;
    row.wall_seconds =
        cfg.log_wall_time ? std::chrono::duration<double>(clock::now() - start).count() : 0.0;
    result.log.push_back(row);
    if (do_val && row.val_miou > result.best_val_miou) {
      result.best_val_miou = row.val_miou;
      best = snapshot_params(params);
    }
  }
  if (do_val && !best.empty()) restore_params(params, best);
  if (!log_path.empty()) write_train_log(log_path, result.log);
  if (!ckpt_path.empty()) save_joint_checkpoint(ckpt_path, models);
  return result;
}

// ---------------------------------------------------------------------------

double singleframe_miou(FeatureNet& feat, TaskNet& task, const std::vector<VideoClip>& clips,
                        const TrainConfig& cfg) {
  if (clips.empty()) return -1.0;
  Confusion conf(task.num_classes);
  for (const VideoClip& clip : clips) {
    const int64_t j = cfg.labeled_frame(clip.params.frames);
    const Tensor& frame = clip.frames[static_cast<size_t>(j)];
    Graph g;
    Var scores = task.forward(g, feat.forward(g, g.leaf(frame)), frame.shape().h,
                              frame.shape().w);
    conf.accumulate(kernels::argmax_channel(scores.value()),
                    clip.labels[static_cast<size_t>(j)]);
  }
  return conf.miou();
}

TrainResult pretrain_singleframe(FeatureNet& feat, TaskNet& task, const NetConfig& net,
                                 const std::vector<VideoClip>& train_clips,
                                 const std::vector<VideoClip>& val_clips,
                                 const TrainConfig& cfg, const std::string& log_path,
                                 const std::string& ckpt_path) {
  cfg.validate();
  if (train_clips.empty()) throw std::invalid_argument("pretrain_singleframe: empty dataset");
  TrainResult result;
  result.phase1_epochs = 0;
  Rng rng(derive_seed(cfg.seed, "pretrain"));
  Sgd opt(cfg.effective_pretrain_lr(), cfg.effective_pretrain_momentum());

  std::vector<Parameter*> params;
  feat.visit("feat.", [&](const std::string&, Parameter& p) {
    p.trainable = true;
    params.push_back(&p);
  });
  task.visit("task.", [&](const std::string&, Parameter& p) {
    p.trainable = true;
    params.push_back(&p);
  });

  std::vector<Tensor> best;
  const size_t val_limit = cfg.val_clips > 0 ? static_cast<size_t>(cfg.val_clips) : 0;
  const bool do_val = cfg.val_clips >= 0 && !val_clips.empty();
  using clock = std::chrono::steady_clock;

  for (int64_t epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
    const auto start = clock::now();
    double loss_sum = 0.0;
    const auto order = shuffled_indices(train_clips.size(), rng);
    for (size_t idx : order) {
      const VideoClip& clip = train_clips[idx];
      // any frame works: labels are dense, so draw a frame for variety
      const int64_t t = rng.uniform_int(0, clip.params.frames - 1);
      const Tensor& frame = clip.frames[static_cast<size_t>(t)];
      Graph g;
      Var scores = task.forward(g, feat.forward(g, g.leaf(frame)), frame.shape().h,
                                frame.shape().w);
      Var loss = cross_entropy(scores, clip.labels[static_cast<size_t>(t)], cfg.ignore_label);
      const double lv = loss.value().data()[0];
      if (!std::isfinite(lv)) result.any_nonfinite = true;
      loss_sum += lv;
      g.backward(loss);
      clip_grad_norm(params, cfg.clip_norm);
      opt.step(params);
    }
    EpochLogRow row;
    row.epoch = epoch;
    row.phase = 1;
    row.mean_loss = loss_sum / static_cast<double>(train_clips.size());
    double vm = -1.0;
    if (do_val) {
      std::vector<VideoClip> subset;
      if (val_limit > 0 && val_limit < val_clips.size()) {
        subset.assign(val_clips.begin(), val_clips.begin() + static_cast<long>(val_limit));
        vm = singleframe_miou(feat, task, subset, cfg);
      } else {
        vm = singleframe_miou(feat, task, val_clips, cfg);
      }
    }
    row.val_miou = vm;
    row.wall_seconds =
        cfg.log_wall_time ? std::chrono::duration<double>(clock::now() - start).count() : 0.0;
    result.log.push_back(row);
    if (do_val && row.val_miou > result.best_val_miou) {
      result.best_val_miou = row.val_miou;
      best = snapshot_params(params);
    }
  }
  if (do_val && !best.empty()) restore_params(params, best);
  if (!log_path.empty()) write_train_log(log_path, result.log);
  if (!ckpt_path.empty())
    save_singleframe_checkpoint(ckpt_path, net, feat.depth, feat, task);
  return result;
}

void write_train_log(const std::string& path, const std::vector<EpochLogRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("train log: cannot open '" + path + "'");
  f << "epoch,phase,mean_loss,val_miou,wall_seconds\n";
  char buf[160];
  for (const EpochLogRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%d,%.12g,%.12g,%.3f\n",
                  static_cast<long long>(r.epoch), r.phase, r.mean_loss, r.val_miou,
                  r.wall_seconds);
    f << buf;
  }
}

}  // namespace vseg
