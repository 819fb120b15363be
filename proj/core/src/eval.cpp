#include "vseg/eval.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace vseg {

void parallel_for_ordered(int64_t count, int threads,
                          const std::function<void(int64_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<int64_t>(threads, count));
  std::atomic<int64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&]() {
      while (true) {
        const int64_t i = next.fetch_add(1);
        if (i >= count) break;
        fn(i);
      }
    });
  }
  for (std::thread& th : pool) th.join();
}

namespace {

struct ClipScore {
  Confusion conf;
  int64_t frames_evaluated = 0;
  int64_t keyframes = 0;
  int64_t intermediates = 0;
  double seconds = 0.0;
};

}  // namespace

RunMetrics evaluate_with(const std::vector<VideoClip>& clips, int64_t num_classes,
                         int64_t interval, const EvalProtocol& proto,
                         const ClipPredictor& predictor, int threads,
                         const MacBreakdown* macs) {
  if (clips.empty()) throw std::invalid_argument("evaluate: empty dataset");
  const int64_t count = static_cast<int64_t>(clips.size());
  std::vector<ClipScore> scores(static_cast<size_t>(count));

  parallel_for_ordered(count, threads, [&](int64_t i) {
    const VideoClip& clip = clips[static_cast<size_t>(i)];
    const int64_t T = clip.params.frames;
    const int64_t j = proto.labeled_index < 0 ? T - 1 : proto.labeled_index;
    if (j < 0 || j >= T)
      throw std::invalid_argument("evaluate: labeled index " + std::to_string(j) +
                                  " outside clip of " + std::to_string(T) + " frames");
    int64_t t0 = 0;
    if (proto.rotate) {
      if (proto.fixed_offset >= 0) {
        const int64_t offset = std::min(proto.fixed_offset, j);
        t0 = (j - offset) % interval;
      } else {
        t0 = schedule_eval_offsets(interval, i, j).t0;
      }
    }
    ClipRunResult run = predictor(clip, i, t0);
    ClipScore sc;
    sc.conf = Confusion(num_classes);
    if (proto.dense) {
      for (int64_t t = 0; t < T; ++t)
        if (run.predicted[static_cast<size_t>(t)]) {
          sc.conf.accumulate(run.segs[static_cast<size_t>(t)],
                             clip.labels[static_cast<size_t>(t)]);
          ++sc.frames_evaluated;
        }
    } else {
      if (!run.predicted[static_cast<size_t>(j)])
        throw std::logic_error("evaluate: labeled frame was not predicted");
      sc.conf.accumulate(run.segs[static_cast<size_t>(j)],
                         clip.labels[static_cast<size_t>(j)]);
      sc.frames_evaluated = 1;
    }
    sc.keyframes = run.keyframe_count;
    sc.intermediates = run.intermediate_count;
    sc.seconds = run.keyframe_seconds + run.intermediate_seconds;
    scores[static_cast<size_t>(i)] = std::move(sc);
  });

  Confusion total(num_classes);
  RunMetrics m;
  m.num_classes = num_classes;
  double seconds = 0.0;
  for (const ClipScore& sc : scores) {
    total.merge(sc.conf);
    m.frames_evaluated += sc.frames_evaluated;
    m.keyframe_count += sc.keyframes;
    m.intermediate_count += sc.intermediates;
    seconds += sc.seconds;
  }
  m.class_iou.resize(static_cast<size_t>(num_classes));
  for (int64_t k = 0; k < num_classes; ++k)
    m.class_iou[static_cast<size_t>(k)] = total.iou(k);
  m.miou = total.miou();
  const int64_t processed = m.keyframe_count + m.intermediate_count;
  m.mean_seconds_per_frame = processed > 0 ? seconds / static_cast<double>(processed) : 0.0;
  if (macs) {
    m.macs_keyframe = macs->keyframe_total;
    m.macs_intermediate = macs->intermediate_total;
    if (processed > 0)
      m.macs_per_frame =
          (static_cast<double>(m.keyframe_count) * static_cast<double>(macs->keyframe_total) +
           static_cast<double>(m.intermediate_count) *
               static_cast<double>(macs->intermediate_total)) /
          static_cast<double>(processed);
  }
  return m;
}

RunMetrics evaluate(const std::vector<VideoClip>& clips, ModelSet& models,
                    const PipelineConfig& pc, const EvalProtocol& proto, int threads) {
  pc.validate();
  if (clips.empty()) throw std::invalid_argument("evaluate: empty dataset");
  const GenParams& p0 = clips.front().params;
  if (p0.num_classes != models.cfg.num_classes)
    throw std::invalid_argument("evaluate: dataset has " + std::to_string(p0.num_classes) +
                                " classes, model expects " +
                                std::to_string(models.cfg.num_classes));
  if (p0.h % models.cfg.feature_stride != 0 || p0.w % models.cfg.feature_stride != 0)
    throw std::invalid_argument("evaluate: frame dims not divisible by model stride");
  const MacBreakdown bd = mac_count(models.cfg, pc, p0.h, p0.w);

  ClipPredictor predictor;
  if (pc.mode == Mode::SingleFrame && !proto.dense) {
    // A single-frame model has no temporal state: only the scored frame
    // needs computing. Identical output to the full pass by construction.
    predictor = [&](const VideoClip& clip, int64_t, int64_t) {
      const int64_t T = clip.params.frames;
      const int64_t j = proto.labeled_index < 0 ? T - 1 : proto.labeled_index;
      ClipRunResult r;
      r.segs.resize(static_cast<size_t>(T));
      r.predicted.assign(static_cast<size_t>(T), false);
      PipelineState state;
      const auto start = std::chrono::steady_clock::now();
      StepResult step = run_keyframe(clip.frames[static_cast<size_t>(j)], state, models);
      r.keyframe_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      r.segs[static_cast<size_t>(j)] = std::move(step.seg);
      r.predicted[static_cast<size_t>(j)] = true;
      r.keyframe_count = 1;
      return r;
    };
  } else {
    predictor = [&](const VideoClip& clip, int64_t, int64_t t0) {
      PipelineConfig cfg = pc;
      cfg.first_keyframe = t0;
      return run_clip(clip, cfg, models);
    };
  }
  return evaluate_with(clips, models.cfg.num_classes, pc.keyframe_interval, proto, predictor,
                       threads, &bd);
}

}  // namespace vseg
