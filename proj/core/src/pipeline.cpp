#include "vseg/pipeline.hpp"

#include <chrono>
#include <stdexcept>

#include "vseg/kernels.hpp"

namespace vseg {

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::Accel: return "accel";
    case Mode::WarpOnly: return "warp_only";
    case Mode::SingleFrame: return "single_frame";
  }
  throw std::logic_error("mode_name: bad mode");
}

Mode mode_from_name(const std::string& s) {
  if (s == "accel") return Mode::Accel;
  if (s == "warp_only") return Mode::WarpOnly;
  if (s == "single_frame") return Mode::SingleFrame;
  throw std::invalid_argument("unknown mode '" + s + "' (expect accel|warp_only|single_frame)");
}

std::string flow_source_name(FlowSource f) {
  return f == FlowSource::Oracle ? "oracle" : "learned";
}

FlowSource flow_source_from_name(const std::string& s) {
  if (s == "oracle") return FlowSource::Oracle;
  if (s == "learned") return FlowSource::Learned;
  throw std::invalid_argument("unknown flow source '" + s + "' (expect oracle|learned)");
}

void PipelineConfig::validate() const {
  if (keyframe_interval < 1)
    throw std::invalid_argument("PipelineConfig: keyframe_interval must be >= 1, got " +
                                std::to_string(keyframe_interval));
  if (first_keyframe < 0)
    throw std::invalid_argument("PipelineConfig: first_keyframe must be >= 0");
  if (mask_reference && mask_update)
    throw std::invalid_argument("PipelineConfig: masking both branches leaves no prediction path");
}

// ---------------------------------------------------------------------------

Var keyframe_forward(Graph& g, ModelSet& m, Var frame, Var* features_out) {
  const Shape& s = frame.value().shape();
  Var feats = m.ref_feat.forward(g, frame);
  if (features_out) *features_out = feats;
  return m.ref_task.forward(g, feats, s.h, s.w);
}

Var pipeline_flow(Graph& g, ModelSet& m, const PipelineConfig& pc,
                  const Tensor* oracle_flow, Var prev_frame, Var cur_frame) {
  if (pc.flow_source == FlowSource::Oracle) {
    if (!oracle_flow)
      throw std::invalid_argument("pipeline: oracle flow source but no flow provided");
    return g.leaf(*oracle_flow);
  }
  return m.flow.forward(g, prev_frame, cur_frame);
}

IntermediateOut intermediate_forward(Graph& g, ModelSet& m, Var cache, Var flow_image,
                                     Var frame, const PipelineConfig& pc) {
  pc.validate();
  const Shape& fs = frame.value().shape();
  IntermediateOut out;
  Var flow_feat = downscale_flow(flow_image, m.cfg.feature_stride);
  out.new_cache = warp(cache, flow_feat);

  if (pc.mode == Mode::WarpOnly) {
    out.ref_scores = m.ref_task.forward(g, out.new_cache, fs.h, fs.w);
    out.scores = out.ref_scores;
    return out;
  }

  if (m.cfg.fusion_location == FusionLocation::Feature) {
    // fuse raw features ahead of the (single) task net
    Var upd_features = m.upd_feat.forward(g, frame);
    if (pc.mask_update) {
      out.scores = m.ref_task.forward(g, out.new_cache, fs.h, fs.w);
      out.ref_scores = out.scores;
    } else if (pc.mask_reference) {
      out.scores = m.ref_task.forward(g, upd_features, fs.h, fs.w);
      out.upd_scores = out.scores;
    } else {
      Var fused = m.fusion.forward(g, out.new_cache, upd_features);
      out.scores = m.ref_task.forward(g, fused, fs.h, fs.w);
    }
    return out;
  }

  if (!pc.mask_reference)
    out.ref_scores = m.ref_task.forward(g, out.new_cache, fs.h, fs.w);
  if (!pc.mask_update)
    out.upd_scores = m.upd_task.forward(g, m.upd_feat.forward(g, frame), fs.h, fs.w);

  if (pc.mask_update)
    out.scores = out.ref_scores;
  else if (pc.mask_reference)
    out.scores = out.upd_scores;
  else
    out.scores = m.fusion.forward(g, out.ref_scores, out.upd_scores);
  return out;
}

// ---------------------------------------------------------------------------

StepResult run_keyframe(const Tensor& frame, PipelineState& state, ModelSet& m) {
  Graph g;
  Var feats;
  Var scores = keyframe_forward(g, m, g.leaf(frame), &feats);
  StepResult r;
  r.scores = scores.value();
  auto ob = output_block(r.scores);
  r.probs = std::move(ob.probs);
  r.seg = std::move(ob.seg);
  state.cache = feats.value();
  state.prev_frame = frame;
  return r;
}

StepResult run_intermediate(const Tensor& frame, const Tensor* oracle_flow,
                            PipelineState& state, ModelSet& m, const PipelineConfig& pc) {
  if (!state.has_cache())
    throw std::logic_error("run_intermediate: no cached keyframe features (keyframe must run first)");
  Graph g;
  Var prev = g.leaf(state.prev_frame);
  Var cur = g.leaf(frame);
  Var flow_img = pipeline_flow(g, m, pc, oracle_flow, prev, cur);
  IntermediateOut io = intermediate_forward(g, m, g.leaf(state.cache), flow_img, cur, pc);
  StepResult r;
  r.scores = io.scores.value();
  auto ob = output_block(r.scores);
  r.probs = std::move(ob.probs);
  r.seg = std::move(ob.seg);
  state.cache = io.new_cache.value();  // incremental warping persists
  state.prev_frame = frame;
  return r;
}

ClipRunResult run_clip(const VideoClip& clip, const PipelineConfig& pc, ModelSet& m) {
  pc.validate();
  const int64_t T = static_cast<int64_t>(clip.frames.size());
  if (T == 0) throw std::invalid_argument("run_clip: empty clip");
  if (pc.first_keyframe >= T)
    throw std::invalid_argument("run_clip: first_keyframe " +
                                std::to_string(pc.first_keyframe) + " beyond clip length " +
                                std::to_string(T));
  ClipRunResult res;
  res.t0 = pc.first_keyframe;
  res.segs.resize(static_cast<size_t>(T));
  res.predicted.assign(static_cast<size_t>(T), false);
  PipelineState state;
  using clock = std::chrono::steady_clock;
  for (int64_t t = res.t0; t < T; ++t) {
    const bool keyframe =
        pc.mode == Mode::SingleFrame || (t - res.t0) % pc.keyframe_interval == 0;
    const auto start = clock::now();
    StepResult step;
    if (keyframe) {
      step = run_keyframe(clip.frames[static_cast<size_t>(t)], state, m);
      state.last_keyframe = t;
      ++res.keyframe_count;
    } else {
      const Tensor* oracle =
          pc.flow_source == FlowSource::Oracle ? &clip.flows[static_cast<size_t>(t - 1)] : nullptr;
      step = run_intermediate(clip.frames[static_cast<size_t>(t)], oracle, state, m, pc);
      ++res.intermediate_count;
    }
    const double secs = std::chrono::duration<double>(clock::now() - start).count();
    if (keyframe)
      res.keyframe_seconds += secs;
    else
      res.intermediate_seconds += secs;
    res.segs[static_cast<size_t>(t)] = std::move(step.seg);
    res.predicted[static_cast<size_t>(t)] = true;
  }
  return res;
}

EvalSchedule schedule_eval_offsets(int64_t interval, int64_t clip_ordinal,
                                   int64_t labeled_index) {
  if (interval < 1) throw std::invalid_argument("schedule_eval_offsets: interval must be >= 1");
  if (labeled_index < 0)
    throw std::invalid_argument("schedule_eval_offsets: labeled_index must be >= 0");
  EvalSchedule s;
  const int64_t desired = clip_ordinal % interval;
  s.offset = std::min(desired, labeled_index);  // clamp for short clips
  s.t0 = (labeled_index - s.offset) % interval;
  return s;
}

}  // namespace vseg
