#include "vseg/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <stdexcept>

#include "vseg/svgplot.hpp"

namespace vseg {

namespace {

std::string csv_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

ModelSet& cached_models(std::map<std::string, std::unique_ptr<ModelSet>>& cache,
                        const std::string& path, bool joint) {
  auto it = cache.find(path);
  if (it != cache.end()) return *it->second;
  auto models = joint ? load_joint_models(path) : load_singleframe_as_reference(path);
  return *cache.emplace(path, std::move(models)).first->second;
}

}  // namespace

std::vector<SweepRow> sweep(const SweepSpec& spec, const std::vector<VideoClip>& clips) {
  if (spec.modes.empty() || spec.depths.empty() || spec.intervals.empty())
    throw std::invalid_argument("sweep: empty grid");
  std::map<std::string, std::unique_ptr<ModelSet>> cache;
  std::vector<SweepRow> rows;
  for (Mode mode : spec.modes) {
    for (Depth depth : spec.depths) {
      std::string path;
      bool joint = false;
      switch (mode) {
        case Mode::Accel:
          path = spec.ckpt_dir + "/joint_" + depth_name(depth) + ".ckpt";
          joint = true;
          break;
        case Mode::WarpOnly:
          path = spec.ckpt_dir + "/pretrain_ref.ckpt";
          break;
        case Mode::SingleFrame:
          path = spec.ckpt_dir + "/pretrain_single_" + depth_name(depth) + ".ckpt";
          break;
      }
      ModelSet& models = cached_models(cache, path, joint);
      for (int64_t interval : spec.intervals) {
        PipelineConfig pc;
        pc.mode = mode;
        pc.keyframe_interval = interval;
        pc.flow_source = spec.flow_source;
        RunMetrics m = evaluate(clips, models, pc, spec.protocol, spec.threads);
        SweepRow row;
        row.mode = mode;
        row.depth = depth;
        row.interval = interval;
        row.miou = m.miou;
        row.macs_per_frame = m.macs_per_frame;
        row.seconds_per_frame = m.mean_seconds_per_frame;
        row.macs_keyframe = m.macs_keyframe;
        row.macs_intermediate = m.macs_intermediate;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     bool deterministic) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("sweep csv: cannot open '" + path + "'");
  f << "mode,update_depth,keyframe_interval,miou,macs_per_frame,seconds_per_frame,"
       "macs_keyframe,macs_intermediate\n";
  for (const SweepRow& r : rows) {
    f << mode_name(r.mode) << ',' << depth_name(r.depth) << ',' << r.interval << ','
      << csv_num(r.miou) << ',' << csv_num(r.macs_per_frame) << ','
      << csv_num(deterministic ? 0.0 : r.seconds_per_frame) << ',' << r.macs_keyframe << ','
      << r.macs_intermediate << '\n';
  }
}

void write_sweep_svgs(const std::string& curves_path, const std::string& pareto_path,
                      const std::vector<SweepRow>& rows) {
  // curves: mIoU vs keyframe interval, one series per (mode, depth); the
  // warp-only path has no update net, so it gets a single series
  std::vector<PlotSeries> curves;
  for (Mode mode : {Mode::Accel, Mode::WarpOnly, Mode::SingleFrame}) {
    bool mode_emitted = false;
    for (Depth depth : all_depths()) {
      if (mode == Mode::WarpOnly && mode_emitted) break;
      PlotSeries s;
      s.label = mode == Mode::WarpOnly ? mode_name(mode)
                                       : mode_name(mode) + "/" + depth_name(depth);
      for (const SweepRow& r : rows)
        if (r.mode == mode && r.depth == depth)
          s.points.emplace_back(static_cast<double>(r.interval), r.miou);
      if (!s.points.empty()) {
        std::sort(s.points.begin(), s.points.end());
        curves.push_back(std::move(s));
        mode_emitted = true;
      }
    }
  }
  write_svg_chart(curves_path, "accuracy vs keyframe interval", "keyframe interval", "mIoU",
                  curves);

  // pareto: mIoU vs blended MACs/frame, one scatter series per mode
  std::vector<PlotSeries> pareto;
  for (Mode mode : {Mode::Accel, Mode::WarpOnly, Mode::SingleFrame}) {
    PlotSeries s;
    s.label = mode_name(mode);
    s.line = false;
    for (const SweepRow& r : rows)
      if (r.mode == mode) s.points.emplace_back(r.macs_per_frame, r.miou);
    if (!s.points.empty()) {
      std::sort(s.points.begin(), s.points.end());
      pareto.push_back(std::move(s));
    }
  }
  write_svg_chart(pareto_path, "accuracy vs compute", "MACs per frame", "mIoU", pareto);
}

void write_metrics_csv(const std::string& path, const RunMetrics& m, Mode mode, Depth depth,
                       int64_t interval, bool deterministic) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("metrics csv: cannot open '" + path + "'");
  f << "mode,update_depth,keyframe_interval,miou";
  for (int64_t k = 0; k < m.num_classes; ++k) f << ",iou_class" << k;
  f << ",frames,macs_per_frame,macs_keyframe,macs_intermediate,seconds_per_frame\n";
  f << mode_name(mode) << ',' << depth_name(depth) << ',' << interval << ','
    << csv_num(m.miou);
  for (int64_t k = 0; k < m.num_classes; ++k)
    f << ',' << csv_num(m.class_iou[static_cast<size_t>(k)]);
  f << ',' << m.frames_evaluated << ',' << csv_num(m.macs_per_frame) << ','
    << m.macs_keyframe << ',' << m.macs_intermediate << ','
    << csv_num(deterministic ? 0.0 : m.mean_seconds_per_frame) << '\n';
}

// ---------------------------------------------------------------------------

std::vector<AblateRow> ablate(ModelSet& models, const std::vector<VideoClip>& clips,
                              int64_t interval, int64_t offset, FlowSource flow_source,
                              int threads) {
  EvalProtocol proto;
  proto.rotate = true;
  proto.fixed_offset = offset;
  std::vector<AblateRow> rows;
  struct Setting {
    const char* name;
    bool mask_ref;
    bool mask_upd;
  };
  const Setting settings[] = {{"reference_only", false, true},
                              {"update_only", true, false},
                              {"fused", false, false}};
  for (const Setting& s : settings) {
    PipelineConfig pc;
    pc.mode = Mode::Accel;
    pc.keyframe_interval = interval;
    pc.flow_source = flow_source;
    pc.mask_reference = s.mask_ref;
    pc.mask_update = s.mask_upd;
    RunMetrics m = evaluate(clips, models, pc, proto, threads);
    rows.push_back({s.name, m.miou, m.macs_per_frame});
  }
  return rows;
}

void write_ablate_csv(const std::string& path, const std::vector<AblateRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("ablate csv: cannot open '" + path + "'");
  f << "setting,miou,macs_per_frame\n";
  for (const AblateRow& r : rows)
    f << r.setting << ',' << csv_num(r.miou) << ',' << csv_num(r.macs_per_frame) << '\n';
}

// ---------------------------------------------------------------------------

std::vector<FusionCompareRow> compare_fusion_location(
    ModelSet& score_models, ModelSet& feature_models, const std::vector<VideoClip>& clips,
    int64_t interval, int64_t offset, FlowSource flow_source, int threads) {
  if (score_models.cfg.fusion_location != FusionLocation::Score ||
      feature_models.cfg.fusion_location != FusionLocation::Feature)
    throw std::invalid_argument(
        "compare_fusion_location: checkpoints do not match the requested locations");
  EvalProtocol proto;
  proto.rotate = true;
  proto.fixed_offset = offset;
  std::vector<FusionCompareRow> rows;
  for (ModelSet* models : {&feature_models, &score_models}) {  // sorted by location name
    PipelineConfig pc;
    pc.mode = Mode::Accel;
    pc.keyframe_interval = interval;
    pc.flow_source = flow_source;
    RunMetrics m = evaluate(clips, *models, pc, proto, threads);
    const NetConfig& net = models->cfg;
    const GenParams& p0 = clips.front().params;
    FusionCompareRow row;
    row.location = net.fusion_location;
    row.miou = m.miou;
    row.fusion_layer_macs_feature_grid =
        fusion_layer_macs(net, net.fusion_location, p0.h / net.feature_stride,
                          p0.w / net.feature_stride);
    row.macs_per_frame = m.macs_per_frame;
    rows.push_back(row);
  }
  return rows;
}

void write_fusion_csv(const std::string& path, const std::vector<FusionCompareRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("fusion csv: cannot open '" + path + "'");
  f << "location,miou,fusion_layer_macs_feature_grid,macs_per_frame\n";
  for (const FusionCompareRow& r : rows)
    f << fusion_location_name(r.location) << ',' << csv_num(r.miou) << ','
      << r.fusion_layer_macs_feature_grid << ',' << csv_num(r.macs_per_frame) << '\n';
}

}  // namespace vseg
