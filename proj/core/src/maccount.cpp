#include "vseg/maccount.hpp"

#include <stdexcept>

namespace vseg {

MacBreakdown mac_count(const NetConfig& net, const PipelineConfig& pc, int64_t h, int64_t w) {
  net.validate();
  pc.validate();
  if (h % net.feature_stride != 0 || w % net.feature_stride != 0)
    throw std::invalid_argument("mac_count: dims " + std::to_string(h) + "x" +
                                std::to_string(w) + " not divisible by stride " +
                                std::to_string(net.feature_stride));
  const int64_t fh = h / net.feature_stride, fw = w / net.feature_stride;

  // Layer structures are instantiated so the counts come from the same
  // objects that execute the forward pass.
  FeatureNet ref_feat(net, net.reference_depth, 0);
  FeatureNet upd_feat(net, net.update_depth, 0);
  TaskNet task(net, 0);
  FusionLayer score_fusion(net.num_classes);
  FusionLayer feature_fusion(net.feature_channels);
  MiniFlowNet flownet(0);

  MacBreakdown bd;
  bd.ref_feature = ref_feat.macs(h, w);
  bd.upd_feature = upd_feat.macs(h, w);
  bd.ref_task = task.macs(fh, fw, h, w);
  bd.upd_task = task.macs(fh, fw, h, w);
  bd.warp = 4 * net.feature_channels * fh * fw;
  bd.flow = pc.flow_source == FlowSource::Learned ? flownet.macs(h, w) : 0;
  bd.fusion = net.fusion_location == FusionLocation::Score ? score_fusion.macs(h, w)
                                                           : feature_fusion.macs(fh, fw);

  bd.keyframe_total = bd.ref_feature + bd.ref_task;

  switch (pc.mode) {
    case Mode::SingleFrame:
      bd.intermediate_total = bd.keyframe_total;  // every frame pays the full net
      break;
    case Mode::WarpOnly:
      bd.intermediate_total = bd.flow + bd.warp + bd.ref_task;
      break;
    case Mode::Accel:
      if (net.fusion_location == FusionLocation::Feature) {
        if (pc.mask_update)
          bd.intermediate_total = bd.flow + bd.warp + bd.ref_task;
        else if (pc.mask_reference)
          bd.intermediate_total = bd.flow + bd.warp + bd.upd_feature + bd.ref_task;
        else
          bd.intermediate_total =
              bd.flow + bd.warp + bd.fusion + bd.upd_feature + bd.ref_task;
      } else {
        if (pc.mask_update)
          bd.intermediate_total = bd.flow + bd.warp + bd.ref_task;
        else if (pc.mask_reference)
          bd.intermediate_total = bd.flow + bd.warp + bd.upd_feature + bd.upd_task;
        else
          bd.intermediate_total = bd.flow + bd.warp + bd.ref_task +
                                  (bd.upd_feature + bd.upd_task) + bd.fusion;
      }
      break;
  }
  return bd;
}

double blended_macs_per_frame(const MacBreakdown& bd, int64_t interval) {
  if (interval < 1) throw std::invalid_argument("blended_macs_per_frame: interval must be >= 1");
  return (static_cast<double>(bd.keyframe_total) +
          static_cast<double>(interval - 1) * static_cast<double>(bd.intermediate_total)) /
         static_cast<double>(interval);
}

int64_t fusion_layer_macs(const NetConfig& net, FusionLocation loc, int64_t grid_h,
                          int64_t grid_w) {
  const int64_t c = loc == FusionLocation::Score ? net.num_classes : net.feature_channels;
  return 2 * c * c * grid_h * grid_w;
}

}  // namespace vseg
