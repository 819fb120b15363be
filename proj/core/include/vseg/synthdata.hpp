#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vseg/tensor.hpp"

namespace vseg {

// Generator parameters for one synthetic clip. Objects are rigid shapes
// (rectangle, disk, triangle) moving at constant velocity over a textured,
// camera-panned background; classes are background=0 plus one class per
// shape kind.
struct GenParams {
  int64_t h = 64, w = 64;
  int64_t frames = 16;
  int64_t num_objects = 8;
  int64_t num_classes = 4;
  double velocity_max = 1.5;  // per-axis object velocity bound, px/frame
  double pan_x = 0.6;         // camera pan: image-space background velocity
  double pan_y = 0.2;
  double spawn_prob = 0.03;   // per-frame spawn and despawn probability
  double texture_amp = 0.25;
  double obj_min_size = 8.0;
  double obj_max_size = 20.0;
  uint64_t seed = 0;

  void validate() const;
};

struct VideoClip {
  GenParams params;
  std::vector<Tensor> frames;   // (1,3,h,w), values in [0,1]
  std::vector<LabelMap> labels; // one per frame, ids in [0, num_classes)
  std::vector<Tensor> flows;    // frames-1 fields (1,2,h,w); flows[t] maps
                                // frame t+1 pixels back into frame t
};

// Pure function of params (bit-identical for equal params).
VideoClip gen_clip(const GenParams& params);

// Dataset container: versioned magic header; per clip the GenParams record,
// then frames/labels/flows as length-prefixed little-endian arrays. Labels
// are stored as u8, tensors as f32 (widened to double on load).
void save_dataset(const std::string& path, const std::vector<VideoClip>& clips);
std::vector<VideoClip> load_dataset(const std::string& path);

// Exact on-disk byte size of a dataset with these clips.
int64_t dataset_file_size(const std::vector<VideoClip>& clips);

}  // namespace vseg
