#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vseg/nets.hpp"
#include "vseg/pipeline.hpp"
#include "vseg/synthdata.hpp"
#include "vseg/train.hpp"

namespace vseg {

struct BenchConfig {
  int64_t labeled_index = -1;
  bool dense = false;
  bool rotate = true;
  int64_t fixed_offset = -1;
  bool deterministic_output = false;  // zero wall-clock columns in CSV outputs
  int64_t ablate_offset = 4;
  std::vector<int64_t> sweep_intervals = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<Depth> sweep_depths = all_depths();
  std::vector<Mode> sweep_modes = {Mode::Accel, Mode::WarpOnly, Mode::SingleFrame};
};

struct FullConfig {
  GenParams data;
  int64_t train_clips = 200;
  int64_t val_clips = 50;
  NetConfig net;
  PipelineConfig pipeline;
  TrainConfig train;
  BenchConfig bench;
};

// Key/value document: `section.key = value` lines, '#' comments. Unknown or
// duplicate keys are rejected with the offending key named.
FullConfig parse_config_text(const std::string& text, const std::string& origin);
FullConfig parse_config_file(const std::string& path);

}  // namespace vseg
