#pragma once

#include <string>

#include "vseg/tensor.hpp"

namespace vseg {

// 8-bit RGB PNG writers (zlib-compressed) for qualitative dumps.
void write_frame_png(const std::string& path, const Tensor& frame);
void write_label_png(const std::string& path, const LabelMap& labels, int64_t num_classes);

}  // namespace vseg
