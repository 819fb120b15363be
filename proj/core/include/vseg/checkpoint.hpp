#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vseg/tensor.hpp"

namespace vseg {

// Flat named-tensor container. Layout (all integers little-endian):
//   magic "VSEGCKPT" | u32 version | u32 meta count
//   per meta entry:  u32 key len, key bytes, u32 value len, value bytes
//   u64 tensor count
//   per tensor:      u32 name len, name bytes (UTF-8), 4 x i64 shape (n,c,h,w),
//                    numel x f64 (IEEE-754, row-major)
// Round-trips bit-exactly.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Tensor>> tensors;  // insertion order kept

  const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vseg
