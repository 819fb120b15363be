#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vseg/checkpoint.hpp"
#include "vseg/graph.hpp"
#include "vseg/rng.hpp"
#include "vseg/tensor.hpp"

namespace vseg {

// Update/reference trunk depth; maps to the number of residual-style blocks.
enum class Depth { T18, T34, T50, T101 };

int64_t depth_blocks(Depth d);
std::string depth_name(Depth d);
Depth depth_from_name(const std::string& s);
const std::vector<Depth>& all_depths();

enum class FusionLocation { Score, Feature };
std::string fusion_location_name(FusionLocation f);
FusionLocation fusion_location_from_name(const std::string& s);

struct NetConfig {
  int64_t num_classes = 4;
  int64_t feature_channels = 32;  // C_f
  int64_t feature_stride = 4;     // s, power of two
  Depth update_depth = Depth::T18;
  Depth reference_depth = Depth::T101;
  FusionLocation fusion_location = FusionLocation::Score;

  void validate() const;
};

using ParamVisitor = std::function<void(const std::string&, Parameter&)>;

// ---------------------------------------------------------------------------

struct ConvLayer {
  Parameter w, b;
  int64_t stride = 1, pad = 0;
  bool has_bias = true;

  ConvLayer() = default;
  ConvLayer(int64_t cin, int64_t cout, int64_t k, int64_t stride, int64_t pad,
            bool bias = true);

  void init_kaiming(Rng& rng);
  void init_zero();
  Var forward(Graph& g, Var x);
  void visit(const std::string& prefix, const ParamVisitor& fn);
  int64_t macs(int64_t in_h, int64_t in_w) const;
  int64_t out_dim(int64_t in) const { return (in + 2 * pad - w.value.shape().h) / stride + 1; }
};

struct UpsampleLayer {
  Parameter w;  // (c, c, k, k), bilinear-initialized, trainable
  int64_t factor = 1;

  UpsampleLayer() = default;
  UpsampleLayer(int64_t channels, int64_t factor);

  Var forward(Graph& g, Var x, int64_t target_h, int64_t target_w);
  void visit(const std::string& prefix, const ParamVisitor& fn);
  int64_t macs(int64_t target_h, int64_t target_w) const;
};

// Downsampling stem (stride-2 convs reaching `stride`) followed by
// residual-style blocks at constant resolution.
struct FeatureNet {
  int64_t stride = 4;
  int64_t channels = 32;
  Depth depth = Depth::T18;
  std::vector<ConvLayer> stem;
  struct Block {
    ConvLayer a, b;
  };
  std::vector<Block> blocks;
  mutable std::atomic<int64_t> forward_count{0};

  FeatureNet() = default;
  FeatureNet(const NetConfig& cfg, Depth depth, uint64_t seed);

  Var forward(Graph& g, Var frame);
  void visit(const std::string& prefix, const ParamVisitor& fn);
  int64_t macs(int64_t h, int64_t w) const;
  int64_t param_count() const;
};

// 1x1 projection + 1x1 scoring + bilinear upsampling back to frame size.
struct TaskNet {
  int64_t in_channels = 32;
  int64_t num_classes = 4;
  ConvLayer proj, score;
  UpsampleLayer up;

  TaskNet() = default;
  TaskNet(const NetConfig& cfg, uint64_t seed);

  Var forward(Graph& g, Var features, int64_t target_h, int64_t target_w);
  void visit(const std::string& prefix, const ParamVisitor& fn);
  int64_t macs(int64_t fh, int64_t fw, int64_t th, int64_t tw) const;
};

// Single bias-free 1x1 convolution over the channel-stacked branch pair.
// Averaging initialization makes the untrained layer an exact mean.
struct FusionLayer {
  int64_t channels = 0;  // per-branch channel count
  ConvLayer conv;

  FusionLayer() = default;
  explicit FusionLayer(int64_t channels);

  Var forward(Graph& g, Var a, Var b);
  void visit(const std::string& prefix, const ParamVisitor& fn);
  int64_t macs(int64_t h, int64_t w) const;
};

// Miniature encoder-decoder flow estimator over a frame pair; the final
// layer is zero-initialized so the initial flow field is identically zero.
struct MiniFlowNet {
  ConvLayer e1, e2, mid, d1, d2, out;
  UpsampleLayer up1, up2;

  MiniFlowNet() = default;
  explicit MiniFlowNet(uint64_t seed);

  Var forward(Graph& g, Var prev_frame, Var cur_frame);
  void visit(const std::string& prefix, const ParamVisitor& fn);
  int64_t macs(int64_t h, int64_t w) const;
};

// ---------------------------------------------------------------------------

// Softmax + argmax of a score map.
struct OutputBlockResult {
  Tensor probs;
  LabelMap seg;
};
OutputBlockResult output_block(const Tensor& scores);

// The full two-branch model bundle. Non-copyable (owns stable Parameters).
struct ModelSet {
  NetConfig cfg;
  FeatureNet ref_feat, upd_feat;
  TaskNet ref_task, upd_task;
  FusionLayer fusion;
  MiniFlowNet flow;

  ModelSet(const NetConfig& cfg, uint64_t seed);
  ModelSet(const ModelSet&) = delete;
  ModelSet& operator=(const ModelSet&) = delete;

  void visit(const ParamVisitor& fn);
  std::vector<Parameter*> params();
  void zero_grads();
  int64_t fusion_channels() const {
    return cfg.fusion_location == FusionLocation::Score ? cfg.num_classes
                                                        : cfg.feature_channels;
  }
};

// Checkpoint helpers. Single-frame checkpoints carry one feature+task pair
// under the feat./task. prefixes; joint checkpoints carry the whole bundle.
void save_singleframe_checkpoint(const std::string& path, const NetConfig& cfg,
                                 Depth depth, FeatureNet& feat, TaskNet& task);
void save_joint_checkpoint(const std::string& path, ModelSet& models);

std::map<std::string, std::string> net_config_to_meta(const NetConfig& cfg);
NetConfig net_config_from_meta(const std::map<std::string, std::string>& meta);

// Copies checkpoint tensors into visited parameters; `ckpt_prefix` replaces
// `param_prefix` during lookup. Missing names or shape mismatches throw.
void assign_from_checkpoint(const Checkpoint& ckpt, const std::string& ckpt_prefix,
                            const std::string& param_prefix,
                            const std::function<void(const ParamVisitor&)>& visit);

// Loads the pretrained branch checkpoints into a fresh joint model.
void init_branches_from_pretrained(ModelSet& models, const std::string& ref_ckpt_path,
                                   const std::string& upd_ckpt_path);

std::unique_ptr<ModelSet> load_joint_models(const std::string& path);

// Builds a bundle whose reference branch holds a pretrained single-frame
// net, for running it as a per-frame baseline.
std::unique_ptr<ModelSet> load_singleframe_as_reference(const std::string& path);

}  // namespace vseg
