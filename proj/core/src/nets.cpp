#include "vseg/nets.hpp"

#include <cmath>
#include <stdexcept>

#include "vseg/kernels.hpp"

namespace vseg {

int64_t depth_blocks(Depth d) {
  switch (d) {
    case Depth::T18: return 1;
    case Depth::T34: return 2;
    case Depth::T50: return 3;
    case Depth::T101: return 6;
  }
  throw std::logic_error("depth_blocks: bad depth");
}

std::string depth_name(Depth d) {
  switch (d) {
    case Depth::T18: return "t18";
    case Depth::T34: return "t34";
    case Depth::T50: return "t50";
    case Depth::T101: return "t101";
  }
  throw std::logic_error("depth_name: bad depth");
}

Depth depth_from_name(const std::string& s) {
  for (Depth d : all_depths())
    if (depth_name(d) == s) return d;
  throw std::invalid_argument("unknown depth '" + s + "' (expect t18|t34|t50|t101)");
}

const std::vector<Depth>& all_depths() {
  static const std::vector<Depth> v = {Depth::T18, Depth::T34, Depth::T50, Depth::T101};
  return v;
}

std::string fusion_location_name(FusionLocation f) {
  return f == FusionLocation::Score ? "score" : "feature";
}

FusionLocation fusion_location_from_name(const std::string& s) {
  if (s == "score") return FusionLocation::Score;
  if (s == "feature") return FusionLocation::Feature;
  throw std::invalid_argument("unknown fusion location '" + s + "' (expect score|feature)");
}

void NetConfig::validate() const {
  if (num_classes < 2)
    throw std::invalid_argument("NetConfig: num_classes must be >= 2, got " +
                                std::to_string(num_classes));
  if (feature_channels < 2 || feature_channels % 2 != 0)
    throw std::invalid_argument("NetConfig: feature_channels must be even and >= 2, got " +
                                std::to_string(feature_channels));
  if (feature_stride < 1 || (feature_stride & (feature_stride - 1)) != 0)
    throw std::invalid_argument("NetConfig: feature_stride must be a power of 2, got " +
                                std::to_string(feature_stride));
}

// ---------------------------------------------------------------------------

ConvLayer::ConvLayer(int64_t cin, int64_t cout, int64_t k, int64_t stride_, int64_t pad_,
                     bool bias)
    : w("w", {cout, cin, k, k}),
      b("b", bias ? Shape{1, cout, 1, 1} : Shape{0, 0, 0, 0}),
      stride(stride_),
      pad(pad_),
      has_bias(bias) {}

void ConvLayer::init_kaiming(Rng& rng) {
  const Shape& s = w.value.shape();
  const double fan_in = static_cast<double>(s.c * s.h * s.w);
  const double bound = std::sqrt(6.0 / fan_in);
  double* p = w.value.data();
  for (int64_t i = 0; i < w.value.numel(); ++i) p[i] = rng.uniform(-bound, bound);
}

void ConvLayer::init_zero() {
  double* p = w.value.data();
  for (int64_t i = 0; i < w.value.numel(); ++i) p[i] = 0.0;
}

Var ConvLayer::forward(Graph& g, Var x) {
  Var wv = g.param(w);
  Var bv = has_bias ? g.param(b) : g.leaf(Tensor());
  return conv2d(x, wv, bv, stride, pad);
}

void ConvLayer::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".w", w);
  if (has_bias) fn(prefix + ".b", b);
}

int64_t ConvLayer::macs(int64_t in_h, int64_t in_w) const {
  const Shape& s = w.value.shape();
  const int64_t oh = (in_h + 2 * pad - s.h) / stride + 1;
  const int64_t ow = (in_w + 2 * pad - s.w) / stride + 1;
  return s.n * s.c * s.h * s.w * oh * ow;
}

UpsampleLayer::UpsampleLayer(int64_t channels, int64_t factor_)
    : w("w", {channels, channels, factor_ == 1 ? 1 : 2 * factor_,
              factor_ == 1 ? 1 : 2 * factor_}),
      factor(factor_) {
  const int64_t k = w.value.shape().h;
  for (int64_t c = 0; c < channels; ++c)
    for (int64_t ky = 0; ky < k; ++ky)
      for (int64_t kx = 0; kx < k; ++kx)
        w.value.at(c, c, ky, kx) =
            kernels::bilinear_tap(ky, factor) * kernels::bilinear_tap(kx, factor);
}

Var UpsampleLayer::forward(Graph& g, Var x, int64_t target_h, int64_t target_w) {
  return upsample_scores(x, g.param(w), factor, target_h, target_w);
}

void UpsampleLayer::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".w", w);
}

int64_t UpsampleLayer::macs(int64_t target_h, int64_t target_w) const {
  const Shape& s = w.value.shape();
  const int64_t taps = factor == 1 ? 1 : 2;
  return s.n * s.c * taps * taps * target_h * target_w;
}

// ---------------------------------------------------------------------------

FeatureNet::FeatureNet(const NetConfig& cfg, Depth depth_, uint64_t seed)
    : stride(cfg.feature_stride), channels(cfg.feature_channels), depth(depth_) {
  Rng rng(seed);
  int64_t levels = 0;
  for (int64_t s = stride; s > 1; s /= 2) ++levels;
  if (levels == 0) {
    stem.emplace_back(3, channels, 3, 1, 1);
  } else {
    int64_t cin = 3;
    for (int64_t i = 0; i < levels; ++i) {
      int64_t cout = channels >> (levels - 1 - i);
      cout = std::max<int64_t>(cout, 4);
      if (i == levels - 1) cout = channels;
      stem.emplace_back(cin, cout, 3, 2, 1);
      cin = cout;
    }
  }
  for (ConvLayer& c : stem) c.init_kaiming(rng);
  const int64_t nb = depth_blocks(depth);
  blocks.reserve(static_cast<size_t>(nb));
  for (int64_t i = 0; i < nb; ++i) {
    Block blk{ConvLayer(channels, channels, 3, 1, 1), ConvLayer(channels, channels, 3, 1, 1)};
    blk.a.init_kaiming(rng);
    blk.b.init_kaiming(rng);
    blocks.push_back(std::move(blk));
  }
}

Var FeatureNet::forward(Graph& g, Var frame) {
  const Shape& s = frame.value().shape();
  if (s.c != 3)
    throw std::invalid_argument("FeatureNet: expected 3-channel frame, got " + s.str());
  if (s.h % stride != 0 || s.w % stride != 0)
    throw std::invalid_argument("FeatureNet: frame dims " + s.str() +
                                " not divisible by stride " + std::to_string(stride));
  forward_count.fetch_add(1, std::memory_order_relaxed);
  Var x = frame;
  for (ConvLayer& c : stem) x = relu(c.forward(g, x));
  for (Block& blk : blocks) {
    Var y = relu(blk.a.forward(g, x));
    y = blk.b.forward(g, y);
    x = relu(add(x, y));
  }
  return x;
}

void FeatureNet::visit(const std::string& prefix, const ParamVisitor& fn) {
  for (size_t i = 0; i < stem.size(); ++i) stem[i].visit(prefix + "stem" + std::to_string(i), fn);
  for (size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].a.visit(prefix + "block" + std::to_string(i) + ".a", fn);
    blocks[i].b.visit(prefix + "block" + std::to_string(i) + ".b", fn);
  }
}

int64_t FeatureNet::macs(int64_t h, int64_t w) const {
  int64_t total = 0;
  int64_t ch = h, cw = w;
  for (const ConvLayer& c : stem) {
    total += c.macs(ch, cw);
    ch = c.out_dim(ch);
    cw = c.out_dim(cw);
  }
  for (const Block& blk : blocks) total += blk.a.macs(ch, cw) + blk.b.macs(ch, cw);
  return total;
}

int64_t FeatureNet::param_count() const {
  int64_t total = 0;
  auto count = [&](const ConvLayer& c) {
    total += c.w.value.numel() + (c.has_bias ? c.b.value.numel() : 0);
  };
  for (const ConvLayer& c : stem) count(c);
  for (const Block& blk : blocks) {
    count(blk.a);
    count(blk.b);
  }
  return total;
}

// ---------------------------------------------------------------------------

TaskNet::TaskNet(const NetConfig& cfg, uint64_t seed)
    : in_channels(cfg.feature_channels),
      num_classes(cfg.num_classes),
      proj(cfg.feature_channels, cfg.feature_channels / 2, 1, 1, 0),
      score(cfg.feature_channels / 2, cfg.num_classes, 1, 1, 0),
      up(cfg.num_classes, cfg.feature_stride) {
  Rng rng(seed);
  proj.init_kaiming(rng);
  score.init_kaiming(rng);
}

Var TaskNet::forward(Graph& g, Var features, int64_t target_h, int64_t target_w) {
  const Shape& s = features.value().shape();
  if (s.c != in_channels)
    throw std::invalid_argument("TaskNet: features have " + std::to_string(s.c) +
                                " channels, expected " + std::to_string(in_channels));
  Var x = relu(proj.forward(g, features));
  x = score.forward(g, x);
  return up.forward(g, x, target_h, target_w);
}

void TaskNet::visit(const std::string& prefix, const ParamVisitor& fn) {
  proj.visit(prefix + "proj", fn);
  score.visit(prefix + "score", fn);
  up.visit(prefix + "up", fn);
}

int64_t TaskNet::macs(int64_t fh, int64_t fw, int64_t th, int64_t tw) const {
  return proj.macs(fh, fw) + score.macs(fh, fw) + up.macs(th, tw);
}

// ---------------------------------------------------------------------------

FusionLayer::FusionLayer(int64_t channels_)
    : channels(channels_), conv(2 * channels_, channels_, 1, 1, 0, /*bias=*/false) {
  for (int64_t o = 0; o < channels; ++o) {
    conv.w.value.at(o, o, 0, 0) = 0.5;
    conv.w.value.at(o, channels + o, 0, 0) = 0.5;
  }
}

Var FusionLayer::forward(Graph& g, Var a, Var b) {
  const Shape& as = a.value().shape();
  const Shape& bs = b.value().shape();
  if (!(as == bs))
    throw std::invalid_argument("FusionLayer: branch shapes differ: " + as.str() + " vs " +
                                bs.str());
  if (as.c != channels)
    throw std::invalid_argument("FusionLayer: branch has " + std::to_string(as.c) +
                                " channels, layer expects " + std::to_string(channels));
  return conv.forward(g, concat_channel(a, b));
}

void FusionLayer::visit(const std::string& prefix, const ParamVisitor& fn) {
  conv.visit(prefix + "conv", fn);
}

int64_t FusionLayer::macs(int64_t h, int64_t w) const { return conv.macs(h, w); }

// ---------------------------------------------------------------------------

MiniFlowNet::MiniFlowNet(uint64_t seed)
    : e1(6, 8, 3, 2, 1),
      e2(8, 16, 3, 2, 1),
      mid(16, 16, 3, 1, 1),
      d1(16, 8, 3, 1, 1),
      d2(8, 8, 3, 1, 1),
      out(8, 2, 3, 1, 1),
      up1(16, 2),
      up2(8, 2) {
  Rng rng(seed);
  e1.init_kaiming(rng);
  e2.init_kaiming(rng);
  mid.init_kaiming(rng);
  d1.init_kaiming(rng);
  d2.init_kaiming(rng);
  out.init_zero();  // zero flow at initialization
}

Var MiniFlowNet::forward(Graph& g, Var prev_frame, Var cur_frame) {
  const Shape& ps = prev_frame.value().shape();
  const Shape& cs = cur_frame.value().shape();
  if (!(ps == cs))
    throw std::invalid_argument("MiniFlowNet: frame shapes differ: " + ps.str() + " vs " +
                                cs.str());
  if (ps.h % 4 != 0 || ps.w % 4 != 0)
    throw std::invalid_argument("MiniFlowNet: frame dims " + ps.str() +
                                " must be divisible by 4");
  Var x = concat_channel(prev_frame, cur_frame);
  x = relu(e1.forward(g, x));          // h/2
  x = relu(e2.forward(g, x));          // h/4
  x = relu(mid.forward(g, x));         // h/4
  x = up1.forward(g, x, ps.h / 2, ps.w / 2);
  x = relu(d1.forward(g, x));          // h/2
  x = up2.forward(g, x, ps.h, ps.w);
  x = relu(d2.forward(g, x));          // h
  return out.forward(g, x);            // (n,2,h,w)
}

void MiniFlowNet::visit(const std::string& prefix, const ParamVisitor& fn) {
  e1.visit(prefix + "e1", fn);
  e2.visit(prefix + "e2", fn);
  mid.visit(prefix + "mid", fn);
  up1.visit(prefix + "up1", fn);
  d1.visit(prefix + "d1", fn);
  up2.visit(prefix + "up2", fn);
  d2.visit(prefix + "d2", fn);
  out.visit(prefix + "out", fn);
}

int64_t MiniFlowNet::macs(int64_t h, int64_t w) const {
  int64_t total = 0;
  total += e1.macs(h, w);
  total += e2.macs(h / 2, w / 2);
  total += mid.macs(h / 4, w / 4);
  total += up1.macs(h / 2, w / 2);
  total += d1.macs(h / 2, w / 2);
  total += up2.macs(h, w);
  total += d2.macs(h, w);
  total += out.macs(h, w);
  return total;
}

// ---------------------------------------------------------------------------

OutputBlockResult output_block(const Tensor& scores) {
  OutputBlockResult r;
  r.probs = kernels::softmax_channel_forward(scores);
  r.seg = kernels::argmax_channel(scores);
  return r;
}

namespace {
NetConfig validated(NetConfig c) {
  c.validate();
  return c;
}
}  // namespace

ModelSet::ModelSet(const NetConfig& cfg_, uint64_t seed)
    : cfg(validated(cfg_)),
      ref_feat(cfg, cfg.reference_depth, derive_seed(seed, "ref_feat")),
      upd_feat(cfg, cfg.update_depth, derive_seed(seed, "upd_feat")),
      ref_task(cfg, derive_seed(seed, "ref_task")),
      upd_task(cfg, derive_seed(seed, "upd_task")),
      fusion(cfg.fusion_location == FusionLocation::Score ? cfg.num_classes
                                                          : cfg.feature_channels),
      flow(derive_seed(seed, "flow")) {}

void ModelSet::visit(const ParamVisitor& fn) {
  ref_feat.visit("ref_feat.", fn);
  ref_task.visit("ref_task.", fn);
  upd_feat.visit("upd_feat.", fn);
  upd_task.visit("upd_task.", fn);
  fusion.visit("fusion.", fn);
  flow.visit("flow.", fn);
}

std::vector<Parameter*> ModelSet::params() {
  std::vector<Parameter*> out;
  visit([&](const std::string&, Parameter& p) { out.push_back(&p); });
  return out;
}

void ModelSet::zero_grads() {
  visit([](const std::string&, Parameter& p) { p.zero_grad(); });
}

// ---------------------------------------------------------------------------

std::map<std::string, std::string> net_config_to_meta(const NetConfig& cfg) {
  return {
      {"num_classes", std::to_string(cfg.num_classes)},
      {"feature_channels", std::to_string(cfg.feature_channels)},
      {"feature_stride", std::to_string(cfg.feature_stride)},
      {"update_depth", depth_name(cfg.update_depth)},
      {"reference_depth", depth_name(cfg.reference_depth)},
      {"fusion_location", fusion_location_name(cfg.fusion_location)},
  };
}

NetConfig net_config_from_meta(const std::map<std::string, std::string>& meta) {
  NetConfig cfg;
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = meta.find(key);
    if (it == meta.end())
      throw std::runtime_error("checkpoint meta missing key '" + key + "'");
    return it->second;
  };
  cfg.num_classes = std::stoll(get("num_classes"));
  cfg.feature_channels = std::stoll(get("feature_channels"));
  cfg.feature_stride = std::stoll(get("feature_stride"));
  cfg.update_depth = depth_from_name(get("update_depth"));
  cfg.reference_depth = depth_from_name(get("reference_depth"));
  cfg.fusion_location = fusion_location_from_name(get("fusion_location"));
  cfg.validate();
  return cfg;
}

void save_singleframe_checkpoint(const std::string& path, const NetConfig& cfg,
                                 Depth depth, FeatureNet& feat, TaskNet& task) {
  Checkpoint ckpt;
  ckpt.meta = net_config_to_meta(cfg);
  ckpt.meta["kind"] = "singleframe";
  ckpt.meta["depth"] = depth_name(depth);
  feat.visit("feat.", [&](const std::string& n, Parameter& p) {
    ckpt.tensors.emplace_back(n, p.value.clone());
  });
  task.visit("task.", [&](const std::string& n, Parameter& p) {
    ckpt.tensors.emplace_back(n, p.value.clone());
  });
  save_checkpoint(path, ckpt);
}

void save_joint_checkpoint(const std::string& path, ModelSet& models) {
  Checkpoint ckpt;
  ckpt.meta = net_config_to_meta(models.cfg);
  ckpt.meta["kind"] = "joint";
  models.visit([&](const std::string& n, Parameter& p) {
    ckpt.tensors.emplace_back(n, p.value.clone());
  });
  save_checkpoint(path, ckpt);
}

void assign_from_checkpoint(const Checkpoint& ckpt, const std::string& ckpt_prefix,
                            const std::string& param_prefix,
                            const std::function<void(const ParamVisitor&)>& visit) {
  visit([&](const std::string& name, Parameter& p) {
    std::string key = name;
    if (!param_prefix.empty() && key.rfind(param_prefix, 0) == 0)
      key = ckpt_prefix + key.substr(param_prefix.size());
    const Tensor* t = ckpt.find(key);
    if (!t) throw std::runtime_error("checkpoint missing tensor '" + key + "'");
    if (!(t->shape() == p.value.shape()))
      throw std::runtime_error("checkpoint tensor '" + key + "' has shape " +
                               t->shape().str() + ", parameter expects " +
                               p.value.shape().str());
    p.value = t->clone();
    p.grad = Tensor(p.value.shape());
  });
}

namespace {

void check_compatible(const NetConfig& a, const NetConfig& b, const std::string& what) {
  if (a.num_classes != b.num_classes || a.feature_channels != b.feature_channels ||
      a.feature_stride != b.feature_stride)
    throw std::runtime_error("checkpoint mismatch for " + what +
                             ": classes/channels/stride differ from model config");
}

}  // namespace

void init_branches_from_pretrained(ModelSet& models, const std::string& ref_ckpt_path,
                                   const std::string& upd_ckpt_path) {
  Checkpoint ref = load_checkpoint(ref_ckpt_path);
  Checkpoint upd = load_checkpoint(upd_ckpt_path);
  NetConfig rc = net_config_from_meta(ref.meta);
  NetConfig uc = net_config_from_meta(upd.meta);
  check_compatible(rc, uc, "pretrained branches");
  check_compatible(rc, models.cfg, "reference branch");
  if (ref.meta.at("kind") != "singleframe" || upd.meta.at("kind") != "singleframe")
    throw std::runtime_error("init_branches_from_pretrained: expected singleframe checkpoints");
  if (depth_from_name(ref.meta.at("depth")) != models.cfg.reference_depth)
    throw std::runtime_error("reference checkpoint depth " + ref.meta.at("depth") +
                             " does not match configured reference depth " +
                             depth_name(models.cfg.reference_depth));
  if (depth_from_name(upd.meta.at("depth")) != models.cfg.update_depth)
    throw std::runtime_error("update checkpoint depth " + upd.meta.at("depth") +
                             " does not match configured update depth " +
                             depth_name(models.cfg.update_depth));
  assign_from_checkpoint(ref, "feat.", "ref_feat.", [&](const ParamVisitor& fn) {
    models.ref_feat.visit("ref_feat.", fn);
  });
  assign_from_checkpoint(ref, "task.", "ref_task.", [&](const ParamVisitor& fn) {
    models.ref_task.visit("ref_task.", fn);
  });
  assign_from_checkpoint(upd, "feat.", "upd_feat.", [&](const ParamVisitor& fn) {
    models.upd_feat.visit("upd_feat.", fn);
  });
  assign_from_checkpoint(upd, "task.", "upd_task.", [&](const ParamVisitor& fn) {
    models.upd_task.visit("upd_task.", fn);
  });
}

std::unique_ptr<ModelSet> load_joint_models(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  auto kind = ckpt.meta.find("kind");
  if (kind == ckpt.meta.end() || kind->second != "joint")
    throw std::runtime_error("checkpoint '" + path + "' is not a joint checkpoint");
  NetConfig cfg = net_config_from_meta(ckpt.meta);
  auto models = std::make_unique<ModelSet>(cfg, 0);
  assign_from_checkpoint(ckpt, "", "", [&](const ParamVisitor& fn) { models->visit(fn); });
  return models;
}

std::unique_ptr<ModelSet> load_singleframe_as_reference(const std::string& path) {
  Checkpoint ckpt = load_checkpoint(path);
  auto kind = ckpt.meta.find("kind");
  if (kind == ckpt.meta.end() || kind->second != "singleframe")
    throw std::runtime_error("checkpoint '" + path + "' is not a single-frame checkpoint");
  NetConfig cfg = net_config_from_meta(ckpt.meta);
  cfg.reference_depth = depth_from_name(ckpt.meta.at("depth"));
  auto models = std::make_unique<ModelSet>(cfg, 0);
  assign_from_checkpoint(ckpt, "feat.", "ref_feat.", [&](const ParamVisitor& fn) {
    models->ref_feat.visit("ref_feat.", fn);
  });
  assign_from_checkpoint(ckpt, "task.", "ref_task.", [&](const ParamVisitor& fn) {
    models->ref_task.visit("ref_task.", fn);
  });
  return models;
}

}  // namespace vseg
