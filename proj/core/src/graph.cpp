#include "vseg/graph.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "vseg/kernels.hpp"

namespace vseg {

const Tensor& Var::value() const { return g->value(*this); }

Var Graph::leaf(Tensor v, bool needs_grad) {
  Node n;
  n.value = std::move(v);
  n.requires_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int32_t>(nodes_.size() - 1)};
}

Var Graph::param(Parameter& p) {
  auto it = param_ids_.find(&p);
  if (it != param_ids_.end()) return Var{this, it->second};
  Node n;
  n.value = p.value;  // shares storage
  n.requires_grad = p.trainable;
  Parameter* pp = &p;
  const int32_t id = static_cast<int32_t>(nodes_.size());
  n.back = [pp, id](Graph& g) {
    if (!pp->trainable) return;
    const Tensor& src = g.nodes_[id].grad;
    double* dst = pp->grad.data();
    const double* s = src.data();
    for (int64_t i = 0; i < src.numel(); ++i) dst[i] += s[i];
  };
  nodes_.push_back(std::move(n));
  param_ids_.emplace(&p, id);
  return Var{this, id};
}

Var Graph::record(Tensor out, bool requires_grad, std::function<void(Graph&)> back) {
  Node n;
  n.value = std::move(out);
  n.requires_grad = requires_grad;
  if (requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int32_t>(nodes_.size() - 1)};
}

Tensor& Graph::grad_acc(int32_t id) {
  Node& n = nodes_[id];
  if (!n.grad.defined()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

const Tensor* Graph::grad(Var v) const {
  const Node& n = nodes_[v.id];
  return n.grad.defined() ? &n.grad : nullptr;
}

void Graph::backward(Var loss) {
  if (loss.g != this) throw std::invalid_argument("backward: loss from another graph");
  if (ran_backward_) throw std::logic_error("backward: already ran on this graph");
  const Tensor& lv = nodes_[loss.id].value;
  if (lv.numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                lv.shape().str());
  ran_backward_ = true;
  if (!nodes_[loss.id].requires_grad) return;  // nothing trainable upstream
  grad_acc(loss.id).data()[0] = 1.0;
  for (int32_t id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.grad.defined() || !n.back) continue;
    n.back(*this);
  }
}

// ---------------------------------------------------------------------------

namespace {

Graph& common_graph(Var a, Var b) {
  if (a.g != b.g) throw std::invalid_argument("op: arguments from different graphs");
  return *a.g;
}

// The id the next recorded node will get; captured by backward closures so an
// operation can read its own output gradient.
int32_t upcoming_id(const Graph& g) { return static_cast<int32_t>(g.num_nodes()); }

const Tensor& own_grad(Graph& g, int32_t self) { return *g.grad(Var{&g, self}); }

}  // namespace

Var conv2d(Var x, Var w, Var b, int64_t stride, int64_t pad) {
  Graph& g = common_graph(x, w);
  common_graph(w, b);
  const auto pl = kernels::conv2d_plan(x.value().shape(), w.value().shape(), stride, pad);
  const bool nx = g.requires_grad(x), nw = g.requires_grad(w), nb = g.requires_grad(b);
  auto col = std::make_shared<std::vector<double>>();
  Tensor out = kernels::conv2d_forward(x.value(), w.value(), b.value(), pl, col.get());
  if (!(nx || nw || nb)) return g.record(std::move(out), false, {});
  const int32_t xi = x.id, wi = w.id, bi = b.id, self = upcoming_id(g);
  return g.record(std::move(out), true, [=](Graph& gg) {
    const Tensor& go = own_grad(gg, self);
    kernels::conv2d_backward(gg.value(Var{&gg, wi}), go, pl, *col,
                             nx ? &gg.grad_acc(xi) : nullptr,
                             nw ? &gg.grad_acc(wi) : nullptr,
                             nb ? &gg.grad_acc(bi) : nullptr);
  });
}

Var relu(Var x) {
  Graph& g = *x.g;
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  const double* in = xv.data();
  double* o = out.data();
  for (int64_t i = 0; i < xv.numel(); ++i) o[i] = in[i] > 0.0 ? in[i] : 0.0;
  if (!g.requires_grad(x)) return g.record(std::move(out), false, {});
  const int32_t xi = x.id, self = upcoming_id(g);
  return g.record(std::move(out), true, [=](Graph& gg) {
    const Tensor& go = own_grad(gg, self);
    const Tensor& xin = gg.value(Var{&gg, xi});
    Tensor& gx = gg.grad_acc(xi);
    const double* gp = go.data();
    const double* xp = xin.data();
    double* gxp = gx.data();
    for (int64_t i = 0; i < go.numel(); ++i)
      if (xp[i] > 0.0) gxp[i] += gp[i];
  });
}

Var add(Var a, Var b) {
  Graph& g = common_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!(av.shape() == bv.shape()))
    throw std::invalid_argument("add: shape mismatch " + av.shape().str() + " vs " +
                                bv.shape().str());
  Tensor out(av.shape());
  const double* ap = av.data();
  const double* bp = bv.data();
  double* o = out.data();
  for (int64_t i = 0; i < av.numel(); ++i) o[i] = ap[i] + bp[i];
  const bool na = g.requires_grad(a), nb = g.requires_grad(b);
  if (!(na || nb)) return g.record(std::move(out), false, {});
  const int32_t ai = a.id, bi = b.id, self = upcoming_id(g);
  return g.record(std::move(out), true, [=](Graph& gg) {
    const Tensor& go = own_grad(gg, self);
    const double* gp = go.data();
    if (na) {
      double* gp2 = gg.grad_acc(ai).data();
      for (int64_t i = 0; i < go.numel(); ++i) gp2[i] += gp[i];
    }
    if (nb) {
      double* gp2 = gg.grad_acc(bi).data();
      for (int64_t i = 0; i < go.numel(); ++i) gp2[i] += gp[i];
    }
  });
}

Var mul(Var a, Var b) {
  Graph& g = common_graph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!(av.shape() == bv.shape()))
    throw std::invalid_argument("mul: shape mismatch " + av.shape().str() + " vs " +
                                bv.shape().str());
  Tensor out(av.shape());
  const double* ap = av.data();
  const double* bp = bv.data();
  double* o = out.data();
  for (int64_t i = 0; i < av.numel(); ++i) o[i] = ap[i] * bp[i];
  const bool na = g.requires_grad(a), nb = g.requires_grad(b);
  if (!(na || nb)) return g.record(std::move(out), false, {});
  const int32_t ai = a.id, bi = b.id, self = upcoming_id(g);
  return g.record(std::move(out), true, [=](Graph& gg) {
    const Tensor& go = own_grad(gg, self);
    const double* gp = go.data();
    if (na) {
      double* ga = gg.grad_acc(ai).data();
      const double* other = gg.value(Var{&gg, bi}).data();
      for (int64_t i = 0; i < go.numel(); ++i) ga[i] += gp[i] * other[i];
    }
    if (nb) {
      double* gbp = gg.grad_acc(bi).data();
      const double* other = gg.value(Var{&gg, ai}).data();
      for (int64_t i = 0; i < go.numel(); ++i) gbp[i] += gp[i] * other[i];
    }
  });
}

Var scale(Var x, double s) {
  Graph& g = *x.g;
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  const double* in = xv.data();
  double* o = out.data();
  for (int64_t i = 0; i < xv.numel(); ++i) o[i] = s * in[i];
  if (!g.requires_grad(x)) return g.record(std::move(out), false, {});
  const int32_t xi = x.id, self = upcoming_id(g);
  return g.record(std::move(out), true, [=](Graph& gg) {
    const Tensor& go = own_grad(gg, self);
    double* gx = gg.grad_acc(xi).data();
    const double* gp = go.data();
    for (int64_t i = 0; i < go.numel(); ++i) gx[i] += s * gp[i];
  });
}

Var concat_channel(Var a, Var b) {
  Graph& g = common_graph(a, b);
  const Shape& as = a.value().shape();
  const Shape& bs = b.value().shape();
  if (as.n != bs.n || as.h != bs.h || as.w != bs.w)
    throw std::invalid_argument("concat_channel: spatial/batch mismatch " + as.str() +
                                " vs " + bs.str());
  Tensor out({as.n, as.c + bs.c, as.h, as.w});
  const int64_t hw = as.h * as.w;
  for (int64_t n = 0; n < as.n; ++n) {
    double* o = out.data() + n * (as.c + bs.c) * hw;
    const double* ap = a.value().data() + n * as.c * hw;
    const double* bp = b.value().data() + n * bs.c * hw;
    std::copy(ap, ap + as.c * hw, o);
    std::copy(bp, bp + bs.c * hw, o + as.c * hw);
  }
  const bool na = g.requires_grad(a), nb = g.requires_grad(b);
  if (!(na || nb)) return g.record(std::move(out), false, {});
  const int32_t ai = a.id, bi = b.id, self = upcoming_id(g);
  const int64_t ac = as.c, bc = bs.c;
  return g.record(std::move(out), true, [=](Graph& gg) {
    const Tensor& go = own_grad(gg, self);
    const Shape& os = go.shape();
    const int64_t hw2 = os.h * os.w;
    for (int64_t n = 0; n < os.n; ++n) {
      const double* gp = go.data() + n * os.c * hw2;
      if (na) {
        double* ga = gg.grad_acc(ai).data() + n * ac * hw2;
        for (int64_t i = 0; i < ac * hw2; ++i) ga[i] += gp[i];
      }
      if (nb) {
        double* gbp = gg.grad_acc(bi).data() + n * bc * hw2;
        const double* gsrc = gp + ac * hw2;
        for (int64_t i = 0; i < bc * hw2; ++i) gbp[i] += gsrc[i];
      }
    }
  });
}

Var slice_channel(Var x, int64_t c_begin, int64_t c_end) {
  Graph& g = *x.g;
  const Shape& xs = x.value().shape();
  if (c_begin < 0 || c_end > xs.c || c_begin >= c_end)
    throw std::invalid_argument("slice_channel: range [" + std::to_string(c_begin) + "," +
                                std::to_string(c_end) + ") invalid for " + xs.str());
  const int64_t cc = c_end - c_begin, hw = xs.h * xs.w;
  Tensor out({xs.n, cc, xs.h, xs.w});
  for (int64_t n = 0; n < xs.n; ++n) {
    const double* xp = x.value().data() + (n * xs.c + c_begin) * hw;
    double* o = out.data() + n * cc * hw;
    std::copy(xp, xp + cc * hw, o);
  }
  if (!g.requires_grad(x)) return g.record(std::move(out), false, {});
  const int32_t xi = x.id, self = upcoming_id(g);
  const int64_t xc = xs.c;
  return g.record(std::move(out), true, [=](Graph& gg) {
    const Tensor& go = own_grad(gg, self);
    const Shape& os = go.shape();
    const int64_t hw2 = os.h * os.w;
    Tensor& gx = gg.grad_acc(xi);
    for (int64_t n = 0; n < os.n; ++n) {
      const double* gp = go.data() + n * os.c * hw2;
      double* gxp = gx.data() + (n * xc + c_begin) * hw2;
      for (int64_t i = 0; i < os.c * hw2; ++i) gxp[i] += gp[i];
    }
  });
}

Var upsample_scores(Var x, Var w, int64_t factor, int64_t target_h, int64_t target_w) {
  Graph& g = common_graph(x, w);
  const auto pl =
      kernels::upsample_plan(x.value().shape(), w.value().shape(), factor, target_h, target_w);
  Tensor out = kernels::upsample_forward(x.value(), w.value(), pl);
  const bool nx = g.requires_grad(x), nw = g.requires_grad(w);
  if (!(nx || nw)) return g.record(std::move(out), false, {});
  const int32_t xi = x.id, wi = w.id, self = upcoming_id(g);
  return g.record(std::move(out), true, [=](Graph& gg) {
    const Tensor& go = own_grad(gg, self);
    kernels::upsample_backward(gg.value(Var{&gg, xi}), gg.value(Var{&gg, wi}), go, pl,
                               nx ? &gg.grad_acc(xi) : nullptr,
                               nw ? &gg.grad_acc(wi) : nullptr);
  });
}

Var softmax_channel(Var x) {
  Graph& g = *x.g;
  Tensor out = kernels::softmax_channel_forward(x.value());
  if (!g.requires_grad(x)) return g.record(std::move(out), false, {});
  const int32_t xi = x.id, self = upcoming_id(g);
  return g.record(std::move(out), true, [=](Graph& gg) {
    const Tensor& go = own_grad(gg, self);
    const Tensor& probs = gg.value(Var{&gg, self});
    kernels::softmax_channel_backward(probs, go, &gg.grad_acc(xi));
  });
}

Var warp(Var features, Var flow) {
  Graph& g = common_graph(features, flow);
  Tensor out = kernels::warp_forward(features.value(), flow.value());
  const bool nf = g.requires_grad(features), no = g.requires_grad(flow);
  if (!(nf || no)) return g.record(std::move(out), false, {});
  const int32_t fi = features.id, oi = flow.id, self = upcoming_id(g);
  return g.record(std::move(out), true, [=](Graph& gg) {
    const Tensor& go = own_grad(gg, self);
    kernels::warp_backward(gg.value(Var{&gg, fi}), gg.value(Var{&gg, oi}), go,
                           nf ? &gg.grad_acc(fi) : nullptr,
                           no ? &gg.grad_acc(oi) : nullptr);
  });
}

Var downscale_flow(Var flow, int64_t stride) {
  Graph& g = *flow.g;
  Tensor out = kernels::downscale_flow_forward(flow.value(), stride);
  if (!g.requires_grad(flow)) return g.record(std::move(out), false, {});
  const int32_t oi = flow.id, self = upcoming_id(g);
  return g.record(std::move(out), true, [=](Graph& gg) {
    const Tensor& go = own_grad(gg, self);
    kernels::downscale_flow_backward(go, stride, &gg.grad_acc(oi));
  });
}

Var cross_entropy(Var scores, const LabelMap& labels, int32_t ignore_label) {
  Graph& g = *scores.g;
  auto fwd = std::make_shared<kernels::CrossEntropyResult>(
      kernels::cross_entropy_forward(scores.value(), labels, ignore_label));
  Tensor out = Tensor::from({1, 1, 1, 1}, {fwd->loss});
  if (!g.requires_grad(scores)) return g.record(std::move(out), false, {});
  const int32_t si = scores.id, self = upcoming_id(g);
  auto lbl = std::make_shared<LabelMap>(labels);
  return g.record(std::move(out), true, [=](Graph& gg) {
    const Tensor& go = own_grad(gg, self);
    kernels::cross_entropy_backward(*fwd, *lbl, ignore_label, go.data()[0],
                                    &gg.grad_acc(si));
  });
}

Var sum(Var x) {
  Graph& g = *x.g;
  const Tensor& xv = x.value();
  double acc = 0.0;
  const double* p = xv.data();
  for (int64_t i = 0; i < xv.numel(); ++i) acc += p[i];
  Tensor out = Tensor::from({1, 1, 1, 1}, {acc});
  if (!g.requires_grad(x)) return g.record(std::move(out), false, {});
  const int32_t xi = x.id, self = upcoming_id(g);
  return g.record(std::move(out), true, [=](Graph& gg) {
    const double gl = own_grad(gg, self).data()[0];
    Tensor& gx = gg.grad_acc(xi);
    double* gp = gx.data();
    for (int64_t i = 0; i < gx.numel(); ++i) gp[i] += gl;
  });
}

// ---------------------------------------------------------------------------

void sgd_step(const std::vector<Parameter*>& params, double lr) {
  for (Parameter* p : params) {
    if (p->trainable) {
      double* v = p->value.data();
      const double* gp = p->grad.data();
      for (int64_t i = 0; i < p->value.numel(); ++i) v[i] -= lr * gp[i];
    }
    p->zero_grad();
  }
}

void Sgd::step(const std::vector<Parameter*>& params) {
  if (momentum == 0.0) {
    sgd_step(params, lr);
    return;
  }
  if (velocity_.size() != params.size()) {
    velocity_.clear();
    velocity_.reserve(params.size());
    for (const Parameter* p : params) velocity_.emplace_back(p->value.shape());
  }
  for (size_t i = 0; i < params.size(); ++i) {
    Parameter* p = params[i];
    if (p->trainable) {
      double* vel = velocity_[i].data();
      double* val = p->value.data();
      const double* gp = p->grad.data();
      for (int64_t j = 0; j < p->value.numel(); ++j) {
        vel[j] = momentum * vel[j] + gp[j];
        val[j] -= lr * vel[j];
      }
    }
    p->zero_grad();
  }
}

double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    if (!p->trainable) continue;
    const double* gp = p->grad.data();
    for (int64_t i = 0; i < p->grad.numel(); ++i) sq += gp[i] * gp[i];
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Parameter* p : params) {
      if (!p->trainable) continue;
      double* gp = p->grad.data();
      for (int64_t i = 0; i < p->grad.numel(); ++i) gp[i] *= s;
    }
  }
  return norm;
}

}  // namespace vseg
