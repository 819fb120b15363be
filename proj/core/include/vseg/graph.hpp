#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vseg/tensor.hpp"

namespace vseg {

// A trainable (or frozen) tensor with its gradient accumulator. Parameters
// live in the network structs and must stay at a stable address once the
// model is built; graphs and optimizers hold pointers to them.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Shape s) : name(std::move(n)), value(s), grad(s) {}

  void zero_grad() {
    double* g = grad.data();
    for (int64_t i = 0; i < grad.numel(); ++i) g[i] = 0.0;
  }
};

class Graph;

// Handle to a recorded tensor on a graph's tape.
struct Var {
  Graph* g = nullptr;
  int32_t id = -1;

  bool valid() const { return g != nullptr; }
  const Tensor& value() const;
};

// Execution tape: operations are recorded in order; backward replays their
// adjoint rules in reverse. Single-threaded per graph.
class Graph {
 public:
  Var leaf(Tensor v, bool needs_grad = false);
  Var param(Parameter& p);

  // Records an operation output. `back` may be empty when requires_grad is
  // false; otherwise it must accumulate into the inputs' grad slots.
  Var record(Tensor out, bool requires_grad, std::function<void(Graph&)> back);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  // Gradient slot for accumulation; allocated (zeros) on first access.
  Tensor& grad_acc(int32_t id);

  // Gradient of a node after backward(); nullptr when none was propagated.
  const Tensor* grad(Var v) const;

  // Reverse replay from a scalar loss; flushes parameter-leaf gradients into
  // Parameter::grad (trainable parameters only). One call per graph.
  void backward(Var loss);

  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::function<void(Graph&)> back;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int32_t> param_ids_;
  bool ran_backward_ = false;
};

// --- Recorded operators -----------------------------------------------------

Var conv2d(Var x, Var w, Var b, int64_t stride, int64_t pad);
Var relu(Var x);
Var add(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var x, double s);
Var concat_channel(Var a, Var b);
Var slice_channel(Var x, int64_t c_begin, int64_t c_end);
Var upsample_scores(Var x, Var w, int64_t factor, int64_t target_h, int64_t target_w);
Var softmax_channel(Var x);
Var warp(Var features, Var flow);
Var downscale_flow(Var flow, int64_t stride);
Var cross_entropy(Var scores, const LabelMap& labels, int32_t ignore_label);
Var sum(Var x);

// --- Optimizer ---------------------------------------------------------------

// Plain first-order descent; value -= lr * grad for trainable parameters,
// gradients zeroed afterwards.
void sgd_step(const std::vector<Parameter*>& params, double lr);

// SGD with optional momentum (velocity state keyed by position in the fixed
// parameter list).
struct Sgd {
  double lr = 1e-3;
  double momentum = 0.0;

  Sgd() = default;
  explicit Sgd(double lr_, double momentum_ = 0.0) : lr(lr_), momentum(momentum_) {}

  void step(const std::vector<Parameter*>& params);

 private:
  std::vector<Tensor> velocity_;
};

// Scales all trainable gradients so their global L2 norm is at most
// max_norm; returns the pre-clip norm.
double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm);

}  // namespace vseg
