#pragma once

#include <cstdint>
#include <vector>

#include "vseg/tensor.hpp"

namespace vseg::kernels {

// Forward-pass multiply-accumulate instrumentation. Enabled only inside
// tests that cross-check the analytic cost model against executed work.
extern thread_local bool mac_counting;
extern thread_local int64_t mac_counter;

inline void macs_add(int64_t m) {
  if (mac_counting) mac_counter += m;
}

// ---------------------------------------------------------------------------
// Convolution (square kernel, zero padding), im2col + GEMM.

struct Conv2dPlan {
  int64_t stride = 1, pad = 0;
  int64_t n = 0, cin = 0, h = 0, w = 0;
  int64_t cout = 0, k = 0, oh = 0, ow = 0;

  int64_t patch() const { return cin * k * k; }   // J
  int64_t pixels() const { return oh * ow; }      // P
  Shape out_shape() const { return {n, cout, oh, ow}; }
};

// Validates shapes and computes output dims; throws std::invalid_argument
// naming the offending dims.
Conv2dPlan conv2d_plan(const Shape& x, const Shape& w, int64_t stride, int64_t pad);

// If col_cache is non-null it is resized to n*J*P and filled with the im2col
// buffers so the backward pass can reuse them.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                      const Conv2dPlan& pl, std::vector<double>* col_cache);

// Accumulates into any non-null gradient tensor (shapes must already match).
void conv2d_backward(const Tensor& w, const Tensor& gout, const Conv2dPlan& pl,
                     const std::vector<double>& col_cache, Tensor* gx, Tensor* gw,
                     Tensor* gb);

// ---------------------------------------------------------------------------
// Bilinear transposed-convolution upsampling with 1-pixel replicate padding
// and center cropping. factor==1 uses a 1x1 kernel (identity geometry).

struct UpsamplePlan {
  int64_t factor = 1, k = 1;
  int64_t n = 0, cin = 0, ih = 0, iw = 0;
  int64_t cout = 0, th = 0, tw = 0;
  int64_t off_y = 0, off_x = 0;
  int64_t taps = 1;  // per axis

  Shape out_shape() const { return {n, cout, th, tw}; }
};

UpsamplePlan upsample_plan(const Shape& x, const Shape& w, int64_t factor,
                           int64_t target_h, int64_t target_w);

Tensor upsample_forward(const Tensor& x, const Tensor& w, const UpsamplePlan& pl);

void upsample_backward(const Tensor& x, const Tensor& w, const Tensor& gout,
                       const UpsamplePlan& pl, Tensor* gx, Tensor* gw);

// Kernel weight of the bilinear interpolation filter of stride `factor`
// (kernel size 2*factor) at tap index i; factor 1 yields the identity tap.
double bilinear_tap(int64_t i, int64_t factor);

// ---------------------------------------------------------------------------
// Backward-sampling bilinear warp. flow has 2 channels: (dx, dy) in pixels;
// the source sample for output pixel p is p + flow(p). Samples outside the
// grid contribute zero. At exactly-integer sample coordinates the flow
// derivative is taken from the lower cell.

Tensor warp_forward(const Tensor& features, const Tensor& flow);

void warp_backward(const Tensor& features, const Tensor& flow, const Tensor& gout,
                   Tensor* gfeatures, Tensor* gflow);

// Average-pool a flow field by `stride` and rescale displacements into
// feature-grid units (divide by `stride`).
Tensor downscale_flow_forward(const Tensor& flow, int64_t stride);
void downscale_flow_backward(const Tensor& gout, int64_t stride, Tensor* gflow);

// ---------------------------------------------------------------------------
// Channel softmax / cross-entropy / argmax.

Tensor softmax_channel_forward(const Tensor& x);
void softmax_channel_backward(const Tensor& probs, const Tensor& gout, Tensor* gx);

struct CrossEntropyResult {
  double loss = 0.0;
  Tensor probs;        // (1,C,h,w) softmax of the scores
  int64_t valid = 0;   // pixels contributing to the mean
};

CrossEntropyResult cross_entropy_forward(const Tensor& scores, const LabelMap& labels,
                                         int32_t ignore_label);
void cross_entropy_backward(const CrossEntropyResult& fwd, const LabelMap& labels,
                            int32_t ignore_label, double gloss, Tensor* gscores);

LabelMap argmax_channel(const Tensor& x);

}  // namespace vseg::kernels
