#pragma once

// Brute-force scalar-loop reference implementations used only by tests.
// These are written independently of the library kernels (no im2col, no
// tap/plan machinery) so agreement is meaningful.

#include <cmath>
#include <functional>
#include <vector>

#include "vseg/rng.hpp"
#include "vseg/tensor.hpp"

namespace oracles {

using vseg::LabelMap;
using vseg::Rng;
using vseg::Shape;
using vseg::Tensor;

inline Tensor random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(s);
  double* p = t.data();
  for (int64_t i = 0; i < t.numel(); ++i) p[i] = rng.uniform(lo, hi);
  return t;
}

// Direct quadruple-loop convolution with zero padding.
inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int64_t stride,
                     int64_t pad) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  const int64_t oh = (xs.h + 2 * pad - ws.h) / stride + 1;
  const int64_t ow = (xs.w + 2 * pad - ws.w) / stride + 1;
  Tensor out({xs.n, ws.n, oh, ow});
  for (int64_t n = 0; n < xs.n; ++n)
    for (int64_t co = 0; co < ws.n; ++co)
      for (int64_t oy = 0; oy < oh; ++oy)
        for (int64_t ox = 0; ox < ow; ++ox) {
          double acc = b.defined() && b.numel() > 0 ? b.data()[co] : 0.0;
          for (int64_t ci = 0; ci < xs.c; ++ci)
            for (int64_t ky = 0; ky < ws.h; ++ky)
              for (int64_t kx = 0; kx < ws.w; ++kx) {
                const int64_t iy = oy * stride - pad + ky;
                const int64_t ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) continue;
                acc += x.at(n, ci, iy, ix) * w.at(co, ci, ky, kx);
              }
          out.at(n, co, oy, ox) = acc;
        }
  return out;
}

// Scalar bilinear backward warp with zero padding outside the grid.
inline Tensor warp(const Tensor& f, const Tensor& flow) {
  const Shape& s = f.shape();
  Tensor out(s);
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t y = 0; y < s.h; ++y)
      for (int64_t x = 0; x < s.w; ++x) {
        const double sx = static_cast<double>(x) + flow.at(n, 0, y, x);
        const double sy = static_cast<double>(y) + flow.at(n, 1, y, x);
        for (int64_t c = 0; c < s.c; ++c) {
          double acc = 0.0;
          for (int64_t qy = 0; qy < s.h; ++qy)
            for (int64_t qx = 0; qx < s.w; ++qx) {
              const double wx = 1.0 - std::abs(static_cast<double>(qx) - sx);
              const double wy = 1.0 - std::abs(static_cast<double>(qy) - sy);
              if (wx <= 0.0 || wy <= 0.0) continue;
              acc += wx * wy * f.at(n, c, qy, qx);
            }
          out.at(n, c, y, x) = acc;
        }
      }
  return out;
}

// Clamped bilinear resize equivalent of the padded deconvolution upsampling:
// output y samples source coordinate (y + off + 0.5)/f - 2 (identity lattice
// for f == 1), clamped to the source extent.
inline Tensor upsample_bilinear(const Tensor& x, int64_t factor, int64_t th, int64_t tw) {
  const Shape& s = x.shape();
  const int64_t full_h = factor == 1 ? s.h + 2 : factor * s.h + 3 * factor;
  const int64_t full_w = factor == 1 ? s.w + 2 : factor * s.w + 3 * factor;
  const int64_t off_y = (full_h - th) / 2;
  const int64_t off_x = (full_w - tw) / 2;
  Tensor out({s.n, s.c, th, tw});
  auto sample = [&](int64_t n, int64_t c, double sy, double sx) {
    sy = std::min(std::max(sy, 0.0), static_cast<double>(s.h - 1));
    sx = std::min(std::max(sx, 0.0), static_cast<double>(s.w - 1));
    const int64_t y0 = static_cast<int64_t>(std::floor(sy));
    const int64_t x0 = static_cast<int64_t>(std::floor(sx));
    const int64_t y1 = std::min(y0 + 1, s.h - 1);
    const int64_t x1 = std::min(x0 + 1, s.w - 1);
    const double ty = sy - static_cast<double>(y0);
    const double tx = sx - static_cast<double>(x0);
    const double a = x.at(n, c, y0, x0) * (1 - tx) + x.at(n, c, y0, x1) * tx;
    const double b = x.at(n, c, y1, x0) * (1 - tx) + x.at(n, c, y1, x1) * tx;
    return a * (1 - ty) + b * ty;
  };
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < s.c; ++c)
      for (int64_t y = 0; y < th; ++y)
        for (int64_t xo = 0; xo < tw; ++xo) {
          double sy, sx;
          if (factor == 1) {
            sy = static_cast<double>(y + off_y - 1);
            sx = static_cast<double>(xo + off_x - 1);
          } else {
            sy = (static_cast<double>(y + off_y) + 0.5) / static_cast<double>(factor) - 2.0;
            sx = (static_cast<double>(xo + off_x) + 0.5) / static_cast<double>(factor) - 2.0;
          }
          out.at(n, c, y, xo) = sample(n, c, sy, sx);
        }
  return out;
}

// High-precision direct softmax over channels.
inline Tensor softmax_channel(const Tensor& x) {
  const Shape& s = x.shape();
  Tensor out(s);
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t y = 0; y < s.h; ++y)
      for (int64_t xo = 0; xo < s.w; ++xo) {
        long double m = x.at(n, 0, y, xo);
        for (int64_t c = 1; c < s.c; ++c)
          m = std::max<long double>(m, x.at(n, c, y, xo));
        long double sum = 0.0L;
        for (int64_t c = 0; c < s.c; ++c)
          sum += std::exp(static_cast<long double>(x.at(n, c, y, xo)) - m);
        for (int64_t c = 0; c < s.c; ++c)
          out.at(n, c, y, xo) = static_cast<double>(
              std::exp(static_cast<long double>(x.at(n, c, y, xo)) - m) / sum);
      }
  return out;
}

// Direct per-pixel mean cross-entropy.
inline double cross_entropy(const Tensor& scores, const LabelMap& labels,
                            int32_t ignore_label) {
  const Shape& s = scores.shape();
  long double acc = 0.0L;
  int64_t valid = 0;
  for (int64_t y = 0; y < s.h; ++y)
    for (int64_t x = 0; x < s.w; ++x) {
      const int32_t l = labels.at(y, x);
      if (l == ignore_label) continue;
      long double m = scores.at(0, 0, y, x);
      for (int64_t c = 1; c < s.c; ++c) m = std::max<long double>(m, scores.at(0, c, y, x));
      long double sum = 0.0L;
      for (int64_t c = 0; c < s.c; ++c)
        sum += std::exp(static_cast<long double>(scores.at(0, c, y, x)) - m);
      acc += m + std::log(sum) - static_cast<long double>(scores.at(0, l, y, x));
      ++valid;
    }
  return valid > 0 ? static_cast<double>(acc / valid) : 0.0;
}

// Linear-scan per-pixel argmax (lowest index wins ties).
inline LabelMap argmax_channel(const Tensor& x) {
  const Shape& s = x.shape();
  LabelMap out(s.h, s.w);
  for (int64_t y = 0; y < s.h; ++y)
    for (int64_t xo = 0; xo < s.w; ++xo) {
      int32_t best = 0;
      for (int64_t c = 1; c < s.c; ++c)
        if (x.at(0, c, y, xo) > x.at(0, best, y, xo)) best = static_cast<int32_t>(c);
      out.at(y, xo) = best;
    }
  return out;
}

// Set-based mIoU over whole label maps (classes absent from both excluded).
inline double miou(const std::vector<LabelMap>& preds, const std::vector<LabelMap>& gts,
                   int64_t num_classes) {
  double acc = 0.0;
  int64_t counted = 0;
  for (int64_t k = 0; k < num_classes; ++k) {
    int64_t inter = 0, uni = 0;
    for (size_t i = 0; i < preds.size(); ++i)
      for (size_t j = 0; j < preds[i].ids.size(); ++j) {
        const bool p = preds[i].ids[j] == k;
        const bool g = gts[i].ids[j] == k;
        if (p && g) ++inter;
        if (p || g) ++uni;
      }
    if (uni > 0) {
      acc += static_cast<double>(inter) / static_cast<double>(uni);
      ++counted;
    }
  }
  return counted > 0 ? acc / static_cast<double>(counted) : 0.0;
}

// --- Central finite differences ---------------------------------------------

struct FdReport {
  double max_rel = 0.0;
  int64_t checked = 0;
};

// Central finite differences on the elements of `storage` (the loss callback
// must recompute from scratch so the perturbation is visible).
inline FdReport finite_diff_check(Tensor& storage, const std::function<double()>& loss,
                                  const Tensor& analytic, double step, int64_t max_samples,
                                  Rng& rng) {
  FdReport rep;
  std::vector<int64_t> indices;
  if (storage.numel() <= max_samples) {
    for (int64_t i = 0; i < storage.numel(); ++i) indices.push_back(i);
  } else {
    for (int64_t i = 0; i < max_samples; ++i)
      indices.push_back(rng.uniform_int(0, storage.numel() - 1));
  }
  double* p = storage.data();
  for (int64_t i : indices) {
    const double keep = p[i];
    p[i] = keep + step;
    const double fp = loss();
    p[i] = keep - step;
    const double fm = loss();
    p[i] = keep;
    const double numeric = (fp - fm) / (2.0 * step);
    const double a = analytic.data()[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-4});
    rep.max_rel = std::max(rep.max_rel, rel);
    ++rep.checked;
  }
  return rep;
}

}  // namespace oracles
