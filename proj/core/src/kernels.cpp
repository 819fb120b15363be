#include "vseg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace vseg::kernels {

thread_local bool mac_counting = false;
thread_local int64_t mac_counter = 0;

namespace {

// C(m x p) += A(m x k) * B(k x p)
void gemm_acc(int64_t m, int64_t k, int64_t p, const double* __restrict a,
              const double* __restrict b, double* __restrict c) {
  for (int64_t i = 0; i < m; ++i) {
    double* ci = c + i * p;
    const double* ai = a + i * k;
    for (int64_t l = 0; l < k; ++l) {
      const double av = ai[l];
      if (av == 0.0) continue;
      const double* bl = b + l * p;
      for (int64_t j = 0; j < p; ++j) ci[j] += av * bl[j];
    }
  }
  macs_add(m * k * p);
}

// C(m x n) += A(m x p) * B(n x p)^T
void gemm_abt_acc(int64_t m, int64_t n, int64_t p, const double* __restrict a,
                  const double* __restrict b, double* __restrict c) {
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * p;
    for (int64_t j = 0; j < n; ++j) {
      const double* bj = b + j * p;
      double acc = 0.0;
      for (int64_t l = 0; l < p; ++l) acc += ai[l] * bj[l];
      c[i * n + j] += acc;
    }
  }
}

// C(k x p) += A(m x k)^T * B(m x p)
void gemm_atb_acc(int64_t m, int64_t k, int64_t p, const double* __restrict a,
                  const double* __restrict b, double* __restrict c) {
  for (int64_t i = 0; i < m; ++i) {
    const double* bi = b + i * p;
    const double* ai = a + i * k;
    for (int64_t l = 0; l < k; ++l) {
      const double av = ai[l];
      if (av == 0.0) continue;
      double* cl = c + l * p;
      for (int64_t j = 0; j < p; ++j) cl[j] += av * bi[j];
    }
  }
}

// col (J x P) for one batch item.
void im2col(const double* x, const Conv2dPlan& pl, double* col) {
  const int64_t P = pl.pixels();
  for (int64_t ci = 0; ci < pl.cin; ++ci) {
    const double* xc = x + ci * pl.h * pl.w;
    for (int64_t ky = 0; ky < pl.k; ++ky) {
      for (int64_t kx = 0; kx < pl.k; ++kx) {
        double* row = col + ((ci * pl.k + ky) * pl.k + kx) * P;
        for (int64_t oy = 0; oy < pl.oh; ++oy) {
          const int64_t iy = oy * pl.stride - pl.pad + ky;
          double* out = row + oy * pl.ow;
          if (iy < 0 || iy >= pl.h) {
            std::fill(out, out + pl.ow, 0.0);
            continue;
          }
          const double* xr = xc + iy * pl.w;
          for (int64_t ox = 0; ox < pl.ow; ++ox) {
            const int64_t ix = ox * pl.stride - pl.pad + kx;
            out[ox] = (ix >= 0 && ix < pl.w) ? xr[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_acc(const double* col, const Conv2dPlan& pl, double* gx) {
  const int64_t P = pl.pixels();
  for (int64_t ci = 0; ci < pl.cin; ++ci) {
    double* gc = gx + ci * pl.h * pl.w;
    for (int64_t ky = 0; ky < pl.k; ++ky) {
      for (int64_t kx = 0; kx < pl.k; ++kx) {
        const double* row = col + ((ci * pl.k + ky) * pl.k + kx) * P;
        for (int64_t oy = 0; oy < pl.oh; ++oy) {
          const int64_t iy = oy * pl.stride - pl.pad + ky;
          if (iy < 0 || iy >= pl.h) continue;
          const double* in = row + oy * pl.ow;
          double* gr = gc + iy * pl.w;
          for (int64_t ox = 0; ox < pl.ow; ++ox) {
            const int64_t ix = ox * pl.stride - pl.pad + kx;
            if (ix >= 0 && ix < pl.w) gr[ix] += in[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Conv2dPlan conv2d_plan(const Shape& x, const Shape& w, int64_t stride, int64_t pad) {
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1, got " + std::to_string(stride));
  if (pad < 0) throw std::invalid_argument("conv2d: pad must be >= 0, got " + std::to_string(pad));
  if (w.h != w.w)
    throw std::invalid_argument("conv2d: kernel must be square, got " + w.str());
  if (x.c != w.c)
    throw std::invalid_argument("conv2d: input channels " + std::to_string(x.c) +
                                " do not match weight channels " + std::to_string(w.c) +
                                " (x " + x.str() + ", w " + w.str() + ")");
  Conv2dPlan pl;
  pl.stride = stride;
  pl.pad = pad;
  pl.n = x.n;
  pl.cin = x.c;
  pl.h = x.h;
  pl.w = x.w;
  pl.cout = w.n;
  pl.k = w.h;
  pl.oh = (x.h + 2 * pad - w.h) / stride + 1;
  pl.ow = (x.w + 2 * pad - w.w) / stride + 1;
  if (x.h + 2 * pad < w.h || x.w + 2 * pad < w.w)
    throw std::invalid_argument("conv2d: kernel " + w.str() + " larger than padded input " + x.str());
  return pl;
}

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b,
                      const Conv2dPlan& pl, std::vector<double>* col_cache) {
  if (b.defined() && b.numel() != pl.cout)
    throw std::invalid_argument("conv2d: bias has " + std::to_string(b.numel()) +
                                " elements for " + std::to_string(pl.cout) + " output channels");
  Tensor out(pl.out_shape());
  const int64_t J = pl.patch(), P = pl.pixels();
  std::vector<double> local;
  std::vector<double>* col = col_cache ? col_cache : &local;
  col->resize(static_cast<size_t>(pl.n * J * P));
  for (int64_t bi = 0; bi < pl.n; ++bi) {
    double* colb = col->data() + bi * J * P;
    im2col(x.data() + bi * pl.cin * pl.h * pl.w, pl, colb);
    double* ob = out.data() + bi * pl.cout * P;
    if (b.defined()) {
      const double* bd = b.data();
      for (int64_t co = 0; co < pl.cout; ++co)
        std::fill(ob + co * P, ob + (co + 1) * P, bd[co]);
    }
    gemm_acc(pl.cout, J, P, w.data(), colb, ob);
  }
  return out;
}

void conv2d_backward(const Tensor& w, const Tensor& gout, const Conv2dPlan& pl,
                     const std::vector<double>& col_cache, Tensor* gx, Tensor* gw,
                     Tensor* gb) {
  const int64_t J = pl.patch(), P = pl.pixels();
  std::vector<double> gcol;
  for (int64_t bi = 0; bi < pl.n; ++bi) {
    const double* colb = col_cache.data() + bi * J * P;
    const double* gob = gout.data() + bi * pl.cout * P;
    if (gb) {
      double* gbd = gb->data();
      for (int64_t co = 0; co < pl.cout; ++co) {
        double acc = 0.0;
        const double* g = gob + co * P;
        for (int64_t j = 0; j < P; ++j) acc += g[j];
        gbd[co] += acc;
      }
    }
    if (gw) gemm_abt_acc(pl.cout, J, P, gob, colb, gw->data());
    if (gx) {
      gcol.assign(static_cast<size_t>(J * P), 0.0);
      gemm_atb_acc(pl.cout, J, P, w.data(), gob, gcol.data());
      col2im_acc(gcol.data(), pl, gx->data() + bi * pl.cin * pl.h * pl.w);
    }
  }
}

// ---------------------------------------------------------------------------

double bilinear_tap(int64_t i, int64_t factor) {
  if (factor == 1) return 1.0;
  const double f = static_cast<double>(factor);
  return 1.0 - std::abs(static_cast<double>(i) + 0.5 - f) / f;
}

UpsamplePlan upsample_plan(const Shape& x, const Shape& w, int64_t factor,
                           int64_t target_h, int64_t target_w) {
  if (factor < 1)
    throw std::invalid_argument("upsample: factor must be >= 1, got " + std::to_string(factor));
  UpsamplePlan pl;
  pl.factor = factor;
  pl.k = factor == 1 ? 1 : 2 * factor;
  pl.taps = factor == 1 ? 1 : 2;
  pl.n = x.n;
  pl.cin = x.c;
  pl.ih = x.h;
  pl.iw = x.w;
  pl.cout = w.c;
  pl.th = target_h;
  pl.tw = target_w;
  if (w.n != x.c || w.h != pl.k || w.w != pl.k)
    throw std::invalid_argument("upsample: weight " + w.str() + " does not match input " +
                                x.str() + " with kernel size " + std::to_string(pl.k));
  auto check_axis = [&](int64_t dim, int64_t target, const char* name) {
    const int64_t lo = factor * (dim - 1) + 1;
    const int64_t hi = factor * dim + factor;
    if (target < lo || target > hi)
      throw std::invalid_argument(std::string("upsample: target ") + name + " " +
                                  std::to_string(target) + " outside reachable range [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) + "]");
  };
  check_axis(x.h, target_h, "height");
  check_axis(x.w, target_w, "width");
  // Full (replicate-padded) output extent is factor*dim + 3*factor for
  // factor > 1 and dim + 2 for factor == 1; crop is centered.
  const int64_t full_h = factor == 1 ? x.h + 2 : factor * x.h + 3 * factor;
  const int64_t full_w = factor == 1 ? x.w + 2 : factor * x.w + 3 * factor;
  pl.off_y = (full_h - target_h) / 2;
  pl.off_x = (full_w - target_w) / 2;
  return pl;
}

Tensor upsample_forward(const Tensor& x, const Tensor& w, const UpsamplePlan& pl) {
  Tensor out(pl.out_shape());
  const int64_t khw = pl.k * pl.k;
  for (int64_t bi = 0; bi < pl.n; ++bi) {
    const double* xb = x.data() + bi * pl.cin * pl.ih * pl.iw;
    double* ob = out.data() + bi * pl.cout * pl.th * pl.tw;
    for (int64_t y = 0; y < pl.th; ++y) {
      const int64_t zy = y + pl.off_y;
      for (int64_t xo = 0; xo < pl.tw; ++xo) {
        const int64_t zx = xo + pl.off_x;
        for (int64_t ty = 0; ty < pl.taps; ++ty) {
          // padded input row index; pad index i maps to source row i-1 clamped
          const int64_t py = zy / pl.factor - ty;
          const int64_t ky = zy - pl.factor * py;
          if (ky < 0 || ky >= pl.k) continue;
          const int64_t sy = std::clamp<int64_t>(py - 1, 0, pl.ih - 1);
          for (int64_t tx = 0; tx < pl.taps; ++tx) {
            const int64_t px = zx / pl.factor - tx;
            const int64_t kx = zx - pl.factor * px;
            if (kx < 0 || kx >= pl.k) continue;
            const int64_t sx = std::clamp<int64_t>(px - 1, 0, pl.iw - 1);
            for (int64_t ci = 0; ci < pl.cin; ++ci) {
              const double xv = xb[(ci * pl.ih + sy) * pl.iw + sx];
              const double* wk = w.data() + (ci * pl.cout) * khw + ky * pl.k + kx;
              for (int64_t co = 0; co < pl.cout; ++co)
                ob[(co * pl.th + y) * pl.tw + xo] += xv * wk[co * khw];
            }
          }
        }
      }
    }
  }
  macs_add(pl.n * pl.cin * pl.cout * pl.taps * pl.taps * pl.th * pl.tw);
  return out;
}

void upsample_backward(const Tensor& x, const Tensor& w, const Tensor& gout,
                       const UpsamplePlan& pl, Tensor* gx, Tensor* gw) {
  const int64_t khw = pl.k * pl.k;
  for (int64_t bi = 0; bi < pl.n; ++bi) {
    const double* xb = x.data() + bi * pl.cin * pl.ih * pl.iw;
    const double* gb = gout.data() + bi * pl.cout * pl.th * pl.tw;
    double* gxb = gx ? gx->data() + bi * pl.cin * pl.ih * pl.iw : nullptr;
    for (int64_t y = 0; y < pl.th; ++y) {
      const int64_t zy = y + pl.off_y;
      for (int64_t xo = 0; xo < pl.tw; ++xo) {
        const int64_t zx = xo + pl.off_x;
        for (int64_t ty = 0; ty < pl.taps; ++ty) {
          const int64_t py = zy / pl.factor - ty;
          const int64_t ky = zy - pl.factor * py;
          if (ky < 0 || ky >= pl.k) continue;
          const int64_t sy = std::clamp<int64_t>(py - 1, 0, pl.ih - 1);
          for (int64_t tx = 0; tx < pl.taps; ++tx) {
            const int64_t px = zx / pl.factor - tx;
            const int64_t kx = zx - pl.factor * px;
            if (kx < 0 || kx >= pl.k) continue;
            const int64_t sx = std::clamp<int64_t>(px - 1, 0, pl.iw - 1);
            for (int64_t ci = 0; ci < pl.cin; ++ci) {
              const int64_t xi = (ci * pl.ih + sy) * pl.iw + sx;
              const double xv = xb[xi];
              for (int64_t co = 0; co < pl.cout; ++co) {
                const double g = gb[(co * pl.th + y) * pl.tw + xo];
                const int64_t wi = (ci * pl.cout + co) * khw + ky * pl.k + kx;
                if (gxb) gxb[xi] += w.data()[wi] * g;
                if (gw) gw->data()[wi] += xv * g;
              }
            }
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

inline void warp_cell(double s, int64_t& lo, double& t) {
  const double fl = std::floor(s);
  lo = static_cast<int64_t>(fl);
  t = s - fl;
  if (t == 0.0) {  // integer coordinate: take the lower cell
    lo -= 1;
    t = 1.0;
  }
}

void check_warp_shapes(const Shape& f, const Shape& o) {
  if (o.c != 2)
    throw std::invalid_argument("warp: flow must have 2 channels, got " + o.str());
  if (f.n != o.n || f.h != o.h || f.w != o.w)
    throw std::invalid_argument("warp: features " + f.str() + " and flow " + o.str() +
                                " disagree on batch/spatial dims");
}

}  // namespace

Tensor warp_forward(const Tensor& features, const Tensor& flow) {
  check_warp_shapes(features.shape(), flow.shape());
  const auto& s = features.shape();
  Tensor out(s);
  const int64_t chw = s.c * s.h * s.w, hw = s.h * s.w;
  for (int64_t n = 0; n < s.n; ++n) {
    const double* fx = flow.data() + n * 2 * hw;
    const double* fy = fx + hw;
    const double* fb = features.data() + n * chw;
    double* ob = out.data() + n * chw;
    for (int64_t y = 0; y < s.h; ++y) {
      for (int64_t x = 0; x < s.w; ++x) {
        const int64_t pi = y * s.w + x;
        const double sx = static_cast<double>(x) + fx[pi];
        const double sy = static_cast<double>(y) + fy[pi];
        int64_t x0, y0;
        double tx, ty;
        warp_cell(sx, x0, tx);
        warp_cell(sy, y0, ty);
        const double wts[2] = {1.0 - tx, tx};
        const double hts[2] = {1.0 - ty, ty};
        for (int64_t dy = 0; dy < 2; ++dy) {
          const int64_t qy = y0 + dy;
          if (qy < 0 || qy >= s.h || hts[dy] == 0.0) continue;
          for (int64_t dx = 0; dx < 2; ++dx) {
            const int64_t qx = x0 + dx;
            if (qx < 0 || qx >= s.w || wts[dx] == 0.0) continue;
            const double wq = hts[dy] * wts[dx];
            const int64_t qi = qy * s.w + qx;
            for (int64_t c = 0; c < s.c; ++c) ob[c * hw + pi] += wq * fb[c * hw + qi];
          }
        }
      }
    }
  }
  macs_add(4 * s.n * s.c * s.h * s.w);
  return out;
}

void warp_backward(const Tensor& features, const Tensor& flow, const Tensor& gout,
                   Tensor* gfeatures, Tensor* gflow) {
  const auto& s = features.shape();
  const int64_t chw = s.c * s.h * s.w, hw = s.h * s.w;
  for (int64_t n = 0; n < s.n; ++n) {
    const double* fx = flow.data() + n * 2 * hw;
    const double* fy = fx + hw;
    const double* fb = features.data() + n * chw;
    const double* gb = gout.data() + n * chw;
    double* gfb = gfeatures ? gfeatures->data() + n * chw : nullptr;
    double* gfx = gflow ? gflow->data() + n * 2 * hw : nullptr;
    double* gfy = gflow ? gfx + hw : nullptr;
    for (int64_t y = 0; y < s.h; ++y) {
      for (int64_t x = 0; x < s.w; ++x) {
        const int64_t pi = y * s.w + x;
        const double sx = static_cast<double>(x) + fx[pi];
        const double sy = static_cast<double>(y) + fy[pi];
        int64_t x0, y0;
        double tx, ty;
        warp_cell(sx, x0, tx);
        warp_cell(sy, y0, ty);
        const double wts[2] = {1.0 - tx, tx};
        const double hts[2] = {1.0 - ty, ty};
        double acc_dx = 0.0, acc_dy = 0.0;
        for (int64_t dy = 0; dy < 2; ++dy) {
          const int64_t qy = y0 + dy;
          if (qy < 0 || qy >= s.h) continue;
          for (int64_t dx = 0; dx < 2; ++dx) {
            const int64_t qx = x0 + dx;
            if (qx < 0 || qx >= s.w) continue;
            const int64_t qi = qy * s.w + qx;
            const double wq = hts[dy] * wts[dx];
            // d w / d sx: left tap -1, right tap +1 (same for y)
            const double dwx = (dx == 0 ? -1.0 : 1.0) * hts[dy];
            const double dwy = (dy == 0 ? -1.0 : 1.0) * wts[dx];
            for (int64_t c = 0; c < s.c; ++c) {
              const double g = gb[c * hw + pi];
              const double fv = fb[c * hw + qi];
              if (gfb && wq != 0.0) gfb[c * hw + qi] += wq * g;
              acc_dx += g * dwx * fv;
              acc_dy += g * dwy * fv;
            }
          }
        }
        if (gfx) {
          gfx[pi] += acc_dx;
          gfy[pi] += acc_dy;
        }
      }
    }
  }
}

Tensor downscale_flow_forward(const Tensor& flow, int64_t stride) {
  const auto& s = flow.shape();
  if (s.c != 2)
    throw std::invalid_argument("downscale_flow: flow must have 2 channels, got " + s.str());
  if (stride < 1 || s.h % stride != 0 || s.w % stride != 0)
    throw std::invalid_argument("downscale_flow: dims " + s.str() +
                                " not divisible by stride " + std::to_string(stride));
  const int64_t fh = s.h / stride, fw = s.w / stride;
  Tensor out({s.n, 2, fh, fw});
  const double inv = 1.0 / (static_cast<double>(stride) * stride * stride);
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < 2; ++c)
      for (int64_t y = 0; y < fh; ++y)
        for (int64_t x = 0; x < fw; ++x) {
          double acc = 0.0;
          for (int64_t dy = 0; dy < stride; ++dy)
            for (int64_t dx = 0; dx < stride; ++dx)
              acc += flow.at(n, c, y * stride + dy, x * stride + dx);
          out.at(n, c, y, x) = acc * inv;
        }
  return out;
}

void downscale_flow_backward(const Tensor& gout, int64_t stride, Tensor* gflow) {
  const auto& s = gflow->shape();
  const double inv = 1.0 / (static_cast<double>(stride) * stride * stride);
  for (int64_t n = 0; n < s.n; ++n)
    for (int64_t c = 0; c < 2; ++c)
      for (int64_t y = 0; y < s.h; ++y)
        for (int64_t x = 0; x < s.w; ++x)
          gflow->at(n, c, y, x) += gout.at(n, c, y / stride, x / stride) * inv;
}

// ---------------------------------------------------------------------------

Tensor softmax_channel_forward(const Tensor& x) {
  const auto& s = x.shape();
  if (s.c < 1) throw std::invalid_argument("softmax: need c >= 1, got " + s.str());
  Tensor out(s);
  const int64_t hw = s.h * s.w;
  for (int64_t n = 0; n < s.n; ++n) {
    const double* xb = x.data() + n * s.c * hw;
    double* ob = out.data() + n * s.c * hw;
    for (int64_t p = 0; p < hw; ++p) {
      double m = xb[p];
      for (int64_t c = 1; c < s.c; ++c) m = std::max(m, xb[c * hw + p]);
      double sum = 0.0;
      for (int64_t c = 0; c < s.c; ++c) {
        const double e = std::exp(xb[c * hw + p] - m);
        ob[c * hw + p] = e;
        sum += e;
      }
      const double inv = 1.0 / sum;
      for (int64_t c = 0; c < s.c; ++c) ob[c * hw + p] *= inv;
    }
  }
  return out;
}

void softmax_channel_backward(const Tensor& probs, const Tensor& gout, Tensor* gx) {
  const auto& s = probs.shape();
  const int64_t hw = s.h * s.w;
  for (int64_t n = 0; n < s.n; ++n) {
    const double* pb = probs.data() + n * s.c * hw;
    const double* gb = gout.data() + n * s.c * hw;
    double* gxb = gx->data() + n * s.c * hw;
    for (int64_t p = 0; p < hw; ++p) {
      double dot = 0.0;
      for (int64_t c = 0; c < s.c; ++c) dot += gb[c * hw + p] * pb[c * hw + p];
      for (int64_t c = 0; c < s.c; ++c)
        gxb[c * hw + p] += pb[c * hw + p] * (gb[c * hw + p] - dot);
    }
  }
}

CrossEntropyResult cross_entropy_forward(const Tensor& scores, const LabelMap& labels,
                                         int32_t ignore_label) {
  const auto& s = scores.shape();
  if (s.n != 1)
    throw std::invalid_argument("cross_entropy: batch must be 1, got " + s.str());
  if (s.h != labels.h || s.w != labels.w)
    throw std::invalid_argument("cross_entropy: scores " + s.str() + " vs labels (" +
                                std::to_string(labels.h) + "," + std::to_string(labels.w) + ")");
  CrossEntropyResult r;
  r.probs = softmax_channel_forward(scores);
  const int64_t hw = s.h * s.w;
  const double* xb = scores.data();
  double acc = 0.0;
  for (int64_t p = 0; p < hw; ++p) {
    const int32_t l = labels.ids[static_cast<size_t>(p)];
    if (l == ignore_label) continue;
    if (l < 0 || l >= s.c)
      throw std::invalid_argument("cross_entropy: label " + std::to_string(l) +
                                  " outside [0," + std::to_string(s.c) + ") and not ignore");
    double m = xb[p];
    for (int64_t c = 1; c < s.c; ++c) m = std::max(m, xb[c * hw + p]);
    double sum = 0.0;
    for (int64_t c = 0; c < s.c; ++c) sum += std::exp(xb[c * hw + p] - m);
    acc += m + std::log(sum) - xb[l * hw + p];
    ++r.valid;
  }
  r.loss = r.valid > 0 ? acc / static_cast<double>(r.valid) : 0.0;
  return r;
}

void cross_entropy_backward(const CrossEntropyResult& fwd, const LabelMap& labels,
                            int32_t ignore_label, double gloss, Tensor* gscores) {
  if (fwd.valid == 0) return;
  const auto& s = fwd.probs.shape();
  const int64_t hw = s.h * s.w;
  const double scale = gloss / static_cast<double>(fwd.valid);
  const double* pb = fwd.probs.data();
  double* gb = gscores->data();
  for (int64_t p = 0; p < hw; ++p) {
    const int32_t l = labels.ids[static_cast<size_t>(p)];
    if (l == ignore_label) continue;
    for (int64_t c = 0; c < s.c; ++c)
      gb[c * hw + p] += scale * (pb[c * hw + p] - (c == l ? 1.0 : 0.0));
  }
}

LabelMap argmax_channel(const Tensor& x) {
  const auto& s = x.shape();
  if (s.n != 1)
    throw std::invalid_argument("argmax_channel: batch must be 1, got " + s.str());
  if (s.c < 1) throw std::invalid_argument("argmax_channel: need c >= 1");
  LabelMap out(s.h, s.w);
  const int64_t hw = s.h * s.w;
  const double* xb = x.data();
  for (int64_t p = 0; p < hw; ++p) {
    int32_t best = 0;
    double bv = xb[p];
    for (int64_t c = 1; c < s.c; ++c) {
      const double v = xb[c * hw + p];
      if (v > bv) {  // ties keep the lowest index
        bv = v;
        best = static_cast<int32_t>(c);
      }
    }
    out.ids[static_cast<size_t>(p)] = best;
  }
  return out;
}

}  // namespace vseg::kernels
