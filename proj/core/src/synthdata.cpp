#include "vseg/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "vseg/rng.hpp"

namespace vseg {

namespace {

struct ShapeObj {
  int32_t cls = 0;
  int kind = 0;  // 0 rect, 1 disk, 2 triangle
  double sx = 0, sy = 0;  // center at spawn time
  double vx = 0, vy = 0;  // object velocity relative to the scene
  double size = 0;
  double color[3] = {0, 0, 0};
  uint64_t tex_salt = 0;
  int64_t t_spawn = 0;
  int64_t t_die = 1 << 30;  // alive for t in [t_spawn, t_die)

  bool alive(int64_t t) const { return t >= t_spawn && t < t_die; }

  // image-space center at time t (object velocity plus camera pan)
  void center(int64_t t, double pan_x, double pan_y, double& cx, double& cy) const {
    const double dt = static_cast<double>(t - t_spawn);
    cx = sx + (vx + pan_x) * dt;
    cy = sy + (vy + pan_y) * dt;
  }

  bool contains(double px, double py, int64_t t, double pan_x, double pan_y) const {
    double cx, cy;
    center(t, pan_x, pan_y, cx, cy);
    const double dx = px - cx, dy = py - cy;
    const double half = 0.55 * size;
    switch (kind) {
      case 0: return std::abs(dx) <= 0.7 * size && std::abs(dy) <= 0.45 * size;
      case 1: return dx * dx + dy * dy <= half * half;
      default: return dy >= -half && dy <= half && std::abs(dx) <= 0.5 * (dy + half);
    }
  }
};

double hash01(uint64_t seed, uint64_t salt, int64_t ix, int64_t iy) {
  uint64_t u = splitmix64(seed ^ salt);
  u = splitmix64(u ^ static_cast<uint64_t>(ix) * 0x9e3779b97f4a7c15ull);
  u = splitmix64(u ^ static_cast<uint64_t>(iy) * 0xc2b2ae3d27d4eb4full);
  return static_cast<double>(u >> 11) * 0x1.0p-53;
}

// Smooth lattice value noise in [0,1] with the given cell size.
double value_noise(double x, double y, double cell, uint64_t seed, uint64_t salt) {
  const double gx = x / cell, gy = y / cell;
  const double fx = std::floor(gx), fy = std::floor(gy);
  const int64_t ix = static_cast<int64_t>(fx), iy = static_cast<int64_t>(fy);
  const double tx = gx - fx, ty = gy - fy;
  const double v00 = hash01(seed, salt, ix, iy);
  const double v01 = hash01(seed, salt, ix + 1, iy);
  const double v10 = hash01(seed, salt, ix, iy + 1);
  const double v11 = hash01(seed, salt, ix + 1, iy + 1);
  const double a = v00 + (v01 - v00) * tx;
  const double b = v10 + (v11 - v10) * tx;
  return a + (b - a) * ty;
}

void class_base_color(int32_t cls, double* out) {
  static const double base[3][3] = {
      {0.85, 0.30, 0.25}, {0.25, 0.80, 0.30}, {0.30, 0.35, 0.85}};
  const int k = static_cast<int>((cls - 1) % 3);
  const int gen = static_cast<int>((cls - 1) / 3);
  const double fade = gen == 0 ? 1.0 : 0.55;
  for (int c = 0; c < 3; ++c) out[c] = base[k][c] * fade + (gen > 0 ? 0.1 : 0.0);
}

// Topmost object slot covering the continuous point (px,py) at time t; -1 if
// none. Later slots are drawn on top.
int64_t topmost_at(const std::vector<ShapeObj>& objs, double px, double py, int64_t t,
                   const GenParams& p) {
  for (int64_t s = static_cast<int64_t>(objs.size()) - 1; s >= 0; --s)
    if (objs[s].alive(t) && objs[s].contains(px, py, t, p.pan_x, p.pan_y)) return s;
  return -1;
}

}  // namespace

void GenParams::validate() const {
  if (h < 8 || w < 8)
    throw std::invalid_argument("GenParams: dims must be >= 8, got " + std::to_string(h) +
                                "x" + std::to_string(w));
  if (frames < 1) throw std::invalid_argument("GenParams: frames must be >= 1");
  if (num_objects < 0) throw std::invalid_argument("GenParams: num_objects must be >= 0");
  if (num_classes < 2)
    throw std::invalid_argument("GenParams: num_classes must be >= 2, got " +
                                std::to_string(num_classes));
  if (obj_min_size <= 0.0 || obj_max_size < obj_min_size)
    throw std::invalid_argument("GenParams: degenerate object size range [" +
                                std::to_string(obj_min_size) + ", " +
                                std::to_string(obj_max_size) + "]");
  const double bound = static_cast<double>(h) / 8.0;
  if (velocity_max < 0.0 || velocity_max > bound)
    throw std::invalid_argument("GenParams: velocity_max must lie in [0, h/8]");
  if (std::abs(pan_x) > bound || std::abs(pan_y) > bound)
    throw std::invalid_argument("GenParams: camera pan must lie in [-h/8, h/8]");
  if (spawn_prob < 0.0 || spawn_prob >= 1.0)
    throw std::invalid_argument("GenParams: spawn_prob must lie in [0, 1)");
  if (texture_amp < 0.0) throw std::invalid_argument("GenParams: texture_amp must be >= 0");
}

VideoClip gen_clip(const GenParams& params) {
  params.validate();
  Rng rng(params.seed);
  std::vector<ShapeObj> objs;
  int32_t next_cls = 1;
  auto spawn = [&](int64_t t) {
    ShapeObj o;
    o.cls = next_cls;
    next_cls = next_cls + 1 < params.num_classes ? next_cls + 1 : 1;
    o.kind = static_cast<int>((o.cls - 1) % 3);
    o.sx = rng.uniform(0.0, static_cast<double>(params.w - 1));
    o.sy = rng.uniform(0.0, static_cast<double>(params.h - 1));
    o.vx = rng.uniform(-params.velocity_max, params.velocity_max);
    o.vy = rng.uniform(-params.velocity_max, params.velocity_max);
    o.size = rng.uniform(params.obj_min_size, params.obj_max_size);
    class_base_color(o.cls, o.color);
    for (double& c : o.color)
      c = std::clamp(c + rng.uniform(-0.12, 0.12), 0.12, 1.0);
    o.tex_salt = rng.next_u64();
    o.t_spawn = t;
    objs.push_back(o);
  };
  for (int64_t i = 0; i < params.num_objects; ++i) spawn(0);
  for (int64_t t = 1; t < params.frames; ++t) {
    for (ShapeObj& o : objs)
      if (o.alive(t) && o.t_spawn < t && rng.bernoulli(params.spawn_prob)) o.t_die = t;
    if (rng.bernoulli(params.spawn_prob)) spawn(t);
  }

  VideoClip clip;
  clip.params = params;
  std::vector<std::vector<int64_t>> owners(static_cast<size_t>(params.frames));

  for (int64_t t = 0; t < params.frames; ++t) {
    Tensor frame({1, 3, params.h, params.w});
    LabelMap label(params.h, params.w);
    auto& owner = owners[static_cast<size_t>(t)];
    owner.assign(static_cast<size_t>(params.h * params.w), -1);
    for (int64_t y = 0; y < params.h; ++y) {
      for (int64_t x = 0; x < params.w; ++x) {
        const double px = static_cast<double>(x), py = static_cast<double>(y);
        const int64_t slot = topmost_at(objs, px, py, t, params);
        owner[static_cast<size_t>(y * params.w + x)] = slot;
        if (slot < 0) {
          // background: texture anchored to the panning scene
          const double wx = px - params.pan_x * static_cast<double>(t);
          const double wy = py - params.pan_y * static_cast<double>(t);
          const double bases[3] = {0.40, 0.40, 0.38};
          for (int64_t c = 0; c < 3; ++c) {
            const double n = value_noise(wx, wy, 8.0, params.seed, 17 + static_cast<uint64_t>(c));
            frame.at(0, c, y, x) = std::clamp(bases[c] + params.texture_amp * (n - 0.5), 0.0, 1.0);
          }
          label.at(y, x) = 0;
        } else {
          const ShapeObj& o = objs[static_cast<size_t>(slot)];
          double cx, cy;
          o.center(t, params.pan_x, params.pan_y, cx, cy);
          const double n =
              value_noise(px - cx, py - cy, 4.0, params.seed, o.tex_salt);
          const double shade = 1.0 + params.texture_amp * (n - 0.5);
          for (int64_t c = 0; c < 3; ++c)
            frame.at(0, c, y, x) = std::clamp(o.color[c] * shade, 0.0, 1.0);
          label.at(y, x) = o.cls;
        }
      }
    }
    clip.frames.push_back(std::move(frame));
    clip.labels.push_back(std::move(label));
  }

  // Backward-sampling ground-truth flow: flows[t] anchors at frame t+1 and
  // points into frame t. Pixels without a valid correspondence (dis-occluded,
  // spawned, or entering from outside) carry the camera flow.
  for (int64_t t = 0; t + 1 < params.frames; ++t) {
    Tensor flow({1, 2, params.h, params.w});
    const auto& owner = owners[static_cast<size_t>(t + 1)];
    for (int64_t y = 0; y < params.h; ++y) {
      for (int64_t x = 0; x < params.w; ++x) {
        const int64_t slot = owner[static_cast<size_t>(y * params.w + x)];
        double dx = -params.pan_x, dy = -params.pan_y;
        if (slot >= 0) {
          const ShapeObj& o = objs[static_cast<size_t>(slot)];
          const double ux = o.vx + params.pan_x, uy = o.vy + params.pan_y;
          const double qx = static_cast<double>(x) - ux;
          const double qy = static_cast<double>(y) - uy;
          const bool in_bounds = qx >= 0.0 && qx <= static_cast<double>(params.w - 1) &&
                                 qy >= 0.0 && qy <= static_cast<double>(params.h - 1);
          if (o.alive(t) && in_bounds && topmost_at(objs, qx, qy, t, params) == slot) {
            dx = -ux;
            dy = -uy;
          }
        }
        flow.at(0, 0, y, x) = dx;
        flow.at(0, 1, y, x) = dy;
      }
    }
    clip.flows.push_back(std::move(flow));
  }
  return clip;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'V', 'S', 'E', 'G', 'D', 'A', 'T', 'A'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_i64(std::string& out, int64_t v) { put_u64(out, static_cast<uint64_t>(v)); }
void put_f64(std::string& out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}
void put_f32(std::string& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

void put_tensor_f32(std::string& out, const Tensor& t) {
  put_u64(out, static_cast<uint64_t>(t.numel()));
  const double* d = t.data();
  for (int64_t i = 0; i < t.numel(); ++i) put_f32(out, static_cast<float>(d[i]));
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;
  const std::string& path;

  void need(size_t n) const {
    if (pos + n > buf.size())
      throw std::runtime_error("dataset '" + path + "': truncated at byte " +
                               std::to_string(pos));
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  int64_t i64() { return static_cast<int64_t>(u64()); }
  double f64() {
    uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  float f32() {
    uint32_t bits = u32();
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
  }
};

Tensor read_tensor_f32(Reader& r, Shape s, const char* what) {
  const uint64_t count = r.u64();
  if (count != static_cast<uint64_t>(s.numel()))
    throw std::runtime_error("dataset '" + r.path + "': " + what + " has " +
                             std::to_string(count) + " values, expected " +
                             std::to_string(s.numel()));
  std::vector<double> vals(static_cast<size_t>(count));
  for (double& v : vals) v = static_cast<double>(r.f32());
  return Tensor::from(s, std::move(vals));
}

int64_t clip_record_size(const VideoClip& c) {
  const GenParams& p = c.params;
  int64_t size = 13 * 8;  // GenParams record
  size += 8;              // frame count
  size += static_cast<int64_t>(c.frames.size()) * (8 + 4 * 3 * p.h * p.w);
  size += static_cast<int64_t>(c.labels.size()) * (8 + p.h * p.w);
  size += static_cast<int64_t>(c.flows.size()) * (8 + 4 * 2 * p.h * p.w);
  return size;
}

}  // namespace

int64_t dataset_file_size(const std::vector<VideoClip>& clips) {
  int64_t size = 8 + 4 + 8;  // magic + version + clip count
  for (const VideoClip& c : clips) size += clip_record_size(c);
  return size;
}

void save_dataset(const std::string& path, const std::vector<VideoClip>& clips) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_u64(out, clips.size());
  for (const VideoClip& c : clips) {
    const GenParams& p = c.params;
    put_i64(out, p.h);
    put_i64(out, p.w);
    put_i64(out, p.frames);
    put_i64(out, p.num_objects);
    put_i64(out, p.num_classes);
    put_f64(out, p.velocity_max);
    put_f64(out, p.pan_x);
    put_f64(out, p.pan_y);
    put_f64(out, p.spawn_prob);
    put_f64(out, p.texture_amp);
    put_f64(out, p.obj_min_size);
    put_f64(out, p.obj_max_size);
    put_u64(out, p.seed);
    put_u64(out, c.frames.size());
    for (const Tensor& f : c.frames) put_tensor_f32(out, f);
    for (const LabelMap& l : c.labels) {
      put_u64(out, l.ids.size());
      for (int32_t id : l.ids) out.push_back(static_cast<char>(static_cast<uint8_t>(id)));
    }
    for (const Tensor& f : c.flows) put_tensor_f32(out, f);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("dataset: cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("dataset: write failed for '" + path + "'");
}

std::vector<VideoClip> load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("dataset: cannot open '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r{buf, 0, path};
  r.need(sizeof(kMagic));
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("dataset '" + path + "': bad magic");
  r.pos += sizeof(kMagic);
  const uint32_t version = r.u32();
  if (version != kVersion)
    throw std::runtime_error("dataset '" + path + "': unsupported version " +
                             std::to_string(version));
  const uint64_t nclips = r.u64();
  std::vector<VideoClip> clips;
  clips.reserve(nclips);
  for (uint64_t i = 0; i < nclips; ++i) {
    VideoClip c;
    GenParams& p = c.params;
    p.h = r.i64();
    p.w = r.i64();
    p.frames = r.i64();
    p.num_objects = r.i64();
    p.num_classes = r.i64();
    p.velocity_max = r.f64();
    p.pan_x = r.f64();
    p.pan_y = r.f64();
    p.spawn_prob = r.f64();
    p.texture_amp = r.f64();
    p.obj_min_size = r.f64();
    p.obj_max_size = r.f64();
    p.seed = r.u64();
    p.validate();
    const uint64_t nframes = r.u64();
    if (nframes != static_cast<uint64_t>(p.frames))
      throw std::runtime_error("dataset '" + path + "': clip " + std::to_string(i) +
                               " frame count mismatch");
    for (uint64_t t = 0; t < nframes; ++t)
      c.frames.push_back(read_tensor_f32(r, {1, 3, p.h, p.w}, "frame"));
    for (uint64_t t = 0; t < nframes; ++t) {
      const uint64_t count = r.u64();
      if (count != static_cast<uint64_t>(p.h * p.w))
        throw std::runtime_error("dataset '" + path + "': label size mismatch");
      LabelMap l(p.h, p.w);
      r.need(count);
      for (uint64_t j = 0; j < count; ++j) {
        l.ids[j] = static_cast<int32_t>(static_cast<uint8_t>(buf[r.pos + j]));
        if (l.ids[j] >= p.num_classes)
          throw std::runtime_error("dataset '" + path + "': label id " +
                                   std::to_string(l.ids[j]) + " out of range");
      }
      r.pos += count;
      c.labels.push_back(std::move(l));
    }
    for (uint64_t t = 0; t + 1 < nframes; ++t)
      c.flows.push_back(read_tensor_f32(r, {1, 2, p.h, p.w}, "flow"));
    clips.push_back(std::move(c));
  }
  if (r.pos != buf.size())
    throw std::runtime_error("dataset '" + path + "': " +
                             std::to_string(buf.size() - r.pos) + " trailing bytes");
  return clips;
}

}  // namespace vseg
