#include "vseg/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vseg {

namespace {

constexpr char kMagic[8] = {'V', 'S', 'E', 'G', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;
  const std::string& path;

  void need(size_t n) const {
    if (pos + n > buf.size())
      throw std::runtime_error("checkpoint '" + path + "': truncated at byte " +
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
  double f64() {
    uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    put_u32(out, static_cast<uint32_t>(k.size()));
    out.append(k);
    put_u32(out, static_cast<uint32_t>(v.size()));
    out.append(v);
  }
  put_u64(out, ckpt.tensors.size());
  for (const auto& [name, t] : ckpt.tensors) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.append(name);
    const Shape& s = t.shape();
    put_u64(out, static_cast<uint64_t>(s.n));
    put_u64(out, static_cast<uint64_t>(s.c));
    put_u64(out, static_cast<uint64_t>(s.h));
    put_u64(out, static_cast<uint64_t>(s.w));
    const double* d = t.data();
    for (int64_t i = 0; i < t.numel(); ++i) put_f64(out, d[i]);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r{buf, 0, path};
  if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw std::runtime_error("checkpoint '" + path + "': bad magic");
  const uint32_t version = r.u32();
  if (version != kVersion)
    throw std::runtime_error("checkpoint '" + path + "': unsupported version " +
                             std::to_string(version));
  Checkpoint ckpt;
  const uint32_t nmeta = r.u32();
  for (uint32_t i = 0; i < nmeta; ++i) {
    std::string k = r.bytes(r.u32());
    std::string v = r.bytes(r.u32());
    ckpt.meta.emplace(std::move(k), std::move(v));
  }
  const uint64_t count = r.u64();
  for (uint64_t i = 0; i < count; ++i) {
    std::string name = r.bytes(r.u32());
    Shape s;
    s.n = static_cast<int64_t>(r.u64());
    s.c = static_cast<int64_t>(r.u64());
    s.h = static_cast<int64_t>(r.u64());
    s.w = static_cast<int64_t>(r.u64());
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0 || s.numel() < 0)
      throw std::runtime_error("checkpoint '" + path + "': invalid shape " + s.str());
    std::vector<double> vals(static_cast<size_t>(s.numel()));
    for (double& d : vals) d = r.f64();
    ckpt.tensors.emplace_back(std::move(name), Tensor::from(s, std::move(vals)));
  }
  if (r.pos != buf.size())
    throw std::runtime_error("checkpoint '" + path + "': " +
                             std::to_string(buf.size() - r.pos) + " trailing bytes");
  return ckpt;
}

}  // namespace vseg
