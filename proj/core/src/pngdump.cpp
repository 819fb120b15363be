#include "vseg/pngdump.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace vseg {

namespace {

void put_u32be(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_u32be(out, static_cast<uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  const uLong crc =
      crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
  put_u32be(out, static_cast<uint32_t>(crc));
}

void write_rgb_png(const std::string& path, int64_t h, int64_t w,
                   const std::vector<uint8_t>& rgb) {
  std::string ihdr;
  put_u32be(ihdr, static_cast<uint32_t>(w));
  put_u32be(ihdr, static_cast<uint32_t>(h));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // interlace

  std::vector<uint8_t> raw(static_cast<size_t>(h * (1 + 3 * w)));
  for (int64_t y = 0; y < h; ++y) {
    raw[static_cast<size_t>(y * (1 + 3 * w))] = 0;  // filter: none
    std::memcpy(&raw[static_cast<size_t>(y * (1 + 3 * w) + 1)],
                &rgb[static_cast<size_t>(y * 3 * w)], static_cast<size_t>(3 * w));
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) !=
      Z_OK)
    throw std::runtime_error("png: zlib compression failed for '" + path + "'");

  std::string out("\x89PNG\r\n\x1a\n", 8);
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT",
            std::string(reinterpret_cast<const char*>(compressed.data()), bound));
  put_chunk(out, "IEND", "");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("png: cannot open '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace

void write_frame_png(const std::string& path, const Tensor& frame) {
  const Shape& s = frame.shape();
  if (s.n != 1 || s.c != 3)
    throw std::invalid_argument("write_frame_png: expect (1,3,h,w), got " + s.str());
  std::vector<uint8_t> rgb(static_cast<size_t>(3 * s.h * s.w));
  for (int64_t y = 0; y < s.h; ++y)
    for (int64_t x = 0; x < s.w; ++x)
      for (int64_t c = 0; c < 3; ++c) {
        const double v = std::clamp(frame.at(0, c, y, x), 0.0, 1.0);
        rgb[static_cast<size_t>((y * s.w + x) * 3 + c)] =
            static_cast<uint8_t>(v * 255.0 + 0.5);
      }
  write_rgb_png(path, s.h, s.w, rgb);
}

void write_label_png(const std::string& path, const LabelMap& labels, int64_t num_classes) {
  static const uint8_t palette[][3] = {
      {40, 40, 40},   {220, 70, 60},  {60, 200, 80},  {70, 90, 220},
      {230, 200, 50}, {170, 60, 200}, {60, 200, 200}, {240, 140, 40},
  };
  const size_t npal = sizeof(palette) / sizeof(palette[0]);
  std::vector<uint8_t> rgb(static_cast<size_t>(3 * labels.h * labels.w));
  for (int64_t y = 0; y < labels.h; ++y)
    for (int64_t x = 0; x < labels.w; ++x) {
      const int32_t id = labels.at(y, x);
      if (id < 0 || id >= num_classes)
        throw std::invalid_argument("write_label_png: label id out of range");
      const uint8_t* col = palette[static_cast<size_t>(id) % npal];
      for (int64_t c = 0; c < 3; ++c)
        rgb[static_cast<size_t>((y * labels.w + x) * 3 + c)] = col[c];
    }
  write_rgb_png(path, labels.h, labels.w, rgb);
}

}  // namespace vseg
