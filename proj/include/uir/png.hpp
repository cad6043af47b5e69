#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "uir/tensor.hpp"

namespace uir {
namespace detail {

inline void png_chunk(std::vector<uint8_t>& out, const char type[4],
                      const std::vector<uint8_t>& data) {
  auto be32 = [&](uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
  };
  be32(static_cast<uint32_t>(data.size()));
  const size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = static_cast<uint32_t>(
      crc32(0L, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start)));
  be32(crc);
}

}  // namespace detail

// 8-bit RGB PNG from a [3,H,W] tensor in [0,1].
inline void write_png(const std::string& path, const Tensor& image) {
  if (image.shape().size() != 3 || image.shape()[0] != 3)
    throw ShapeError("write_png: expected [3,H,W] image, got " + shape_str(image.shape()));
  const int64_t h = image.shape()[1], w = image.shape()[2];
  const auto& v = image.values();

  // filter byte 0 per row, interleaved RGB
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(h * (1 + 3 * w)));
  for (int64_t y = 0; y < h; ++y) {
    raw.push_back(0);
    for (int64_t x = 0; x < w; ++x) {
      for (int64_t c = 0; c < 3; ++c) {
        const double val = std::min(std::max(v[static_cast<size_t>((c * h + y) * w + x)], 0.0), 1.0);
        raw.push_back(static_cast<uint8_t>(std::lround(val * 255.0)));
      }
    }
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw IoError("write_png: deflate failed");
  compressed.resize(bound);

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<uint8_t> ihdr(13);
  auto be32at = [&](size_t off, uint32_t val) {
    ihdr[off] = static_cast<uint8_t>(val >> 24);
    ihdr[off + 1] = static_cast<uint8_t>(val >> 16);
    ihdr[off + 2] = static_cast<uint8_t>(val >> 8);
    ihdr[off + 3] = static_cast<uint8_t>(val);
  };
  be32at(0, static_cast<uint32_t>(w));
  be32at(4, static_cast<uint32_t>(h));
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 2;   // truecolor
  ihdr[10] = 0;  // deflate
  ihdr[11] = 0;  // adaptive filtering
  ihdr[12] = 0;  // no interlace
  detail::png_chunk(out, "IHDR", ihdr);
  detail::png_chunk(out, "IDAT", compressed);
  detail::png_chunk(out, "IEND", {});

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace uir
