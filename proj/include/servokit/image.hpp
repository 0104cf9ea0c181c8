#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "servokit/errors.hpp"

namespace servokit {

/// 8-bit raster, row-major, interleaved channels (1 = gray, 3 = RGB).
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> samples;

  static RasterImage filled(int w, int h, int c, std::uint8_t value) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3))
      throw ContractError("raster dims must be positive with 1 or 3 channels");
    RasterImage img;
    img.width = w;
    img.height = h;
    img.channels = c;
    img.samples.assign(static_cast<std::size_t>(w) * h * c, value);
    return img;
  }

  std::uint8_t& at(int u, int v, int c = 0) {
    return samples[(static_cast<std::size_t>(v) * width + u) * channels + c];
  }
  std::uint8_t at(int u, int v, int c = 0) const {
    return samples[(static_cast<std::size_t>(v) * width + u) * channels + c];
  }
  bool in_bounds(int u, int v) const {
    return u >= 0 && u < width && v >= 0 && v < height;
  }
};

/// ITU-R BT.601 luma: round(0.299 R + 0.587 G + 0.114 B).
inline RasterImage to_grayscale(const RasterImage& img) {
  if (img.channels != 3)
    throw ContractError("to_grayscale expects a 3-channel image");
  RasterImage gray = RasterImage::filled(img.width, img.height, 1, 0);
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u) {
      const double y = 0.299 * img.at(u, v, 0) + 0.587 * img.at(u, v, 1) +
                       0.114 * img.at(u, v, 2);
      gray.at(u, v) = static_cast<std::uint8_t>(
          std::clamp<long>(std::lround(y), 0L, 255L));
    }
  return gray;
}

inline RasterImage hflip_image(const RasterImage& img) {
  RasterImage out = img;
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u)
      for (int c = 0; c < img.channels; ++c)
        out.at(img.width - 1 - u, v, c) = img.at(u, v, c);
  return out;
}

inline RasterImage vflip_image(const RasterImage& img) {
  RasterImage out = img;
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u)
      for (int c = 0; c < img.channels; ++c)
        out.at(u, img.height - 1 - v, c) = img.at(u, v, c);
  return out;
}

inline RasterImage rot180_image(const RasterImage& img) {
  RasterImage out = img;
  for (int v = 0; v < img.height; ++v)
    for (int u = 0; u < img.width; ++u)
      for (int c = 0; c < img.channels; ++c)
        out.at(img.width - 1 - u, img.height - 1 - v, c) = img.at(u, v, c);
  return out;
}

namespace detail {

inline int pnm_token(std::istream& in, const std::string& path) {
  // Whitespace and '#' comments may separate header tokens.
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (!std::isspace(ch)) {
      break;
    } else {
      ch = in.get();
    }
  }
  if (ch == EOF) throw IoError("truncated PNM header in " + path);
  int value = 0;
  bool any = false;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    any = true;
    ch = in.get();
  }
  if (!any) throw IoError("malformed PNM header in " + path);
  if (ch != EOF) in.unget();
  return value;
}

}  // namespace detail

/// Binary PGM (P5) or PPM (P6), maxval 255.
inline RasterImage read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  int channels = 0;
  if (magic[0] == 'P' && magic[1] == '5')
    channels = 1;
  else if (magic[0] == 'P' && magic[1] == '6')
    channels = 3;
  else
    throw IoError("unsupported PNM magic in " + path);
  const int width = detail::pnm_token(in, path);
  const int height = detail::pnm_token(in, path);
  const int maxval = detail::pnm_token(in, path);
  if (maxval != 255) throw IoError("PNM maxval must be 255 in " + path);
  in.get();  // single whitespace byte before raster data
  RasterImage img = RasterImage::filled(width, height, channels, 0);
  in.read(reinterpret_cast<char*>(img.samples.data()),
          static_cast<std::streamsize>(img.samples.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.samples.size()))
    throw IoError("truncated PNM raster in " + path);
  return img;
}

inline void write_pnm(const std::string& path, const RasterImage& img) {
  if (img.channels != 1 && img.channels != 3)
    throw ContractError("PNM supports 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << (img.channels == 1 ? "P5" : "P6") << "\n"
      << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.samples.data()),
            static_cast<std::streamsize>(img.samples.size()));
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace servokit
