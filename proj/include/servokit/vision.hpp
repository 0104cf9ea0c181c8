#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "servokit/config.hpp"
#include "servokit/corners.hpp"
#include "servokit/errors.hpp"
#include "servokit/image.hpp"
#include "servokit/rng.hpp"

namespace servokit {

struct EdgeMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> mask;  ///< 0 or 1 per pixel, row-major

  bool on(int u, int v) const {
    return mask[static_cast<std::size_t>(v) * width + u] != 0;
  }

  RasterImage to_image() const {
    RasterImage img = RasterImage::filled(width, height, 1, 0);
    for (std::size_t i = 0; i < mask.size(); ++i)
      img.samples[i] = mask[i] ? 255 : 0;
    return img;
  }
};

constexpr double kDefaultCannySigma = 1.4;
constexpr double kDefaultCannyLow = 50.0;
constexpr double kDefaultCannyHigh = 100.0;
constexpr double kDefaultSlope = 1.0;

/// Intermediate Canny buffers, exposed so properties of the suppression and
/// threshold stages can be asserted directly.
struct CannyStages {
  std::vector<double> magnitude;   ///< post-Sobel, scaled to [0,255]
  std::vector<double> suppressed;  ///< magnitude surviving NMS, else 0
  std::vector<int> direction;      ///< quantized gradient bin 0..3
  EdgeMap edges;
};

namespace detail {

inline int clampi(int i, int lo, int hi) { return std::max(lo, std::min(hi, i)); }

/// Separable Gaussian, radius ceil(3*sigma), weights renormalized to sum 1,
/// borders clamped. Horizontal pass then vertical, accumulating k=-r..r;
/// the summation order is part of the contract so masks are reproducible
/// bit-for-bit against the reference implementation.
inline std::vector<double> gaussian_blur(const std::vector<double>& img, int w,
                                         int h, double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> weights(2 * r + 1);
  double sum = 0.0;
  for (int k = -r; k <= r; ++k) {
    weights[k + r] = std::exp(-(static_cast<double>(k) * k) / (2.0 * sigma * sigma));
    sum += weights[k + r];
  }
  for (auto& x : weights) x /= sum;
  std::vector<double> tmp(img.size()), out(img.size());
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k)
        acc += weights[k + r] * img[v * w + clampi(u + k, 0, w - 1)];
      tmp[v * w + u] = acc;
    }
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      double acc = 0.0;
      for (int k = -r; k <= r; ++k)
        acc += weights[k + r] * tmp[clampi(v + k, 0, h - 1) * w + u];
      out[v * w + u] = acc;
    }
  return out;
}

constexpr int kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
constexpr int kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

/// Gradient direction quantized to 4 bins; the bin indexes kNmsDir below.
inline int quantize_direction(double gx, double gy) {
  double ang = std::atan2(gy, gx);
  if (ang < 0.0) ang += std::numbers::pi;
  if (ang >= std::numbers::pi) ang -= std::numbers::pi;
  const double deg = ang * 180.0 / std::numbers::pi;
  if (deg < 22.5 || deg >= 157.5) return 0;
  if (deg < 67.5) return 1;
  if (deg < 112.5) return 2;
  return 3;
}

constexpr int kNmsDir[4][2] = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}};

}  // namespace detail

/**
 * Canny pipeline: Gaussian blur -> Sobel 3x3 -> magnitude sqrt(gx^2+gy^2)/4
 * (scaled into [0,255] for full-range gradients) -> non-maximum suppression
 * along the quantized gradient direction -> double threshold -> hysteresis
 * linking, 8-connected from strong pixels.
 *
 * NMS keeps a pixel iff its magnitude strictly exceeds the forward neighbor
 * and is >= the backward neighbor, so an exactly tied pair on a symmetric
 * step keeps exactly one pixel.
 */
inline CannyStages canny_stages(const RasterImage& img, double sigma,
                                double low, double high) {
  if (img.channels != 1) throw ContractError("canny expects a grayscale image");
  if (!(sigma > 0.0)) throw ContractError("canny: sigma must be > 0");
  if (low < 0.0 || high < low)
    throw ContractError("canny: thresholds require 0 <= low <= high");

  const int w = img.width, h = img.height;
  std::vector<double> gray(img.samples.begin(), img.samples.end());
  const std::vector<double> blur = detail::gaussian_blur(gray, w, h, sigma);

  std::vector<double> gx(gray.size(), 0.0), gy(gray.size(), 0.0);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      double ax = 0.0, ay = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const double px = blur[detail::clampi(v + dy, 0, h - 1) * w +
                                 detail::clampi(u + dx, 0, w - 1)];
          ax += detail::kSobelX[dy + 1][dx + 1] * px;
          ay += detail::kSobelY[dy + 1][dx + 1] * px;
        }
      gx[v * w + u] = ax;
      gy[v * w + u] = ay;
    }

  CannyStages stages;
  stages.magnitude.resize(gray.size());
  stages.direction.resize(gray.size());
  for (std::size_t i = 0; i < gray.size(); ++i) {
    stages.magnitude[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]) / 4.0;
    stages.direction[i] = detail::quantize_direction(gx[i], gy[i]);
  }

  stages.suppressed.assign(gray.size(), 0.0);
  const auto mag_at = [&](int u, int v) {
    if (u < 0 || u >= w || v < 0 || v >= h) return 0.0;
    return stages.magnitude[v * w + u];
  };
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const std::size_t i = static_cast<std::size_t>(v) * w + u;
      if (stages.magnitude[i] == 0.0) continue;
      const int dx = detail::kNmsDir[stages.direction[i]][0];
      const int dy = detail::kNmsDir[stages.direction[i]][1];
      if (stages.magnitude[i] > mag_at(u + dx, v + dy) &&
          stages.magnitude[i] >= mag_at(u - dx, v - dy))
        stages.suppressed[i] = stages.magnitude[i];
    }

  stages.edges.width = w;
  stages.edges.height = h;
  stages.edges.mask.assign(gray.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < gray.size(); ++i)
    if (stages.suppressed[i] >= high) {
      stages.edges.mask[i] = 1;
      stack.push_back(i);
    }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const int u = static_cast<int>(i % w), v = static_cast<int>(i / w);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int uu = u + dx, vv = v + dy;
        if (uu < 0 || uu >= w || vv < 0 || vv >= h) continue;
        const std::size_t j = static_cast<std::size_t>(vv) * w + uu;
        if (stages.suppressed[j] >= low && !stages.edges.mask[j]) {
          stages.edges.mask[j] = 1;
          stack.push_back(j);
        }
      }
  }
  return stages;
}

inline EdgeMap canny(const RasterImage& img, double sigma = kDefaultCannySigma,
                     double low = kDefaultCannyLow,
                     double high = kDefaultCannyHigh) {
  return canny_stages(img, sigma, low, high).edges;
}

/// Number of 8-connected components among edge pixels.
inline int count_components_8(const EdgeMap& edges) {
  std::vector<std::uint8_t> seen(edges.mask.size(), 0);
  std::vector<std::size_t> stack;
  int components = 0;
  for (std::size_t start = 0; start < edges.mask.size(); ++start) {
    if (!edges.mask[start] || seen[start]) continue;
    ++components;
    seen[start] = 1;
    stack.assign(1, start);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const int u = static_cast<int>(i % edges.width);
      const int v = static_cast<int>(i / edges.width);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int uu = u + dx, vv = v + dy;
          if ((dx == 0 && dy == 0) || uu < 0 || uu >= edges.width || vv < 0 ||
              vv >= edges.height)
            continue;
          const std::size_t j =
              static_cast<std::size_t>(vv) * edges.width + uu;
          if (edges.mask[j] && !seen[j]) {
            seen[j] = 1;
            stack.push_back(j);
          }
        }
    }
  }
  return components;
}

/**
 * Corner extraction by extremal intercepts: over all edge pixels, take the
 * extrema of c+ = v + m*u and c- = v - m*u. The four extremal pixels are
 * the quadrilateral's corners; the result is canonicalized to TL, TR, BR,
 * BL. Intercept ties resolve toward smaller v, then smaller u.
 */
inline CornerQuad extract_quadrilateral(const EdgeMap& edges,
                                        double slope = kDefaultSlope) {
  struct Pick {
    double c = 0.0;
    int u = -1, v = -1;
  };
  Pick min_plus, max_plus, min_minus, max_minus;
  const auto consider = [](Pick& pick, double c, int u, int v, bool want_max) {
    if (pick.u < 0) {
      pick = {c, u, v};
      return;
    }
    bool better;
    if (c != pick.c)
      better = want_max ? c > pick.c : c < pick.c;
    else
      better = v < pick.v || (v == pick.v && u < pick.u);
    if (better) pick = {c, u, v};
  };

  bool any = false;
  for (int v = 0; v < edges.height; ++v)
    for (int u = 0; u < edges.width; ++u) {
      if (!edges.on(u, v)) continue;
      any = true;
      const double cplus = v + slope * u;
      const double cminus = v - slope * u;
      consider(min_plus, cplus, u, v, false);
      consider(max_plus, cplus, u, v, true);
      consider(min_minus, cminus, u, v, false);
      consider(max_minus, cminus, u, v, true);
    }
  if (!any) throw NoTargetError("empty edge map; no target present");

  const std::array<PixelPoint, 4> pts = {
      PixelPoint{static_cast<double>(min_plus.u), static_cast<double>(min_plus.v)},
      PixelPoint{static_cast<double>(max_minus.u), static_cast<double>(max_minus.v)},
      PixelPoint{static_cast<double>(max_plus.u), static_cast<double>(max_plus.v)},
      PixelPoint{static_cast<double>(min_minus.u), static_cast<double>(min_minus.v)}};

  std::set<std::pair<double, double>> distinct;
  for (const auto& p : pts) distinct.insert({p.u, p.v});
  if (distinct.size() != 4)
    throw DegenerateQuadError("fewer than four distinct extremal pixels");

  CornerQuad quad;
  try {
    quad = reorder_canonical(pts);
  } catch (const AmbiguousOrderError&) {
    throw DegenerateQuadError("extremal pixels do not form a quadrilateral");
  }
  if (quad_area(quad) < 0.25)
    throw DegenerateQuadError("extremal pixels are collinear");
  return quad;
}

constexpr double kSupportReachMin = 1.6;
constexpr double kSupportReachMax = 4.5;
constexpr double kSupportLateral = 0.9;

/**
 * Reject extractions whose corners leave contour support behind: a corner
 * that slid along one edge (an intercept tie on a locally displaced contour)
 * has real edge pixels past it on the extension of an adjacent edge, where a
 * genuine corner has none. Throws DegenerateQuadError so batch annotation
 * surfaces the image instead of silently writing a wrong label.
 */
inline void ensure_corner_support(const EdgeMap& edges,
                                  const CornerQuad& corners) {
  for (int i = 0; i < 4; ++i) {
    const PixelPoint& c = corners.points[i];
    for (int adj : {(i + 3) % 4, (i + 1) % 4}) {
      const PixelPoint& a = corners.points[adj];
      const double len = std::hypot(c.u - a.u, c.v - a.v);
      if (len < 1e-9) continue;
      const double eu = (c.u - a.u) / len;
      const double ev = (c.v - a.v) / len;
      const int cu = static_cast<int>(std::lround(c.u));
      const int cv = static_cast<int>(std::lround(c.v));
      const int r = static_cast<int>(std::ceil(kSupportReachMax)) + 1;
      for (int dv = -r; dv <= r; ++dv)
        for (int du = -r; du <= r; ++du) {
          const int u = cu + du;
          const int v = cv + dv;
          if (u < 0 || u >= edges.width || v < 0 || v >= edges.height) continue;
          if (!edges.on(u, v)) continue;
          const double ru = u - c.u;
          const double rv = v - c.v;
          const double t = ru * eu + rv * ev;
          if (t < kSupportReachMin || t > kSupportReachMax) continue;
          if (std::hypot(ru - t * eu, rv - t * ev) <= kSupportLateral)
            throw DegenerateQuadError(
                "contour support extends beyond an extracted corner");
        }
    }
  }
}

struct RenderOptions {
  double noise_sigma = 0.0;  ///< additive Gaussian noise, gray levels
  std::uint64_t seed = 0;
  double shade = 0.0;  ///< peak-to-peak horizontal shading ramp, gray levels
};

/**
 * Scanline-fill a convex quadrilateral (canonical corner order, boundary
 * inclusive) with fg on a bg background. Optional shading ramp and seeded
 * Gaussian noise support detector robustness tests.
 */
inline RasterImage render_quad(int width, int height, const CornerQuad& corners,
                               std::uint8_t fg, std::uint8_t bg,
                               const RenderOptions& options = {}) {
  if (width <= 0 || height <= 0) throw ContractError("render_quad: empty image");
  if (fg == bg) throw ContractError("render_quad: fg and bg must differ");
  for (const auto& p : corners.points)
    if (p.u < 0.0 || p.u > width - 1 || p.v < 0.0 || p.v > height - 1)
      throw ContractError("render_quad: corner out of bounds");
  if (!quad_is_convex(corners))
    throw ContractError("render_quad: corners must be convex in canonical order");

  RasterImage img = RasterImage::filled(width, height, 1, bg);
  const auto inside = [&](double u, double v) {
    for (int i = 0; i < 4; ++i) {
      const auto& a = corners.points[i];
      const auto& b = corners.points[(i + 1) % 4];
      const double cross = (b.u - a.u) * (v - a.v) - (b.v - a.v) * (u - a.u);
      if (cross < 0.0) return false;
    }
    return true;
  };
  SplitRng rng(options.seed);
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u) {
      double value = inside(u, v) ? fg : bg;
      if (options.shade != 0.0 && width > 1)
        value += options.shade * (static_cast<double>(u) / (width - 1) - 0.5);
      if (options.noise_sigma > 0.0) value += options.noise_sigma * rng.normal();
      img.at(u, v) = static_cast<std::uint8_t>(
          std::clamp<long>(std::lround(value), 0L, 255L));
    }
  return img;
}

inline const std::set<std::string>& vision_config_keys() {
  static const std::set<std::string> keys = {"vision.sigma", "vision.low",
                                             "vision.high", "vision.slope"};
  return keys;
}

struct VisionParams {
  double sigma = kDefaultCannySigma;
  double low = kDefaultCannyLow;
  double high = kDefaultCannyHigh;
  double slope = kDefaultSlope;
};

inline VisionParams vision_from_config(const KeyValueConfig& cfg) {
  VisionParams p;
  p.sigma = cfg.get_double("vision.sigma", p.sigma);
  p.low = cfg.get_double("vision.low", p.low);
  p.high = cfg.get_double("vision.high", p.high);
  p.slope = cfg.get_double("vision.slope", p.slope);
  if (!(p.sigma > 0.0) || p.low < 0.0 || p.high < p.low)
    throw ConfigError("vision params require sigma > 0 and 0 <= low <= high");
  return p;
}

}  // namespace servokit
