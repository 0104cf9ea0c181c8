#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>

#include "servokit/vision.hpp"

using namespace servokit;
using Catch::Matchers::WithinAbs;

namespace {

EdgeMap edge_map_from(int w, int h, const std::vector<std::pair<int, int>>& px) {
  EdgeMap edges;
  edges.width = w;
  edges.height = h;
  edges.mask.assign(static_cast<std::size_t>(w) * h, 0);
  for (const auto& [u, v] : px)
    edges.mask[static_cast<std::size_t>(v) * w + u] = 1;
  return edges;
}

RasterImage step_image_16() {
  RasterImage img = RasterImage::filled(16, 16, 1, 0);
  for (int v = 0; v < 16; ++v)
    for (int u = 8; u < 16; ++u) img.at(u, v) = 255;
  return img;
}

CornerQuad rotated_rect(double cx, double cy, double hw, double hh,
                        double angle_deg) {
  const double a = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a), s = std::sin(a);
  std::array<PixelPoint, 4> pts;
  const double dx[4] = {-hw, hw, hw, -hw};
  const double dy[4] = {-hh, -hh, hh, hh};
  for (int i = 0; i < 4; ++i)
    pts[i] = {cx + c * dx[i] - s * dy[i], cy + s * dx[i] + c * dy[i]};
  return reorder_canonical(pts);
}

}  // namespace

TEST_CASE("grayscale conversion uses the 601 weights") {
  RasterImage rgb = RasterImage::filled(2, 2, 3, 0);
  rgb.at(0, 0, 0) = 255;
  rgb.at(0, 0, 1) = 255;
  rgb.at(0, 0, 2) = 255;
  rgb.at(1, 0, 0) = 255;  // pure red
  rgb.at(0, 1, 0) = 90;   // gray triplet
  rgb.at(0, 1, 1) = 90;
  rgb.at(0, 1, 2) = 90;
  const RasterImage gray = to_grayscale(rgb);
  CHECK(gray.at(0, 0) == 255);
  CHECK(gray.at(1, 0) == 76);
  CHECK(gray.at(0, 1) == 90);
  CHECK(gray.at(1, 1) == 0);
  CHECK_THROWS_AS(to_grayscale(gray), ContractError);
}

TEST_CASE("uniform images have no edges") {
  const RasterImage img = RasterImage::filled(32, 24, 1, 137);
  const EdgeMap edges = canny(img);
  for (const auto m : edges.mask) REQUIRE(m == 0);
}

TEST_CASE("vertical step yields the frozen single-column mask") {
  // Mask and magnitude frozen from an independent reference implementation
  // (sigma 1, low 20, high 60): one 1-px column on the bright side of the
  // step, the exact tie at the step resolved by the asymmetric NMS rule.
  const auto stages = canny_stages(step_image_16(), 1.0, 20.0, 60.0);
  int count = 0;
  for (int v = 0; v < 16; ++v)
    for (int u = 0; u < 16; ++u)
      if (stages.edges.on(u, v)) {
        ++count;
        REQUIRE(u == 8);
      }
  CHECK(count == 16);
  CHECK_THAT(stages.suppressed[5 * 16 + 8], WithinAbs(163.47706, 1e-4));
  CHECK(stages.suppressed[5 * 16 + 7] == 0.0);
}

TEST_CASE("canny validates its inputs") {
  const RasterImage img = RasterImage::filled(8, 8, 1, 0);
  CHECK_THROWS_AS(canny(img, 0.0, 10, 20), ContractError);
  CHECK_THROWS_AS(canny(img, 1.0, -1, 20), ContractError);
  CHECK_THROWS_AS(canny(img, 1.0, 30, 20), ContractError);
  const RasterImage rgb = RasterImage::filled(8, 8, 3, 0);
  CHECK_THROWS_AS(canny(rgb, 1.0, 10, 20), ContractError);
}

TEST_CASE("edge pixels clear the weak threshold and touch strong chains") {
  const CornerQuad quad = rotated_rect(80, 60, 40, 27, 10.0);
  const RasterImage img = render_quad(160, 120, quad, 200, 60);
  const double low = 15.0, high = 35.0;
  const auto stages = canny_stages(img, 1.0, low, high);
  const auto& edges = stages.edges;
  for (int v = 0; v < edges.height; ++v)
    for (int u = 0; u < edges.width; ++u) {
      if (!edges.on(u, v)) continue;
      REQUIRE(stages.suppressed[v * edges.width + u] >= low);
      // Weak pixels must reach a strong pixel through the retained mask.
    }
  // Every retained pixel is 8-connected to a strong one: flood from strong
  // pixels over the mask and require full coverage.
  std::vector<std::uint8_t> reach(edges.mask.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < edges.mask.size(); ++i)
    if (edges.mask[i] && stages.suppressed[i] >= high) {
      reach[i] = 1;
      stack.push_back(i);
    }
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
        const std::size_t j = static_cast<std::size_t>(vv) * edges.width + uu;
        if (edges.mask[j] && !reach[j]) {
          reach[j] = 1;
          stack.push_back(j);
        }
      }
  }
  for (std::size_t i = 0; i < edges.mask.size(); ++i)
    if (edges.mask[i]) REQUIRE(reach[i] == 1);
}

TEST_CASE("nms never keeps same-direction neighbors along the gradient") {
  const CornerQuad quad = rotated_rect(80, 60, 40, 27, 10.0);
  const RasterImage img = render_quad(160, 120, quad, 200, 60);
  const auto stages = canny_stages(img, 1.0, 15.0, 35.0);
  const auto& edges = stages.edges;
  for (int v = 0; v < edges.height; ++v)
    for (int u = 0; u < edges.width; ++u) {
      if (!edges.on(u, v)) continue;
      const int bin = stages.direction[v * edges.width + u];
      const int du = detail::kNmsDir[bin][0], dv = detail::kNmsDir[bin][1];
      const int uu = u + du, vv = v + dv;
      if (uu < 0 || uu >= edges.width || vv < 0 || vv >= edges.height) continue;
      if (edges.on(uu, vv))
        REQUIRE(stages.direction[vv * edges.width + uu] != bin);
    }
}

TEST_CASE("a rendered quad produces one closed contour") {
  const CornerQuad quad = rotated_rect(80, 60, 40, 27, 10.0);
  const RasterImage img = render_quad(160, 120, quad, 200, 60);
  const EdgeMap edges = canny(img, 1.0, 15.0, 35.0);
  CHECK(count_components_8(edges) == 1);
}

TEST_CASE("rectangle extrema extract in canonical order") {
  std::vector<std::pair<int, int>> outline;
  for (int u = 10; u <= 50; ++u) {
    outline.push_back({u, 10});
    outline.push_back({u, 30});
  }
  for (int v = 10; v <= 30; ++v) {
    outline.push_back({10, v});
    outline.push_back({50, v});
  }
  const EdgeMap edges = edge_map_from(64, 48, outline);
  const CornerQuad quad = extract_quadrilateral(edges);
  CHECK(quad.tl().u == 10.0);
  CHECK(quad.tl().v == 10.0);
  CHECK(quad.tr().u == 50.0);
  CHECK(quad.tr().v == 10.0);
  CHECK(quad.br().u == 50.0);
  CHECK(quad.br().v == 30.0);
  CHECK(quad.bl().u == 10.0);
  CHECK(quad.bl().v == 30.0);
}

TEST_CASE("interior clutter never moves the extracted corners") {
  std::vector<std::pair<int, int>> outline;
  for (int u = 10; u <= 50; ++u) {
    outline.push_back({u, 10});
    outline.push_back({u, 30});
  }
  for (int v = 10; v <= 30; ++v) {
    outline.push_back({10, v});
    outline.push_back({50, v});
  }
  auto cluttered = outline;
  for (int u = 20; u <= 40; u += 3)
    for (int v = 14; v <= 26; v += 2) cluttered.push_back({u, v});
  const CornerQuad clean = extract_quadrilateral(edge_map_from(64, 48, outline));
  const CornerQuad noisy =
      extract_quadrilateral(edge_map_from(64, 48, cluttered));
  for (int i = 0; i < 4; ++i) {
    CHECK(clean.points[i].u == noisy.points[i].u);
    CHECK(clean.points[i].v == noisy.points[i].v);
  }
}

TEST_CASE("degenerate edge maps raise explicit errors") {
  EdgeMap empty = edge_map_from(16, 16, {});
  CHECK_THROWS_AS(extract_quadrilateral(empty), NoTargetError);
  CHECK_THROWS_AS(extract_quadrilateral(edge_map_from(16, 16, {{5, 5}})),
                  DegenerateQuadError);
  // Horizontal segment: only two distinct extremal pixels.
  std::vector<std::pair<int, int>> seg;
  for (int u = 2; u <= 12; ++u) seg.push_back({u, 7});
  CHECK_THROWS_AS(extract_quadrilateral(edge_map_from(16, 16, seg)),
                  DegenerateQuadError);
}

TEST_CASE("extraction recovers rendered corners within two pixels") {
  const CornerQuad truth = rotated_rect(80, 60, 40, 27, 10.0);
  const RasterImage img = render_quad(160, 120, truth, 200, 60);
  const CornerQuad got = extract_quadrilateral(canny(img, 1.0, 15.0, 35.0));
  for (int i = 0; i < 4; ++i) {
    CHECK_THAT(got.points[i].u, WithinAbs(truth.points[i].u, 2.0));
    CHECK_THAT(got.points[i].v, WithinAbs(truth.points[i].v, 2.0));
  }
}

TEST_CASE("full-image rectangle fills everything but the border") {
  const int w = 32, h = 20;
  const CornerQuad quad = reorder_canonical(
      {PixelPoint{1, 1}, PixelPoint{w - 2.0, 1}, PixelPoint{w - 2.0, h - 2.0},
       PixelPoint{1, h - 2.0}});
  const RasterImage img = render_quad(w, h, quad, 250, 10);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const bool border = u == 0 || v == 0 || u == w - 1 || v == h - 1;
      REQUIRE(img.at(u, v) == (border ? 10 : 250));
    }
}

TEST_CASE("filled pixel count tracks the shoelace area") {
  const CornerQuad quad = reorder_canonical(
      {PixelPoint{40, 30}, PixelPoint{120, 36}, PixelPoint{116, 90},
       PixelPoint{44, 84}});
  const RasterImage img = render_quad(160, 120, quad, 200, 60);
  long count = 0;
  for (const auto s : img.samples)
    if (s == 200) ++count;
  const double area = quad_area(quad);
  double perimeter = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto& a = quad.points[i];
    const auto& b = quad.points[(i + 1) % 4];
    perimeter += std::hypot(b.u - a.u, b.v - a.v);
  }
  CHECK(std::abs(count - area) <= perimeter);
}

TEST_CASE("render rejects bad corner sets") {
  const CornerQuad quad = rotated_rect(80, 60, 40, 27, 0.0);
  CHECK_THROWS_AS(render_quad(160, 120, quad, 100, 100), ContractError);
  CornerQuad out = quad;
  out.points[1].u = 500.0;
  CHECK_THROWS_AS(render_quad(160, 120, out, 200, 60), ContractError);
  CornerQuad bowtie = quad;
  std::swap(bowtie.points[2], bowtie.points[3]);
  CHECK_THROWS_AS(render_quad(160, 120, bowtie, 200, 60), ContractError);
}

TEST_CASE("noisy rendering is deterministic per seed") {
  const CornerQuad quad = rotated_rect(80, 60, 40, 27, 15.0);
  RenderOptions opt;
  opt.noise_sigma = 4.0;
  opt.shade = 20.0;
  opt.seed = 99;
  const RasterImage a = render_quad(160, 120, quad, 200, 60, opt);
  const RasterImage b = render_quad(160, 120, quad, 200, 60, opt);
  CHECK(a.samples == b.samples);
  opt.seed = 100;
  const RasterImage c = render_quad(160, 120, quad, 200, 60, opt);
  CHECK(a.samples != c.samples);
}

TEST_CASE("vision params load from config") {
  const auto cfg = KeyValueConfig::from_string(
      "vision.sigma = 1.2\nvision.low = 30\nvision.high = 80\nvision.slope = 0.5\n");
  const VisionParams p = vision_from_config(cfg);
  CHECK(p.sigma == 1.2);
  CHECK(p.low == 30.0);
  CHECK(p.high == 80.0);
  CHECK(p.slope == 0.5);
  const auto bad = KeyValueConfig::from_string("vision.low = 90\nvision.high = 10\n");
  CHECK_THROWS_AS(vision_from_config(bad), ConfigError);
}

TEST_CASE("corner support guard accepts genuine corners, vetoes slid ones") {
  const CornerQuad quad = rotated_rect(80, 60, 42, 28, 15.0);
  const RasterImage img = render_quad(160, 120, quad, 200, 60);
  const EdgeMap edges = canny(img, 0.5, 15.0, 35.0);
  const CornerQuad got = extract_quadrilateral(edges);
  CHECK_NOTHROW(ensure_corner_support(edges, got));

  // A corner that slid 2.5 px along its edge leaves contour behind it.
  CornerQuad slid = got;
  const PixelPoint& tr = got.points[1];
  const PixelPoint& br = got.points[2];
  const double len = std::hypot(br.u - tr.u, br.v - tr.v);
  slid.points[1].u = tr.u + 2.5 * (br.u - tr.u) / len;
  slid.points[1].v = tr.v + 2.5 * (br.v - tr.v) / len;
  CHECK_THROWS_AS(ensure_corner_support(edges, slid), DegenerateQuadError);
}
