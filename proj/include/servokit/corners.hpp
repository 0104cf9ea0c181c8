#pragma once

#include <array>
#include <cmath>

#include "servokit/camera.hpp"
#include "servokit/errors.hpp"

namespace servokit {

/// Quadrilateral corners in canonical order TL, TR, BR, BL
/// (corner index 2 is the bottom right).
struct CornerQuad {
  std::array<PixelPoint, 4> points{};

  const PixelPoint& tl() const { return points[0]; }
  const PixelPoint& tr() const { return points[1]; }
  const PixelPoint& br() const { return points[2]; }
  const PixelPoint& bl() const { return points[3]; }
};

namespace detail {

/// Index of the extremum of `key` over four points; ties resolved toward
/// smaller v, then smaller u, so the choice never depends on input order.
template <typename Key>
inline int extremal_index(const std::array<PixelPoint, 4>& pts, Key key,
                          bool want_max) {
  int best = 0;
  for (int i = 1; i < 4; ++i) {
    const double cand = key(pts[i]);
    const double cur = key(pts[best]);
    bool better;
    if (cand != cur) {
      better = want_max ? cand > cur : cand < cur;
    } else {
      better = pts[i].v < pts[best].v ||
               (pts[i].v == pts[best].v && pts[i].u < pts[best].u);
    }
    if (better) best = i;
  }
  return best;
}

}  // namespace detail

/**
 * Sort four points into TL, TR, BR, BL:
 *   TL = argmin(u+v), BR = argmax(u+v), TR = argmax(u-v), BL = argmin(u-v).
 * Throws AmbiguousOrderError when two roles select the same point.
 */
inline CornerQuad reorder_canonical(const std::array<PixelPoint, 4>& pts) {
  const auto sum = [](const PixelPoint& p) { return p.u + p.v; };
  const auto diff = [](const PixelPoint& p) { return p.u - p.v; };
  const int tl = detail::extremal_index(pts, sum, false);
  const int br = detail::extremal_index(pts, sum, true);
  const int tr = detail::extremal_index(pts, diff, true);
  const int bl = detail::extremal_index(pts, diff, false);
  const int roles[4] = {tl, tr, br, bl};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if (roles[i] == roles[j])
        throw AmbiguousOrderError("corner roles collide; ordering is ambiguous");
  return CornerQuad{{pts[tl], pts[tr], pts[br], pts[bl]}};
}

/// Signed shoelace area in image coordinates; positive for canonical order.
inline double quad_area(const CornerQuad& quad) {
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto& a = quad.points[i];
    const auto& b = quad.points[(i + 1) % 4];
    acc += a.u * b.v - b.u * a.v;
  }
  return acc / 2.0;
}

inline bool quad_is_convex(const CornerQuad& quad) {
  for (int i = 0; i < 4; ++i) {
    const auto& a = quad.points[i];
    const auto& b = quad.points[(i + 1) % 4];
    const auto& c = quad.points[(i + 2) % 4];
    const double cross =
        (b.u - a.u) * (c.v - b.v) - (b.v - a.v) * (c.u - b.u);
    if (cross <= 0.0) return false;
  }
  return true;
}

}  // namespace servokit
