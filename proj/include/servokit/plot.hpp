#pragma once

#include <algorithm>
#include <string>

#include "servokit/csvio.hpp"
#include "servokit/servo.hpp"

namespace servokit {

namespace detail {

inline const char* kFeatureColors[4] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                        "#d62728"};

inline void svg_open(std::string& out, double width, double height) {
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"";
  out += format_double(width);
  out += "\" height=\"";
  out += format_double(height);
  out += "\" viewBox=\"0 0 ";
  out += format_double(width);
  out += ' ' + format_double(height);
  out += "\">\n";
}

inline void svg_polyline(std::string& out, const std::string& points,
                         const char* color, double stroke_width) {
  out += "<polyline fill=\"none\" stroke=\"";
  out += color;
  out += "\" stroke-width=\"";
  out += format_double(stroke_width);
  out += "\" points=\"";
  out += points;
  out += "\"/>\n";
}

}  // namespace detail

/// Image-plane trajectories of the four features: one polyline per feature
/// over the sensor rectangle, circles at the start pixels, crosses at the
/// final pixels.
inline std::string trajectory_svg(const ServoTrace& trace,
                                  const CameraIntrinsics& k) {
  const double scale = 0.5;
  const double w = k.width * scale, h = k.height * scale;
  std::string out;
  detail::svg_open(out, w, h);
  out += "<rect x=\"0\" y=\"0\" width=\"" + format_double(w) + "\" height=\"" +
         format_double(h) + "\" fill=\"white\" stroke=\"black\"/>\n";
  if (!trace.rows.empty()) {
    for (int f = 0; f < 4; ++f) {
      std::string points;
      for (const auto& row : trace.rows) {
        if (!points.empty()) points += ' ';
        points += format_double(row.pixels[f].u * scale);
        points += ',';
        points += format_double(row.pixels[f].v * scale);
      }
      detail::svg_polyline(out, points, detail::kFeatureColors[f], 1.0);
      const auto& first = trace.rows.front().pixels[f];
      const auto& last = trace.rows.back().pixels[f];
      out += "<circle cx=\"" + format_double(first.u * scale) + "\" cy=\"" +
             format_double(first.v * scale) + "\" r=\"3\" fill=\"" +
             detail::kFeatureColors[f] + "\"/>\n";
      for (int d = -1; d <= 1; d += 2) {
        out += "<line x1=\"" + format_double(last.u * scale - 3) + "\" y1=\"" +
               format_double(last.v * scale - 3 * d) + "\" x2=\"" +
               format_double(last.u * scale + 3) + "\" y2=\"" +
               format_double(last.v * scale + 3 * d) + "\" stroke=\"" +
               detail::kFeatureColors[f] + "\"/>\n";
      }
    }
  }
  out += "</svg>\n";
  return out;
}

/// Error norms against iteration index: one polyline per feature plus the
/// total stacked-error norm in black.
inline std::string error_svg(const ServoTrace& trace) {
  const double w = 640.0, h = 360.0, margin = 40.0;
  std::string out;
  detail::svg_open(out, w, h);
  out += "<rect x=\"0\" y=\"0\" width=\"" + format_double(w) + "\" height=\"" +
         format_double(h) + "\" fill=\"white\"/>\n";
  out += "<rect x=\"" + format_double(margin) + "\" y=\"" +
         format_double(margin / 2) + "\" width=\"" +
         format_double(w - 1.5 * margin) + "\" height=\"" +
         format_double(h - 1.5 * margin) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  if (!trace.rows.empty()) {
    double max_err = 1e-12;
    for (const auto& row : trace.rows)
      max_err = std::max(max_err, row.total_error);
    const double x0 = margin, y0 = h - margin;
    const double plot_w = w - 1.5 * margin, plot_h = h - 1.5 * margin;
    const double n = static_cast<double>(trace.rows.size());
    const auto x_of = [&](std::size_t i) {
      return x0 + plot_w * (n == 1 ? 0.0 : static_cast<double>(i) / (n - 1));
    };
    const auto y_of = [&](double err) { return y0 - plot_h * (err / max_err); };
    for (int f = 0; f < 4; ++f) {
      std::string points;
      for (std::size_t i = 0; i < trace.rows.size(); ++i) {
        if (!points.empty()) points += ' ';
        points += format_double(x_of(i));
        points += ',';
        points += format_double(y_of(trace.rows[i].feature_errors[f]));
      }
      detail::svg_polyline(out, points, detail::kFeatureColors[f], 1.0);
    }
    std::string points;
    for (std::size_t i = 0; i < trace.rows.size(); ++i) {
      if (!points.empty()) points += ' ';
      points += format_double(x_of(i));
      points += ',';
      points += format_double(y_of(trace.rows[i].total_error));
    }
    detail::svg_polyline(out, points, "#000000", 1.5);
    out += "<text x=\"" + format_double(margin) + "\" y=\"" +
           format_double(margin / 2 - 4) + "\" font-size=\"12\">max " +
           format_double(max_err) + " px</text>\n";
    out += "<text x=\"" + format_double(w - margin) + "\" y=\"" +
           format_double(h - margin / 4) +
           "\" font-size=\"12\" text-anchor=\"end\">iteration " +
           format_int(static_cast<long long>(trace.rows.size() - 1)) +
           "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace servokit
