#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace syncluster {

namespace detail {

// 16-stop viridis-like ramp, dark-blue to yellow.
inline const char* kRamp[16] = {
    "#440154", "#481467", "#482576", "#453781", "#3f4889", "#39568c", "#33638d", "#2d708e",
    "#287d8e", "#238a8d", "#1f968b", "#20a386", "#29af7f", "#3dbc74", "#55c667", "#fde725"};

inline std::string ramp_color(double t) {
  t = std::min(1.0, std::max(0.0, t));
  const int idx = std::min(15, static_cast<int>(t * 16.0));
  return kRamp[idx];
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace detail

struct HeatmapSpec {
  std::string title;
  std::vector<double> alphas;  // column coordinates
  std::vector<double> betas;   // row coordinates
  std::vector<double> values;  // row-major [beta][alpha]
  double vmin = 0.0;
  double vmax = 1.0;
  // Optional theorem-boundary overlay, sampled as (alpha, beta) pairs.
  std::vector<std::pair<double, double>> boundary;
};

// Renders a cell-grid heatmap with axis ticks and an optional boundary
// polyline. Output is a pure function of the spec, so re-rendering from the
// same CSV is byte-identical.
inline std::string render_heatmap_svg(const HeatmapSpec& spec) {
  const int na = static_cast<int>(spec.alphas.size());
  const int nb = static_cast<int>(spec.betas.size());
  const double cell = 36.0;
  const double ml = 70.0, mb = 55.0, mt = 40.0, mr = 30.0;
  const double w = ml + na * cell + mr;
  const double h = mt + nb * cell + mb;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(w) +
         "\" height=\"" + detail::fmt(h) + "\" viewBox=\"0 0 " + detail::fmt(w) + " " +
         detail::fmt(h) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + detail::fmt(w / 2) + "\" y=\"22\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"14\">" + spec.title + "</text>\n";

  // Cells; beta increases upward.
  for (int bi = 0; bi < nb; ++bi) {
    for (int ai = 0; ai < na; ++ai) {
      const double v = spec.values[bi * na + ai];
      double t = 0.0;
      if (spec.vmax > spec.vmin) t = (v - spec.vmin) / (spec.vmax - spec.vmin);
      const double x = ml + ai * cell;
      const double y = mt + (nb - 1 - bi) * cell;
      out += "<rect x=\"" + detail::fmt(x) + "\" y=\"" + detail::fmt(y) + "\" width=\"" +
             detail::fmt(cell) + "\" height=\"" + detail::fmt(cell) + "\" fill=\"" +
             detail::ramp_color(t) + "\"/>\n";
    }
  }

  // Axis labels.
  for (int ai = 0; ai < na; ++ai) {
    const double x = ml + (ai + 0.5) * cell;
    out += "<text x=\"" + detail::fmt(x) + "\" y=\"" + detail::fmt(mt + nb * cell + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
           detail::fmt(spec.alphas[ai]) + "</text>\n";
  }
  for (int bi = 0; bi < nb; ++bi) {
    const double y = mt + (nb - 1 - bi + 0.5) * cell + 3;
    out += "<text x=\"" + detail::fmt(ml - 8) + "\" y=\"" + detail::fmt(y) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
           detail::fmt(spec.betas[bi]) + "</text>\n";
  }
  out += "<text x=\"" + detail::fmt(ml + na * cell / 2.0) + "\" y=\"" +
         detail::fmt(mt + nb * cell + 40) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">alpha</text>\n";
  out += "<text x=\"18\" y=\"" + detail::fmt(mt + nb * cell / 2.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 18 " + detail::fmt(mt + nb * cell / 2.0) + ")\">beta</text>\n";

  // Boundary overlay in data coordinates.
  if (spec.boundary.size() >= 2 && na >= 2 && nb >= 2) {
    const double a0 = spec.alphas.front(), a1 = spec.alphas.back();
    const double b0 = spec.betas.front(), b1 = spec.betas.back();
    std::string pts;
    for (const auto& [a, b] : spec.boundary) {
      const double fx = (a - a0) / (a1 - a0);
      const double fy = (b - b0) / (b1 - b0);
      if (fx < 0.0 || fx > 1.0) continue;
      const double x = ml + (0.5 + fx * (na - 1)) * cell;
      const double y = mt + (nb - 0.5 - std::min(1.05, std::max(-0.05, fy)) * (nb - 1)) * cell;
      pts += detail::fmt(x) + "," + detail::fmt(y) + " ";
    }
    out += "<polyline points=\"" + pts +
           "\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n";
  }

  // Color bar.
  for (int k = 0; k < 16; ++k) {
    const double x = ml + na * cell + 8;
    const double y = mt + (15 - k) * (nb * cell / 16.0);
    out += "<rect x=\"" + detail::fmt(x) + "\" y=\"" + detail::fmt(y) + "\" width=\"10\" height=\"" +
           detail::fmt(nb * cell / 16.0 + 0.5) + "\" fill=\"" + std::string(detail::kRamp[k]) +
           "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace syncluster
