#pragma once

#include <string>
#include <vector>

#include "stimtomo/experiments.hpp"

namespace stimtomo {

struct PlotSeries {
  std::string name;
  std::vector<CurvePoint> points;
  bool line = false;  ///< polyline instead of markers
  std::string color;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

/// Self-contained SVG with axes, ticks and a legend.
std::string render_svg(const Plot& plot);

/// Figure-style plot of a report: concurrence vs alpha_sq with the closed
/// form, SET vs QST purity with y = x, phase vs seed angle with the fitted
/// line and the normalised envelope. Other experiments get SET and QST
/// concurrence against the swept value.
Plot report_plot(const ExperimentReport& report);

}  // namespace stimtomo
