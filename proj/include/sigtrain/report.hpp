#pragma once

#include <string>
#include <vector>

#include "sigtrain/analysis.hpp"
#include "sigtrain/types.hpp"

namespace sigtrain::report {

enum class Marker { Circle, Square, Diamond, Triangle, Cross };

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Series {
  std::string label;
  std::string color = "#000000";
  Marker marker = Marker::Circle;
  std::vector<Point> points;
};

struct Polyline {
  std::string label;  // empty = no legend entry
  std::string color = "#000000";
  bool dashed = false;
  bool dotted = false;
  std::vector<Point> points;
};

// Shaded region between two curves sharing an ordering axis.
struct Band {
  std::string color = "#888888";
  std::vector<Point> upper;
  std::vector<Point> lower;
};

struct Axis {
  std::string label;
  double lo = 0.0;
  double hi = 1.0;
  bool log_scale = false;  // positions proportional to log10(value)
  std::vector<double> ticks;
};

struct Plot {
  std::string title;
  Axis x, y;
  std::vector<Band> bands;
  std::vector<Polyline> lines;
  std::vector<Series> series;
  int width = 720;
  int height = 520;
};

// Deterministic standalone SVG text. Data elements are clipped to the plot
// area; identical plots always produce identical bytes.
std::string render_svg(const Plot& p);

// Per-run accuracy on the capture test set (x) against the synthetic test
// set (y), with black chance lines on both axes and the equal-performance
// diagonal clipped to the above-chance square.
Plot performance_compare_plot(const std::string& title, double chance,
                              std::vector<Series> series);

// A fitted trend drawn through quantity space. The label goes to the legend;
// log-logistic fits are drawn dotted, matching their role as the asymptotic
// alternative reading.
struct TrendOverlay {
  TrendFit fit;
  std::string label;
  std::string color = "#000000";
  bool with_band = true;
};

// Per-run accuracy (x) against training quantity per class on a log axis
// (y), with trend curves and 95% prediction bands. The vertical chance line
// marks random guessing.
Plot quantity_trend_plot(const std::string& title, double chance, const std::string& qty_label,
                         std::vector<Series> series, const std::vector<TrendOverlay>& trends,
                         double qty_lo, double qty_hi);

// Stable source presentation order and styling shared by every figure.
const std::vector<std::string>& source_display_order();
std::string source_color(const std::string& source);
Marker source_marker(const std::string& source);

}  // namespace sigtrain::report
