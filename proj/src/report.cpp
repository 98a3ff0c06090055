#include "sigtrain/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace sigtrain::report {

namespace {

constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 42;
constexpr int kMarginBottom = 56;

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt_tick(double v) { return fmt(v, "%.6g"); }

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Transform {
  double x_lo, x_span, y_lo, y_span;
  bool x_log, y_log;
  double px0, px_span, py0, py_span;

  explicit Transform(const Plot& p) {
    auto span = [](const Axis& a, double& lo) {
      double l = a.log_scale ? std::log10(std::max(a.lo, 1e-12)) : a.lo;
      double h = a.log_scale ? std::log10(std::max(a.hi, 1e-12)) : a.hi;
      if (h <= l) h = l + 1.0;
      lo = l;
      return h - l;
    };
    x_log = p.x.log_scale;
    y_log = p.y.log_scale;
    x_span = span(p.x, x_lo);
    y_span = span(p.y, y_lo);
    px0 = kMarginLeft;
    px_span = p.width - kMarginLeft - kMarginRight;
    py0 = p.height - kMarginBottom;
    py_span = p.height - kMarginTop - kMarginBottom;
  }

  double px(double v) const {
    const double t = x_log ? std::log10(std::max(v, 1e-12)) : v;
    return px0 + (t - x_lo) / x_span * px_span;
  }
  double py(double v) const {
    const double t = y_log ? std::log10(std::max(v, 1e-12)) : v;
    return py0 - (t - y_lo) / y_span * py_span;
  }
};

void emit_marker(std::string& svg, Marker m, double x, double y, const std::string& color) {
  const std::string cx = fmt(x), cy = fmt(y);
  switch (m) {
    case Marker::Circle:
      svg += "<circle cx=\"" + cx + "\" cy=\"" + cy + "\" r=\"3.5\" fill=\"" + color +
             "\" fill-opacity=\"0.75\"/>\n";
      break;
    case Marker::Square:
      svg += "<rect x=\"" + fmt(x - 3.2) + "\" y=\"" + fmt(y - 3.2) +
             "\" width=\"6.4\" height=\"6.4\" fill=\"" + color + "\" fill-opacity=\"0.75\"/>\n";
      break;
    case Marker::Diamond:
      svg += "<path d=\"M" + fmt(x) + " " + fmt(y - 4.4) + "L" + fmt(x + 4.4) + " " + fmt(y) +
             "L" + fmt(x) + " " + fmt(y + 4.4) + "L" + fmt(x - 4.4) + " " + fmt(y) +
             "Z\" fill=\"" + color + "\" fill-opacity=\"0.75\"/>\n";
      break;
    case Marker::Triangle:
      svg += "<path d=\"M" + fmt(x) + " " + fmt(y - 4.2) + "L" + fmt(x + 3.9) + " " +
             fmt(y + 3.1) + "L" + fmt(x - 3.9) + " " + fmt(y + 3.1) + "Z\" fill=\"" + color +
             "\" fill-opacity=\"0.75\"/>\n";
      break;
    case Marker::Cross:
      svg += "<path d=\"M" + fmt(x - 3.2) + " " + fmt(y - 3.2) + "L" + fmt(x + 3.2) + " " +
             fmt(y + 3.2) + "M" + fmt(x - 3.2) + " " + fmt(y + 3.2) + "L" + fmt(x + 3.2) + " " +
             fmt(y - 3.2) + "\" stroke=\"" + color + "\" stroke-width=\"1.6\" fill=\"none\"/>\n";
      break;
  }
}

std::string polyline_points(const Transform& tr, const std::vector<Point>& pts) {
  std::string out;
  for (const auto& p : pts) {
    if (!out.empty()) out += ' ';
    out += fmt(tr.px(p.x)) + ',' + fmt(tr.py(p.y));
  }
  return out;
}

std::vector<double> decade_ticks(double lo, double hi) {
  std::vector<double> t;
  const int k0 = static_cast<int>(std::ceil(std::log10(std::max(lo, 1e-12)) - 1e-9));
  const int k1 = static_cast<int>(std::floor(std::log10(std::max(hi, 1e-12)) + 1e-9));
  for (int k = k0; k <= k1; ++k) t.push_back(std::pow(10.0, k));
  return t;
}

}  // namespace

std::string render_svg(const Plot& p) {
  const Transform tr(p);
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(p.width) +
         "\" height=\"" + std::to_string(p.height) + "\" viewBox=\"0 0 " +
         std::to_string(p.width) + " " + std::to_string(p.height) +
         "\" font-family=\"sans-serif\">\n";
  svg += "<rect width=\"" + std::to_string(p.width) + "\" height=\"" + std::to_string(p.height) +
         "\" fill=\"#ffffff\"/>\n";
  const std::string area_x = std::to_string(kMarginLeft);
  const std::string area_y = std::to_string(kMarginTop);
  const std::string area_w = std::to_string(p.width - kMarginLeft - kMarginRight);
  const std::string area_h = std::to_string(p.height - kMarginTop - kMarginBottom);
  svg += "<defs><clipPath id=\"plotarea\"><rect x=\"" + area_x + "\" y=\"" + area_y +
         "\" width=\"" + area_w + "\" height=\"" + area_h + "\"/></clipPath></defs>\n";

  // Gridlines, ticks and tick labels.
  for (double t : p.x.ticks) {
    const double x = tr.px(t);
    svg += "<line x1=\"" + fmt(x) + "\" y1=\"" + area_y + "\" x2=\"" + fmt(x) + "\" y2=\"" +
           fmt(tr.py0) + "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(tr.py0 + 18.0) +
           "\" font-size=\"11\" text-anchor=\"middle\">" + fmt_tick(t) + "</text>\n";
  }
  for (double t : p.y.ticks) {
    const double y = tr.py(t);
    svg += "<line x1=\"" + area_x + "\" y1=\"" + fmt(y) + "\" x2=\"" +
           fmt(tr.px0 + tr.px_span) + "\" y2=\"" + fmt(y) +
           "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt(kMarginLeft - 8.0) + "\" y=\"" + fmt(y + 3.5) +
           "\" font-size=\"11\" text-anchor=\"end\">" + fmt_tick(t) + "</text>\n";
  }

  // Data elements, clipped to the axes box.
  svg += "<g clip-path=\"url(#plotarea)\">\n";
  for (const auto& b : p.bands) {
    if (b.upper.empty() || b.lower.empty()) continue;
    std::string pts = polyline_points(tr, b.upper);
    for (auto it = b.lower.rbegin(); it != b.lower.rend(); ++it)
      pts += ' ' + fmt(tr.px(it->x)) + ',' + fmt(tr.py(it->y));
    svg += "<polygon points=\"" + pts + "\" fill=\"" + b.color +
           "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
  }
  for (const auto& l : p.lines) {
    svg += "<polyline points=\"" + polyline_points(tr, l.points) + "\" fill=\"none\" stroke=\"" +
           l.color + "\" stroke-width=\"1.5\"";
    if (l.dashed) svg += " stroke-dasharray=\"7 4\"";
    if (l.dotted) svg += " stroke-dasharray=\"2 3\"";
    svg += "/>\n";
  }
  for (const auto& s : p.series)
    for (const auto& pt : s.points) emit_marker(svg, s.marker, tr.px(pt.x), tr.py(pt.y), s.color);
  svg += "</g>\n";

  // Axes box and labels.
  svg += "<rect x=\"" + area_x + "\" y=\"" + area_y + "\" width=\"" + area_w + "\" height=\"" +
         area_h + "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg += "<text x=\"" + fmt(p.width / 2.0) + "\" y=\"22\" font-size=\"14\" text-anchor=\"middle\">" +
         escape(p.title) + "</text>\n";
  svg += "<text x=\"" + fmt(kMarginLeft + (p.width - kMarginLeft - kMarginRight) / 2.0) +
         "\" y=\"" + fmt(p.height - 14.0) + "\" font-size=\"12\" text-anchor=\"middle\">" +
         escape(p.x.label) + "</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt(kMarginTop + (p.height - kMarginTop - kMarginBottom) / 2.0) +
         "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fmt(kMarginTop + (p.height - kMarginTop - kMarginBottom) / 2.0) + ")\">" +
         escape(p.y.label) + "</text>\n";

  // Legend: labeled series then labeled lines, top left of the plot area.
  double ly = kMarginTop + 16.0;
  const double lx = kMarginLeft + 12.0;
  for (const auto& s : p.series) {
    if (s.label.empty()) continue;
    emit_marker(svg, s.marker, lx, ly - 3.5, s.color);
    svg += "<text x=\"" + fmt(lx + 10.0) + "\" y=\"" + fmt(ly) + "\" font-size=\"11\">" +
           escape(s.label) + "</text>\n";
    ly += 15.0;
  }
  for (const auto& l : p.lines) {
    if (l.label.empty()) continue;
    svg += "<line x1=\"" + fmt(lx - 5.0) + "\" y1=\"" + fmt(ly - 3.5) + "\" x2=\"" +
           fmt(lx + 7.0) + "\" y2=\"" + fmt(ly - 3.5) + "\" stroke=\"" + l.color +
           "\" stroke-width=\"1.5\"";
    if (l.dashed) svg += " stroke-dasharray=\"7 4\"";
    if (l.dotted) svg += " stroke-dasharray=\"2 3\"";
    svg += "/>\n";
    svg += "<text x=\"" + fmt(lx + 10.0) + "\" y=\"" + fmt(ly) + "\" font-size=\"11\">" +
           escape(l.label) + "</text>\n";
    ly += 15.0;
  }

  svg += "</svg>\n";
  return svg;
}

Plot performance_compare_plot(const std::string& title, double chance,
                              std::vector<Series> series) {
  Plot p;
  p.title = title;
  p.x = {"accuracy on capture test set", 0.0, 1.0, false, {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}};
  p.y = {"accuracy on synthetic test set", 0.0, 1.0, false, {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}};
  p.series = std::move(series);

  Polyline vline;
  vline.color = "#000000";
  vline.points = {{chance, 0.0}, {chance, 1.0}};
  Polyline hline;
  hline.color = "#000000";
  hline.points = {{0.0, chance}, {1.0, chance}};
  // Equal-performance diagonal, clipped to the above-chance square.
  Polyline diag;
  diag.color = "#000000";
  diag.points = {{chance, chance}, {1.0, 1.0}};
  p.lines = {vline, hline, diag};
  return p;
}

Plot quantity_trend_plot(const std::string& title, double chance, const std::string& qty_label,
                         std::vector<Series> series, const std::vector<TrendOverlay>& trends,
                         double qty_lo, double qty_hi) {
  Plot p;
  p.title = title;
  p.x = {"accuracy on capture test set", 0.0, 1.0, false, {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}};
  p.y = {qty_label, qty_lo, qty_hi, true, decade_ticks(qty_lo, qty_hi)};
  p.series = std::move(series);

  Polyline vline;
  vline.color = "#000000";
  vline.points = {{chance, qty_lo}, {chance, qty_hi}};
  p.lines.push_back(vline);

  const double l0 = std::log10(std::max(qty_lo, 1e-12));
  const double l1 = std::log10(std::max(qty_hi, qty_lo * 10.0));
  constexpr int kSteps = 100;
  for (const auto& ov : trends) {
    Polyline center;
    center.label = ov.label;
    center.color = ov.color;
    center.dotted = ov.fit.kind == TrendKind::LogLogistic;
    Band band;
    band.color = ov.color;
    for (int i = 0; i <= kSteps; ++i) {
      const double q = std::pow(10.0, l0 + (l1 - l0) * i / kSteps);
      const double acc = trend_value(ov.fit, q);
      center.points.push_back({acc, q});
      if (ov.with_band && ov.fit.n > 2) {
        const double hw = prediction_halfwidth(ov.fit, q);
        if (ov.fit.kind == TrendKind::LogLinear) {
          band.upper.push_back({acc + hw, q});
          band.lower.push_back({acc - hw, q});
        } else {
          // The band lives in logit space; map its edges back to accuracy.
          const double yhat = std::log(acc / (1.0 - acc));
          band.upper.push_back({1.0 / (1.0 + std::exp(-(yhat + hw))), q});
          band.lower.push_back({1.0 / (1.0 + std::exp(-(yhat - hw))), q});
        }
      }
    }
    if (!band.upper.empty()) p.bands.push_back(std::move(band));
    p.lines.push_back(std::move(center));
  }
  return p;
}

const std::vector<std::string>& source_display_order() {
  static const std::vector<std::string> order = {"omega_c", "omega_ak", "omega_as", "omega_ss",
                                                 "omega_sk"};
  return order;
}

std::string source_color(const std::string& source) {
  static const std::map<std::string, std::string> colors = {
      {"omega_c", "#1f77b4"},  {"omega_ak", "#2ca02c"}, {"omega_as", "#9467bd"},
      {"omega_ss", "#d62728"}, {"omega_sk", "#ff7f0e"},
  };
  const auto it = colors.find(source);
  return it != colors.end() ? it->second : "#7f7f7f";
}

Marker source_marker(const std::string& source) {
  static const std::map<std::string, Marker> markers = {
      {"omega_c", Marker::Square},    {"omega_ak", Marker::Circle},
      {"omega_as", Marker::Diamond},  {"omega_ss", Marker::Triangle},
      {"omega_sk", Marker::Cross},
  };
  const auto it = markers.find(source);
  return it != markers.end() ? it->second : Marker::Circle;
}

}  // namespace sigtrain::report
