#include "stimtomo/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace stimtomo {

namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10 * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0, hi = 1;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

std::string tick_label(double v, double step) {
  const int digits = std::max(0, static_cast<int>(-std::floor(std::log10(step) + 1e-9)));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, std::abs(v) < 1e-12 * step ? 0.0 : v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

}  // namespace

std::string render_svg(const Plot& plot) {
  Range xr, yr;
  for (const auto& s : plot.series)
    for (const auto& p : s.points) {
      xr.add(p.x);
      yr.add(p.y);
    }
  xr.finish();
  yr.finish();
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(plot.title) << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
     << ph << "\" fill=\"none\" stroke=\"black\"/>\n";

  const double xs = nice_step(xr.hi - xr.lo), ys = nice_step(yr.hi - yr.lo);
  for (double t = std::ceil(xr.lo / xs) * xs; t <= xr.hi + 1e-12; t += xs) {
    os << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << kTop + ph << "\" x2=\"" << num(sx(t))
       << "\" y2=\"" << kTop + ph + 5 << "\" stroke=\"black\"/>";
    os << "<text x=\"" << num(sx(t)) << "\" y=\"" << kTop + ph + 18
       << "\" text-anchor=\"middle\">" << tick_label(t, xs) << "</text>\n";
  }
  for (double t = std::ceil(yr.lo / ys) * ys; t <= yr.hi + 1e-12; t += ys) {
    os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(sy(t)) << "\" x2=\"" << kLeft
       << "\" y2=\"" << num(sy(t)) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(sy(t) + 4)
       << "\" text-anchor=\"end\">" << tick_label(t, ys) << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 18
     << "\" text-anchor=\"middle\">" << escape(plot.x_label) << "</text>\n";
  os << "<text transform=\"translate(18," << kTop + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape(plot.y_label) << "</text>\n";

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const std::string color = s.color.empty() ? kPalette[k % 5] : s.color;
    if (s.line) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& p : s.points)
        if (std::isfinite(p.x) && std::isfinite(p.y)) os << num(sx(p.x)) << ',' << num(sy(p.y)) << ' ';
      os << "\"/>\n";
    } else {
      for (const auto& p : s.points)
        if (std::isfinite(p.x) && std::isfinite(p.y))
          os << "<circle cx=\"" << num(sx(p.x)) << "\" cy=\"" << num(sy(p.y))
             << "\" r=\"3.5\" fill=\"none\" stroke=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 14 + 16 * static_cast<double>(k);
    os << "<rect x=\"" << kLeft + 10 << "\" y=\"" << ly - 8 << "\" width=\"12\" height=\"3\" fill=\""
       << color << "\"/><text x=\"" << kLeft + 28 << "\" y=\"" << ly << "\">" << escape(s.name)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

Plot report_plot(const ExperimentReport& r) {
  Plot p;
  if (r.name == "concurrence_sweep") {
    p.title = "Concurrence versus |alpha|^2";
    p.x_label = "|alpha|^2";
    p.y_label = "concurrence";
    PlotSeries q{"QST", {}, false, ""}, s{"SET", {}, false, ""};
    for (const auto& pt : r.points) {
      if (pt.qst) q.points.push_back({pt.value, pt.qst->concurrence});
      if (pt.set) s.points.push_back({pt.value, pt.set->concurrence});
    }
    p.series = {q, s, {"2 sqrt(a(1-a))", r.curve, true, "#555555"}};
  } else if (r.name == "purity_sweep") {
    p.title = "Purity from SET versus QST";
    p.x_label = "QST purity";
    p.y_label = "SET purity";
    PlotSeries s{"points", {}, false, ""};
    for (const auto& pt : r.points)
      if (pt.qst && pt.set) s.points.push_back({pt.qst->purity, pt.set->purity});
    p.series = {s, {"y = x", r.curve, true, "#555555"}};
  } else if (r.name == "angle_scan") {
    p.title = "HH-VV phase versus seed angle";
    p.x_label = "seed angle (mrad)";
    p.y_label = "phase (rad) / normalised envelope";
    PlotSeries ph{"SET phase", {}, false, ""}, env{"envelope (normalised)", {}, false, ""};
    double emax = 0.0;
    for (const auto& pt : r.points) emax = std::max(emax, pt.extra.count("envelope") ? pt.extra.at("envelope") : 0.0);
    for (const auto& pt : r.points) {
      if (auto it = pt.extra.find("unwrapped_phase"); it != pt.extra.end())
        ph.points.push_back({pt.value, it->second});
      if (auto it = pt.extra.find("envelope"); it != pt.extra.end() && emax > 0)
        env.points.push_back({pt.value, it->second / emax});
    }
    p.series = {ph, {"linear fit", r.curve, true, "#555555"}, env};
  } else {
    p.title = r.name;
    p.x_label = r.parameter;
    p.y_label = "concurrence";
    PlotSeries q{"QST", {}, false, ""}, s{"SET", {}, false, ""};
    for (const auto& pt : r.points) {
      if (pt.qst) q.points.push_back({pt.value, pt.qst->concurrence});
      if (pt.set) s.points.push_back({pt.value, pt.set->concurrence});
    }
    p.series = {q, s};
  }
  return p;
}

}  // namespace stimtomo
