#include "vseg/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace vseg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<PlotSeries>& series) {
  const double W = 720, H = 480;
  const double ml = 70, mr = 160, mt = 40, mb = 55;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const PlotSeries& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!(xmin <= xmax)) {  // no points at all
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin) {
    xmax += 1;
    xmin -= 1;
  }
  if (ymax == ymin) {
    ymax += 1;
    ymin -= 1;
  }
  const double xpad = 0.04 * (xmax - xmin), ypad = 0.07 * (ymax - ymin);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("svg: cannot open '" + path + "'");
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  f << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  f << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
       "font-family=\"sans-serif\">" << title << "</text>\n";
  // axes
  f << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
    << H - mb << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
    << "\" stroke=\"black\"/>\n";
  // ticks
  const int nticks = 5;
  for (int i = 0; i <= nticks; ++i) {
    const double tx = xmin + (xmax - xmin) * i / nticks;
    const double ty = ymin + (ymax - ymin) * i / nticks;
    f << "<line x1=\"" << px(tx) << "\" y1=\"" << H - mb << "\" x2=\"" << px(tx) << "\" y2=\""
      << H - mb + 5 << "\" stroke=\"black\"/>\n";
    f << "<text x=\"" << px(tx) << "\" y=\"" << H - mb + 20
      << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(tx)
      << "</text>\n";
    f << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(ty) << "\" x2=\"" << ml << "\" y2=\""
      << py(ty) << "\" stroke=\"black\"/>\n";
    f << "<text x=\"" << ml - 8 << "\" y=\"" << py(ty) + 4
      << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(ty)
      << "</text>\n";
  }
  f << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
    << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << x_label
    << "</text>\n";
  f << "<text x=\"18\" y=\"" << (mt + H - mb) / 2
    << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
       "transform=\"rotate(-90 18 " << (mt + H - mb) / 2 << ")\">" << y_label << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const PlotSeries& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (s.line && s.points.size() > 1) {
      f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (const auto& [x, y] : s.points) f << px(x) << "," << py(y) << " ";
      f << "\"/>\n";
    }
    for (const auto& [x, y] : s.points)
      f << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3.5\" fill=\"" << color
        << "\"/>\n";
    const double ly = mt + 18 * static_cast<double>(si);
    f << "<rect x=\"" << W - mr + 12 << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" "
      << "fill=\"" << color << "\"/>\n";
    f << "<text x=\"" << W - mr + 30 << "\" y=\"" << ly + 10
      << "\" font-size=\"12\" font-family=\"sans-serif\">" << s.label << "</text>\n";
  }
  f << "</svg>\n";
}

}  // namespace vseg
