#include "util/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "util/error.hpp"

namespace owc {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<PlotSeries>& series) {
  require(!series.empty(), ErrorCode::InvalidParameter, "plot needs data");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  require(xmin <= xmax, ErrorCode::InvalidParameter, "plot needs points");
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  const double w = 640, h = 420, ml = 70, mr = 20, mt = 40, mb = 50;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='"
     << h << "' viewBox='0 0 " << w << " " << h << "'>\n";
  os << "<rect width='" << w << "' height='" << h << "' fill='white'/>\n";
  os << "<text x='" << w / 2 << "' y='24' text-anchor='middle' "
        "font-family='sans-serif' font-size='16'>" << title << "</text>\n";

  // axes
  os << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr
     << "' y2='" << h - mb << "' stroke='black'/>\n";
  os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='"
     << h - mb << "' stroke='black'/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 5.0;
    const double fy = ymin + (ymax - ymin) * i / 5.0;
    os << "<text x='" << px(fx) << "' y='" << h - mb + 18
       << "' text-anchor='middle' font-family='sans-serif' font-size='11'>"
       << num(fx) << "</text>\n";
    os << "<text x='" << ml - 6 << "' y='" << py(fy) + 4
       << "' text-anchor='end' font-family='sans-serif' font-size='11'>"
       << num(fy) << "</text>\n";
  }
  os << "<text x='" << (ml + w - mr) / 2 << "' y='" << h - 12
     << "' text-anchor='middle' font-family='sans-serif' font-size='13'>"
     << x_label << "</text>\n";
  os << "<text x='16' y='" << (mt + h - mb) / 2
     << "' text-anchor='middle' font-family='sans-serif' font-size='13' "
        "transform='rotate(-90 16 " << (mt + h - mb) / 2 << ")'>" << y_label
     << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % 6];
    os << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
    for (const auto& [x, y] : series[si].points)
      os << num(px(x)) << "," << num(py(y)) << " ";
    os << "'/>\n";
    os << "<text x='" << w - mr - 8 << "' y='" << mt + 16 + 16 * si
       << "' text-anchor='end' font-family='sans-serif' font-size='12' fill='"
       << color << "'>" << series[si].label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace owc
