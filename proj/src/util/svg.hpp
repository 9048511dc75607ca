#ifndef OWC_UTIL_SVG_HPP
#define OWC_UTIL_SVG_HPP

#include <string>
#include <utility>
#include <vector>

namespace owc {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Static line plot with axes, tick labels and a legend. Output bytes are a
// pure function of the inputs.
std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label,
                          const std::vector<PlotSeries>& series);

}  // namespace owc

#endif
