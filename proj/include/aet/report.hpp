#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "aet/sensitivity.hpp"

namespace aet::plot {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> pts;
  bool dashed = false;
  std::string color = "#1f77b4";
};

struct Band {
  std::string name;
  std::vector<std::tuple<double, double, double>> pts;  // (x, lo, hi)
  std::string color = "#1f77b4";
};

struct Marker {
  double x = 0.0;
  double y = 0.0;
  std::string label;
};

struct HLine {
  double y = 0.0;
  std::string label;
};

struct VSpan {
  double x0 = 0.0;
  double x1 = 0.0;
  std::string label;
};

// One log-log figure: cumulative curves, ratio curve, or envelope bands.
struct Figure {
  std::string kind;
  std::string title;
  std::string xlabel = "deployed instances N";
  std::string ylabel;
  std::vector<Series> series;
  std::vector<Band> bands;
  std::vector<Marker> markers;
  std::vector<HLine> hlines;
  std::optional<VSpan> vspan;
};

// Scientific notation with 3 significant digits ("4.56e+03"); infinities
// render as "infinity".
std::string sci3(double v);

nlohmann::json figure_data(const Figure& fig);
void write_svg(std::ostream& os, const Figure& fig);

// Figure builders for the three report kinds.
struct BaselineLine {
  std::string name;
  double e_base = 0.0;
};

Figure make_curves_figure(double e_train, double e_nn,
                          const std::vector<BaselineLine>& baselines, const Scenario& sc,
                          bool feasible = true);
Figure make_ratio_figure(double e_train, double e_nn, double e_base, const Scenario& sc,
                         bool feasible = true);
Figure make_envelope_figure(const EnvelopeResult& env, const Scenario& sc);

}  // namespace aet::plot
