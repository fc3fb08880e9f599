#include "aet/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "aet/asymptotics.hpp"

namespace aet::plot {
namespace {

std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

struct Extent {
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  bool any = false;
  void add_x(double x) {
    if (!(x > 0)) return;
    if (!any || x < xmin) xmin = x;
    if (!any || x > xmax) xmax = x;
    any = true;  // y untouched until add_y; callers always add both
  }
  void add(double x, double y) {
    if (!(x > 0) || !(y > 0)) return;
    if (!any) {
      xmin = xmax = x;
      ymin = ymax = y;
      any = true;
      return;
    }
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
};

}  // namespace

std::string sci3(double v) {
  if (std::isinf(v)) return "infinity";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2e", v);
  return buf;
}

nlohmann::json figure_data(const Figure& fig) {
  nlohmann::json j;
  j["kind"] = fig.kind;
  j["title"] = fig.title;
  j["xlabel"] = fig.xlabel;
  j["ylabel"] = fig.ylabel;
  j["series"] = nlohmann::json::array();
  for (const auto& s : fig.series) {
    nlohmann::json js;
    js["name"] = s.name;
    js["dashed"] = s.dashed;
    js["points"] = nlohmann::json::array();
    for (const auto& [x, y] : s.pts) js["points"].push_back({x, y});
    j["series"].push_back(std::move(js));
  }
  j["bands"] = nlohmann::json::array();
  for (const auto& b : fig.bands) {
    nlohmann::json jb;
    jb["name"] = b.name;
    jb["points"] = nlohmann::json::array();
    for (const auto& [x, lo, hi] : b.pts) jb["points"].push_back({x, lo, hi});
    j["bands"].push_back(std::move(jb));
  }
  j["markers"] = nlohmann::json::array();
  for (const auto& m : fig.markers)
    j["markers"].push_back({{"x", m.x}, {"y", m.y}, {"label", m.label}});
  j["hlines"] = nlohmann::json::array();
  for (const auto& h : fig.hlines) j["hlines"].push_back({{"y", h.y}, {"label", h.label}});
  if (fig.vspan)
    j["vspan"] = {{"x0", fig.vspan->x0}, {"x1", fig.vspan->x1}, {"label", fig.vspan->label}};
  else
    j["vspan"] = nullptr;
  return j;
}

void write_svg(std::ostream& os, const Figure& fig) {
  const double W = 860, H = 560, L = 70, R = 24, T = 46, B = 54;

  Extent ext;
  for (const auto& s : fig.series)
    for (const auto& [x, y] : s.pts) ext.add(x, y);
  for (const auto& b : fig.bands)
    for (const auto& [x, lo, hi] : b.pts) {
      ext.add(x, lo);
      ext.add(x, hi);
    }
  for (const auto& m : fig.markers) ext.add(m.x, m.y);
  for (const auto& h : fig.hlines)
    if (ext.any && h.y > 0) {
      ext.ymin = std::min(ext.ymin, h.y);
      ext.ymax = std::max(ext.ymax, h.y);
    }
  if (!ext.any) {
    ext = Extent{1, 10, 1, 10, true};
  }

  const double lx0 = std::floor(std::log10(ext.xmin));
  const double lx1 = std::ceil(std::log10(ext.xmax) - 1e-12);
  const double ly0 = std::floor(std::log10(ext.ymin));
  const double ly1 = std::ceil(std::log10(ext.ymax) - 1e-12);
  const double sx = (W - L - R) / std::max(lx1 - lx0, 1e-9);
  const double sy = (H - T - B) / std::max(ly1 - ly0, 1e-9);
  auto X = [&](double x) { return L + (std::log10(x) - lx0) * sx; };
  auto Y = [&](double y) { return H - B - (std::log10(y) - ly0) * sy; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<!-- aet 0.1.0 -->\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\" "
        "font-family=\"sans-serif\">"
     << xml_escape(fig.title) << "</text>\n";

  // decade gridlines
  for (int k = int(lx0); k <= int(lx1); ++k) {
    const double px = L + (k - lx0) * sx;
    os << "<line x1=\"" << px << "\" y1=\"" << T << "\" x2=\"" << px << "\" y2=\"" << H - B
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << px << "\" y=\"" << H - B + 18
       << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">1e" << k
       << "</text>\n";
  }
  for (int k = int(ly0); k <= int(ly1); ++k) {
    const double py = H - B - (k - ly0) * sy;
    os << "<line x1=\"" << L << "\" y1=\"" << py << "\" x2=\"" << W - R << "\" y2=\"" << py
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << py + 4
       << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">1e" << k
       << "</text>\n";
  }
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
     << H - T - B << "\" fill=\"none\" stroke=\"#444\"/>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 14
     << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">"
     << xml_escape(fig.xlabel) << "</text>\n";
  os << "<text x=\"18\" y=\"" << (T + H - B) / 2
     << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
        "transform=\"rotate(-90 18 "
     << (T + H - B) / 2 << ")\">" << xml_escape(fig.ylabel) << "</text>\n";

  if (fig.vspan) {
    const double x0 = X(fig.vspan->x0), x1 = X(fig.vspan->x1);
    os << "<rect x=\"" << x0 << "\" y=\"" << T << "\" width=\"" << std::max(x1 - x0, 1.0)
       << "\" height=\"" << H - T - B
       << "\" fill=\"#888\" fill-opacity=\"0.30\" data-x0=\"" << fmt_g17(fig.vspan->x0)
       << "\" data-x1=\"" << fmt_g17(fig.vspan->x1) << "\"/>\n";
    os << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << T + 16
       << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
       << xml_escape(fig.vspan->label) << "</text>\n";
  }

  for (const auto& b : fig.bands) {
    os << "<polygon fill=\"" << b.color << "\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
    for (const auto& [x, lo, hi] : b.pts) {
      (void)hi;
      if (x > 0 && lo > 0) os << X(x) << "," << Y(lo) << " ";
    }
    for (auto it = b.pts.rbegin(); it != b.pts.rend(); ++it) {
      const auto& [x, lo, hi] = *it;
      (void)lo;
      if (x > 0 && hi > 0) os << X(x) << "," << Y(hi) << " ";
    }
    os << "\"/>\n";
  }

  for (const auto& h : fig.hlines) {
    if (!(h.y > 0)) continue;
    os << "<line x1=\"" << L << "\" y1=\"" << Y(h.y) << "\" x2=\"" << W - R << "\" y2=\""
       << Y(h.y) << "\" stroke=\"#777\" stroke-dasharray=\"2,3\" data-y=\"" << fmt_g17(h.y)
       << "\"/>\n";
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << Y(h.y) - 4
       << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
       << xml_escape(h.label) << "</text>\n";
  }

  for (const auto& s : fig.series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\"";
    if (s.dashed) os << " stroke-dasharray=\"6,4\"";
    os << " points=\"";
    for (const auto& [x, y] : s.pts)
      if (x > 0 && y > 0) os << X(x) << "," << Y(y) << " ";
    os << "\"><title>" << xml_escape(s.name) << "</title></polyline>\n";
  }

  for (const auto& m : fig.markers) {
    os << "<circle cx=\"" << X(m.x) << "\" cy=\"" << Y(m.y)
       << "\" r=\"4\" fill=\"#222\" data-x=\"" << fmt_g17(m.x) << "\" data-y=\""
       << fmt_g17(m.y) << "\"/>\n";
    os << "<text x=\"" << X(m.x) + 6 << "\" y=\"" << Y(m.y) - 6
       << "\" font-size=\"11\" font-family=\"sans-serif\">" << xml_escape(m.label)
       << "</text>\n";
  }

  // legend
  double ly = T + 14;
  for (const auto& s : fig.series) {
    os << "<line x1=\"" << L + 10 << "\" y1=\"" << ly << "\" x2=\"" << L + 34 << "\" y2=\""
       << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
       << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    os << "<text x=\"" << L + 40 << "\" y=\"" << ly + 4
       << "\" font-size=\"11\" font-family=\"sans-serif\">" << xml_escape(s.name)
       << "</text>\n";
    ly += 16;
  }
  for (const auto& b : fig.bands) {
    os << "<rect x=\"" << L + 10 << "\" y=\"" << ly - 6 << "\" width=\"24\" height=\"10\" fill=\""
       << b.color << "\" fill-opacity=\"0.25\"/>\n";
    os << "<text x=\"" << L + 40 << "\" y=\"" << ly + 4
       << "\" font-size=\"11\" font-family=\"sans-serif\">" << xml_escape(b.name)
       << "</text>\n";
    ly += 16;
  }
  os << "</svg>\n";
}

Figure make_curves_figure(double e_train, double e_nn,
                          const std::vector<BaselineLine>& baselines, const Scenario& sc,
                          bool feasible) {
  sc.validate();
  Figure fig;
  fig.kind = "curves";
  fig.title = "Cumulative energy vs deployed instances";
  fig.ylabel = "cumulative " + to_string(sc.unit);
  const auto ns = log_spaced(sc.n_min, sc.n_max, sc.n_points);

  Series nn_series;
  nn_series.name = feasible ? "neural (train + inference)" : "neural (infeasible)";
  nn_series.dashed = !feasible;
  nn_series.color = "#1f77b4";
  for (double n : ns) nn_series.pts.emplace_back(n, cumulative_energy(n, e_train, e_nn, sc.pue));
  fig.series.push_back(std::move(nn_series));

  const char* base_colors[] = {"#d62728", "#ff7f0e", "#9467bd"};
  int ci = 0;
  for (const auto& b : baselines) {
    Series s;
    s.name = b.name;
    s.color = base_colors[ci++ % 3];
    for (double n : ns) s.pts.emplace_back(n, cumulative_energy(n, 0.0, b.e_base, sc.pue));
    fig.series.push_back(std::move(s));

    const Crossover c = compute_aet(e_train, b.e_base, e_nn, sc.epsilon_in_unit(), feasible);
    if (c.is_finite()) {
      Marker m;
      m.x = c.value();
      m.y = cumulative_energy(c.value(), 0.0, b.e_base, sc.pue);
      m.label = "AET = " + sci3(c.value());
      fig.markers.push_back(std::move(m));
    }
  }
  return fig;
}

Figure make_ratio_figure(double e_train, double e_nn, double e_base, const Scenario& sc,
                         bool feasible) {
  sc.validate();
  Figure fig;
  fig.kind = "ratio";
  fig.title = "Cumulative energy ratio (neural / baseline)";
  fig.ylabel = "ratio";
  Series s;
  s.name = feasible ? "ratio" : "ratio (infeasible)";
  s.dashed = !feasible;
  s.color = "#2ca02c";
  for (double n : log_spaced(sc.n_min, sc.n_max, sc.n_points))
    s.pts.emplace_back(n, ratio_at_n(n, e_train, e_nn, e_base, sc.pue));
  fig.series.push_back(std::move(s));

  const double limit = asymptotic_ratio(e_nn, e_base);
  fig.hlines.push_back({limit, "asymptote " + sci3(limit)});
  fig.hlines.push_back({1.0, ""});

  const Crossover c = compute_aet(e_train, e_base, e_nn, sc.epsilon_in_unit(), feasible);
  if (c.is_finite())
    fig.markers.push_back({c.value(), 1.0, "AET = " + sci3(c.value())});
  return fig;
}

Figure make_envelope_figure(const EnvelopeResult& env, const Scenario& sc) {
  Figure fig;
  fig.kind = "envelope";
  fig.title = "AET envelope";
  fig.ylabel = "cumulative " + to_string(sc.unit);

  Band nn_band;
  nn_band.name = "neural side";
  nn_band.color = "#1f77b4";
  for (const auto& p : env.nn_band) nn_band.pts.emplace_back(p.n, p.lo, p.hi);
  fig.bands.push_back(std::move(nn_band));

  Band base_band;
  base_band.name = "baseline side";
  base_band.color = "#d62728";
  for (const auto& p : env.base_band) base_band.pts.emplace_back(p.n, p.lo, p.hi);
  fig.bands.push_back(std::move(base_band));

  if (env.aet_interval) {
    VSpan span;
    span.x0 = env.aet_interval->first;
    span.x1 = env.aet_interval->second;
    span.label = "AET interval [" + sci3(span.x0) + ", " + sci3(span.x1) + "]";
    fig.vspan = span;
  } else {
    fig.title += " (interval: none)";
  }
  return fig;
}

}  // namespace aet::plot
