#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "msmooth/svg_plot.hpp"

namespace msmooth {

namespace {

constexpr double kW = 960.0, kH = 540.0;
constexpr double kML = 70.0, kMR = 20.0, kMT = 40.0, kMB = 50.0;

std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fg(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// A tick spacing of 1/2/5 * 10^k that yields a handful of labels.
double nice_step(double span) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  if (r < 1.5) return mag;
  if (r < 3.5) return 2.0 * mag;
  if (r < 7.5) return 5.0 * mag;
  return 10.0 * mag;
}

struct Mapper {
  double x0, x1, y0, y1;
  double px(double x) const { return kML + (x - x0) / (x1 - x0) * (kW - kML - kMR); }
  double py(double y) const { return kH - kMB - (y - y0) / (y1 - y0) * (kH - kMT - kMB); }
};

double total_cmd_mw(const StepRecord& r) {
  return std::accumulate(r.command_mw.begin(), r.command_mw.end(), 0.0);
}

template <typename Get>
void polyline(std::ostringstream& s, const Mapper& m,
              const std::vector<StepRecord>& recs, const char* color,
              const char* dash, Get get) {
  s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
  if (dash) s << " stroke-dasharray=\"" << dash << "\"";
  s << " points=\"";
  for (const StepRecord& r : recs)
    s << f2(m.px(r.t)) << ',' << f2(m.py(get(r))) << ' ';
  s << "\"/>\n";
}

}  // namespace

std::string render_power_svg(const std::vector<StepRecord>& records,
                             const std::vector<StepRecord>* baseline) {
  double t_min = 0.0, t_max = 1.0, y_min = 0.0, y_max = 1.0;
  bool first = true;
  auto widen = [&](double t, double y) {
    if (first) {
      t_min = t_max = t;
      y_min = y_max = y;
      first = false;
    } else {
      t_min = std::min(t_min, t);
      t_max = std::max(t_max, t);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  };
  for (const StepRecord& r : records) {
    widen(r.t, r.farm_mw);
    widen(r.t, total_cmd_mw(r));
  }
  if (baseline)
    for (const StepRecord& r : *baseline) widen(r.t, r.farm_mw);
  if (t_max <= t_min) t_max = t_min + 1.0;
  const double pad = std::max((y_max - y_min) * 0.06, 0.1);
  y_min -= pad;
  y_max += pad;

  const Mapper m{t_min, t_max, y_min, y_max};
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
    << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n";
  s << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";

  s << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
  const double xs = nice_step(t_max - t_min);
  for (double x = std::ceil(t_min / xs) * xs; x <= t_max + 1e-9; x += xs) {
    s << "<line x1=\"" << f2(m.px(x)) << "\" y1=\"" << f2(kH - kMB)
      << "\" x2=\"" << f2(m.px(x)) << "\" y2=\"" << f2(kMT)
      << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"" << f2(m.px(x)) << "\" y=\"" << f2(kH - kMB + 18)
      << "\" text-anchor=\"middle\">" << fg(x) << "</text>\n";
  }
  const double ys = nice_step(y_max - y_min);
  for (double y = std::ceil(y_min / ys) * ys; y <= y_max + 1e-9; y += ys) {
    s << "<line x1=\"" << f2(kML) << "\" y1=\"" << f2(m.py(y)) << "\" x2=\""
      << f2(kW - kMR) << "\" y2=\"" << f2(m.py(y)) << "\" stroke=\"#ddd\"/>\n";
    s << "<text x=\"" << f2(kML - 8) << "\" y=\"" << f2(m.py(y) + 4)
      << "\" text-anchor=\"end\">" << fg(y) << "</text>\n";
  }
  s << "<text x=\"" << f2((kML + kW - kMR) / 2) << "\" y=\"" << f2(kH - 12)
    << "\" text-anchor=\"middle\">time (s)</text>\n";
  s << "<text x=\"18\" y=\"" << f2((kMT + kH - kMB) / 2)
    << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << f2((kMT + kH - kMB) / 2) << ")\">power (MW)</text>\n";
  s << "</g>\n";

  s << "<line x1=\"" << f2(kML) << "\" y1=\"" << f2(kH - kMB) << "\" x2=\""
    << f2(kW - kMR) << "\" y2=\"" << f2(kH - kMB) << "\" stroke=\"#333\"/>\n";
  s << "<line x1=\"" << f2(kML) << "\" y1=\"" << f2(kH - kMB) << "\" x2=\""
    << f2(kML) << "\" y2=\"" << f2(kMT) << "\" stroke=\"#333\"/>\n";

  if (baseline)
    polyline(s, m, *baseline, "#bbbbbb", nullptr,
             [](const StepRecord& r) { return r.farm_mw; });
  polyline(s, m, records, "#d62728", "6 4", total_cmd_mw);
  polyline(s, m, records, "#1f77b4", nullptr,
           [](const StepRecord& r) { return r.farm_mw; });

  double lx = kML + 12, ly = kMT + 6;
  auto legend = [&](const char* color, const char* label) {
    s << "<line x1=\"" << f2(lx) << "\" y1=\"" << f2(ly + 4) << "\" x2=\""
      << f2(lx + 26) << "\" y2=\"" << f2(ly + 4) << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << f2(lx + 32) << "\" y=\"" << f2(ly + 8)
      << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">" << label
      << "</text>\n";
    ly += 18;
  };
  legend("#1f77b4", "farm output");
  legend("#d62728", "farm command");
  if (baseline) legend("#bbbbbb", "baseline output");

  s << "</svg>\n";
  return s.str();
}

}  // namespace msmooth
