#pragma once

// CSV tables and small standalone SVG plots for the benchmark reports.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ellipose/evaluation.hpp"
#include "ellipose/registration2d.hpp"

namespace ellipose {

// 17 significant digits: doubles survive a text round trip.
inline std::string FormatNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string RegistrationTrialsCsv(const RegistrationReport& r) {
  std::string out = "metric,trial,pos_err_px,rot_err_deg,converged,failed,rotation_observable\n";
  for (const TrialRecord& t : r.trials) {
    out += std::string(MetricName(t.metric)) + "," + std::to_string(t.trial) + "," +
           FormatNumber(t.pos_err_px) + "," + FormatNumber(t.rot_err_deg) + "," +
           (t.converged ? "1" : "0") + "," + (t.failed ? "1" : "0") + "," +
           (t.rotation_observable ? "1" : "0") + "\n";
  }
  return out;
}

inline std::string RegistrationSummaryCsv(const RegistrationReport& r) {
  std::string out = "metric,noise,trials,mean_pos_err_px,mean_rot_err_deg,rotation_trials,failures\n";
  for (const MetricSummary& s : r.summaries) {
    out += std::string(MetricName(s.metric)) + "," + (r.config.noise.enabled ? "1" : "0") + "," +
           std::to_string(s.trials) + "," + FormatNumber(s.mean_pos_err_px) + "," +
           FormatNumber(s.mean_rot_err_deg) + "," + std::to_string(s.rotation_trials) + "," +
           std::to_string(s.failures) + "\n";
  }
  return out;
}

inline std::string EvalFramesCsv(const EvalReport& r) {
  std::string out = "frame_id,n_objects,estimated,position_error_m,orientation_error_deg\n";
  for (const FrameError& f : r.frames) {
    out += f.frame_id + "," + std::to_string(f.n_objects) + "," + (f.estimated ? "1" : "0") + "," +
           FormatNumber(f.position_error) + "," + FormatNumber(f.orientation_error_deg) + "\n";
  }
  return out;
}

// One row per threshold index: position threshold, overall fraction, one
// column per object-count group, then the orientation curve.
inline std::string EvalCurvesCsv(const EvalReport& r) {
  std::string out = "position_threshold_m,position_fraction";
  for (const auto& [key, curve] : r.position_by_count) {
    out += ",position_fraction_objects_" + GroupName(key, r.options.max_group);
  }
  out += ",orientation_threshold_deg,orientation_fraction\n";
  for (size_t i = 0; i < r.position_curve.thresholds.size(); ++i) {
    out += FormatNumber(r.position_curve.thresholds[i]) + "," +
           FormatNumber(r.position_curve.fractions[i]);
    for (const auto& [key, curve] : r.position_by_count) out += "," + FormatNumber(curve.fractions[i]);
    out += "," + FormatNumber(r.orientation_curve.thresholds[i]) + "," +
           FormatNumber(r.orientation_curve.fractions[i]) + "\n";
  }
  return out;
}

// ---- SVG ----

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline const char* SeriesColor(size_t i) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#17becf"};
  return kColors[i % 9];
}

inline std::string EscapeXml(const std::string& s) {
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

inline std::string Fixed(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

constexpr double kPlotW = 640.0;
constexpr double kPlotH = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

inline std::string SvgOpen(const std::string& title) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + Fixed(kPlotW, 0) + "\" height=\"" +
         Fixed(kPlotH, 0) + "\" font-family=\"sans-serif\" font-size=\"12\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + "<text x=\"" +
         Fixed(kPlotW / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         EscapeXml(title) + "</text>\n";
}

inline std::string Legend(const std::vector<std::string>& names) {
  std::string out;
  const double x = kPlotW - kRight + 15.0;
  for (size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 10.0 + 18.0 * static_cast<double>(i);
    out += "<line x1=\"" + Fixed(x) + "\" y1=\"" + Fixed(y) + "\" x2=\"" + Fixed(x + 20) +
           "\" y2=\"" + Fixed(y) + "\" stroke=\"" + SeriesColor(i) + "\" stroke-width=\"3\"/>\n";
    out += "<text x=\"" + Fixed(x + 26) + "\" y=\"" + Fixed(y + 4) + "\">" + EscapeXml(names[i]) +
           "</text>\n";
  }
  return out;
}

}  // namespace detail

// Line plot with linear axes starting at zero.
inline std::string LinePlotSvg(const std::string& title, const std::string& x_label,
                               const std::string& y_label, const std::vector<PlotSeries>& series,
                               double y_max = 1.0) {
  using namespace detail;
  double x_max = 0.0;
  for (const PlotSeries& s : series) {
    for (double v : s.x) x_max = std::max(x_max, v);
  }
  if (!(x_max > 0.0)) x_max = 1.0;
  const double w = kPlotW - kLeft - kRight;
  const double h = kPlotH - kTop - kBottom;
  auto px = [&](double v) { return kLeft + w * v / x_max; };
  auto py = [&](double v) { return kTop + h * (1.0 - std::clamp(v / y_max, 0.0, 1.0)); };

  std::string out = SvgOpen(title);
  for (int i = 0; i <= 5; ++i) {
    const double fx = x_max * i / 5.0;
    const double fy = y_max * i / 5.0;
    out += "<line x1=\"" + Fixed(px(fx)) + "\" y1=\"" + Fixed(kTop) + "\" x2=\"" + Fixed(px(fx)) +
           "\" y2=\"" + Fixed(kTop + h) + "\" stroke=\"#ddd\"/>\n";
    out += "<line x1=\"" + Fixed(kLeft) + "\" y1=\"" + Fixed(py(fy)) + "\" x2=\"" +
           Fixed(kLeft + w) + "\" y2=\"" + Fixed(py(fy)) + "\" stroke=\"#ddd\"/>\n";
    out += "<text x=\"" + Fixed(px(fx)) + "\" y=\"" + Fixed(kTop + h + 16) +
           "\" text-anchor=\"middle\">" + Fixed(fx, 3) + "</text>\n";
    out += "<text x=\"" + Fixed(kLeft - 6) + "\" y=\"" + Fixed(py(fy) + 4) +
           "\" text-anchor=\"end\">" + Fixed(fy, 2) + "</text>\n";
  }
  out += "<rect x=\"" + Fixed(kLeft) + "\" y=\"" + Fixed(kTop) + "\" width=\"" + Fixed(w) +
         "\" height=\"" + Fixed(h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  out += "<text x=\"" + Fixed(kLeft + w / 2) + "\" y=\"" + Fixed(kPlotH - 12) +
         "\" text-anchor=\"middle\">" + EscapeXml(x_label) + "</text>\n";
  out += "<text transform=\"translate(18," + Fixed(kTop + h / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + EscapeXml(y_label) + "</text>\n";
  std::vector<std::string> names;
  for (size_t i = 0; i < series.size(); ++i) {
    const PlotSeries& s = series[i];
    names.push_back(s.name);
    std::string pts;
    for (size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      pts += Fixed(px(s.x[k])) + "," + Fixed(py(s.y[k])) + " ";
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(SeriesColor(i)) +
           "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
  }
  out += Legend(names);
  out += "</svg>\n";
  return out;
}

// Grouped bars on a log10 axis; one group per category, one bar per series.
inline std::string LogBarPlotSvg(const std::string& title, const std::string& y_label,
                                 const std::vector<std::string>& categories,
                                 const std::vector<PlotSeries>& series) {
  using namespace detail;
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (const PlotSeries& s : series) {
    for (double v : s.y) {
      if (!(v > 0.0) || !std::isfinite(v)) continue;
      const double l = std::log10(v);
      lo = any ? std::min(lo, l) : l;
      hi = any ? std::max(hi, l) : l;
      any = true;
    }
  }
  lo = std::floor(any ? lo : -1.0);
  hi = std::ceil(any ? hi : 1.0);
  if (hi <= lo) hi = lo + 1.0;
  const double w = kPlotW - kLeft - kRight;
  const double h = kPlotH - kTop - kBottom;
  auto py = [&](double v) {
    const double l = v > 0.0 ? std::clamp(std::log10(v), lo, hi) : lo;
    return kTop + h * (1.0 - (l - lo) / (hi - lo));
  };

  std::string out = SvgOpen(title);
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); ++e) {
    const double y = py(std::pow(10.0, e));
    out += "<line x1=\"" + Fixed(kLeft) + "\" y1=\"" + Fixed(y) + "\" x2=\"" + Fixed(kLeft + w) +
           "\" y2=\"" + Fixed(y) + "\" stroke=\"#ddd\"/>\n";
    out += "<text x=\"" + Fixed(kLeft - 6) + "\" y=\"" + Fixed(y + 4) +
           "\" text-anchor=\"end\">1e" + std::to_string(e) + "</text>\n";
  }
  const double group_w = w / static_cast<double>(std::max<size_t>(1, categories.size()));
  const double bar_w = 0.8 * group_w / static_cast<double>(std::max<size_t>(1, series.size()));
  for (size_t c = 0; c < categories.size(); ++c) {
    const double gx = kLeft + group_w * static_cast<double>(c) + 0.1 * group_w;
    for (size_t s = 0; s < series.size(); ++s) {
      if (c >= series[s].y.size()) continue;
      const double y = py(series[s].y[c]);
      out += "<rect x=\"" + Fixed(gx + bar_w * static_cast<double>(s)) + "\" y=\"" + Fixed(y) +
             "\" width=\"" + Fixed(bar_w) + "\" height=\"" + Fixed(kTop + h - y) + "\" fill=\"" +
             SeriesColor(s) + "\"/>\n";
    }
    out += "<text x=\"" + Fixed(gx + 0.4 * group_w) + "\" y=\"" + Fixed(kTop + h + 16) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + EscapeXml(categories[c]) + "</text>\n";
  }
  out += "<rect x=\"" + Fixed(kLeft) + "\" y=\"" + Fixed(kTop) + "\" width=\"" + Fixed(w) +
         "\" height=\"" + Fixed(h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  out += "<text transform=\"translate(18," + Fixed(kTop + h / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + EscapeXml(y_label) + "</text>\n";
  std::vector<std::string> names;
  for (const PlotSeries& s : series) names.push_back(s.name);
  out += Legend(names);
  out += "</svg>\n";
  return out;
}

inline std::string RegistrationSvg(const RegistrationReport& r) {
  std::vector<std::string> categories;
  PlotSeries pos{"position (px)", {}, {}};
  PlotSeries rot{"rotation (deg)", {}, {}};
  for (const MetricSummary& s : r.summaries) {
    categories.emplace_back(MetricName(s.metric));
    pos.y.push_back(s.mean_pos_err_px);
    rot.y.push_back(s.mean_rot_err_deg);
  }
  const std::string title = std::string("2D registration, ") + std::to_string(r.config.n_trials) +
                            " trials, noise " + (r.config.noise.enabled ? "on" : "off");
  return LogBarPlotSvg(title, "mean error", categories, {pos, rot});
}

inline std::string EvalPositionSvg(const EvalReport& r, const std::string& title) {
  std::vector<PlotSeries> series;
  series.push_back({"all", r.position_curve.thresholds, r.position_curve.fractions});
  for (const auto& [key, curve] : r.position_by_count) {
    series.push_back({GroupName(key, r.options.max_group) + " objects (" +
                          std::to_string(r.frames_by_count.at(key)) + ")",
                      curve.thresholds, curve.fractions});
  }
  return LinePlotSvg(title, "position error threshold (m)", "localized fraction", series);
}

inline std::string EvalOrientationSvg(const EvalReport& r, const std::string& title) {
  return LinePlotSvg(title, "orientation error threshold (deg)", "localized fraction",
                     {{"all", r.orientation_curve.thresholds, r.orientation_curve.fractions}});
}

}  // namespace ellipose
