/*
 * Copyright 2026 The AcME Toolkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "acme/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string_view>
#include <vector>

namespace acme {
namespace {

constexpr std::string_view kClassPalette[] = {
    "#4E79A7", "#F28E2B", "#59A14F", "#E15759", "#76B7B2",
    "#EDC948", "#B07AA1", "#FF9DA7", "#9C755F", "#BAB0AC"};

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string Tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string Escape(std::string_view text) {
  std::string out;
  for (char c : text) {
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

// Maps data values onto the plotting band [left, width - right].
class Scale {
 public:
  Scale(double lo, double hi, const PlotLayout& layout) : layout_(layout) {
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo_ = lo - pad;
    hi_ = hi + pad;
  }
  double operator()(double v) const {
    const double band = layout_.width - layout_.left - layout_.right;
    return layout_.left + (v - lo_) / (hi_ - lo_) * band;
  }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  const PlotLayout& layout_;
  double lo_;
  double hi_;
};

std::string Header(const PlotLayout& layout, double height,
                   std::string_view title, std::string_view kind) {
  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + Num(layout.width) +
       "\" height=\"" + Num(height) + "\" viewBox=\"0 0 " + Num(layout.width) +
       " " + Num(height) + "\" data-plot=\"" + std::string(kind) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + Num(layout.width) + "\" height=\"" +
       Num(height) + "\" fill=\"#FFFFFF\"/>\n";
  s += "<text class=\"title\" x=\"" + Num(layout.width / 2) + "\" y=\"" +
       Num(layout.top / 2 + 6) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
       Escape(title) + "</text>\n";
  return s;
}

std::string Axis(const Scale& x, const PlotLayout& layout, double axis_y,
                 std::string_view label) {
  std::string s;
  s += "<g class=\"x-axis\">\n";
  s += "<line x1=\"" + Num(layout.left) + "\" y1=\"" + Num(axis_y) + "\" x2=\"" +
       Num(layout.width - layout.right) + "\" y2=\"" + Num(axis_y) +
       "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  constexpr int kTicks = 5;
  for (int i = 0; i < kTicks; ++i) {
    const double v = x.lo() + (x.hi() - x.lo()) * i / (kTicks - 1);
    const double px = x(v);
    s += "<line x1=\"" + Num(px) + "\" y1=\"" + Num(axis_y) + "\" x2=\"" +
         Num(px) + "\" y2=\"" + Num(axis_y + 5) +
         "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    s += "<text class=\"tick\" x=\"" + Num(px) + "\" y=\"" + Num(axis_y + 18) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
         Tick(v) + "</text>\n";
  }
  s += "<text class=\"axis-label\" x=\"" +
       Num((layout.left + layout.width - layout.right) / 2) + "\" y=\"" +
       Num(axis_y + 36) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
       Escape(label) + "</text>\n";
  s += "</g>\n";
  return s;
}

std::string ReferenceLine(double px, double y1, double y2) {
  return "<line class=\"reference\" x1=\"" + Num(px) + "\" y1=\"" + Num(y1) +
         "\" x2=\"" + Num(px) + "\" y2=\"" + Num(y2) +
         "\" stroke=\"#000000\" stroke-width=\"1.2\" stroke-dasharray=\"6 4\"/>\n";
}

struct Track {
  std::size_t feature;
  const FeatureEffect* effect;
  const std::vector<double>* values;  // x positions in data units
};

std::string EffectPlot(const Schema& schema,
                       std::span<const std::size_t> order,
                       std::span<const FeatureEffect> effects, bool local,
                       double reference, const std::vector<double>* obs_quantile,
                       const PlotLayout& layout) {
  const std::size_t p = order.size();
  const double height = layout.top + layout.track * static_cast<double>(p) + layout.bottom;
  double lo = reference;
  double hi = reference;
  for (const auto& e : effects) {
    const auto& values = local ? e.predictions : e.effects;
    for (double v : values) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const Scale x(lo, hi, layout);
  std::string s = Header(layout, height,
                         local ? "Local explanation: predictions over quantile probes"
                               : "Global explanation: standardized effects",
                         local ? "local-effects" : "global-effects");
  for (std::size_t k = 0; k < p; ++k) {
    const std::size_t j = order[k];
    const FeatureEffect& e = effects[j];
    const double cy = layout.top + layout.track * (static_cast<double>(k) + 0.5);
    s += "<g class=\"track\" data-feature=\"" + Escape(schema[j].name) +
         "\" data-rank=\"" + std::to_string(k) + "\">\n";
    s += "<line class=\"track-line\" x1=\"" + Num(layout.left) + "\" y1=\"" +
         Num(cy) + "\" x2=\"" + Num(layout.width - layout.right) + "\" y2=\"" +
         Num(cy) + "\" stroke=\"#DDDDDD\" stroke-width=\"1\"/>\n";
    s += "<text class=\"feature-label\" x=\"" + Num(layout.left - 8) + "\" y=\"" +
         Num(cy + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" +
         Escape(schema[j].name) + "</text>\n";
    const auto& values = local ? e.predictions : e.effects;
    for (std::size_t q = 0; q < values.size(); ++q) {
      if (!std::isfinite(values[q])) continue;
      const double level = q < e.quantile_levels.size() ? e.quantile_levels[q] : 0.0;
      s += "<circle class=\"probe\" cx=\"" + Num(x(values[q])) + "\" cy=\"" +
           Num(cy) + "\" r=\"4\" fill=\"" + QuantileColor(level) +
           "\" fill-opacity=\"0.85\"/>\n";
    }
    if (local && obs_quantile != nullptr) {
      s += "<circle class=\"observation\" cx=\"" + Num(x(reference)) +
           "\" cy=\"" + Num(cy) + "\" r=\"7\" fill=\"" +
           QuantileColor((*obs_quantile)[j]) +
           "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    }
    s += "</g>\n";
  }
  const double axis_y = layout.top + layout.track * static_cast<double>(p);
  s += ReferenceLine(x(reference), layout.top, axis_y);
  s += Axis(x, layout, axis_y, local ? "prediction" : "standardized effect");
  s += "</svg>\n";
  return s;
}

struct BarSegment {
  double value;
  std::string_view color;
  std::string label;  // class name, empty for single-series bars
};

std::string BarChart(const Schema& schema, std::span<const std::size_t> order,
                     const std::vector<std::vector<BarSegment>>& bars,
                     std::span<const std::string> legend,
                     const std::string& title, const PlotLayout& layout) {
  const std::size_t p = order.size();
  const double legend_rows = legend.empty() ? 0.0 : 1.0;
  const double height = layout.top + layout.track * (static_cast<double>(p) + legend_rows) +
                        layout.bottom;
  double hi = 0.0;
  for (const auto& segments : bars) {
    double total = 0.0;
    for (const auto& seg : segments) total += seg.value;
    hi = std::max(hi, total);
  }
  PlotLayout flush = layout;
  const Scale x(0.0, hi > 0.0 ? hi : 1.0, flush);
  std::string s = Header(layout, height, title,
                         legend.empty() ? "importance-bars" : "stacked-importance-bars");
  for (std::size_t k = 0; k < p; ++k) {
    const std::size_t j = order[k];
    const double y = layout.top + layout.track * static_cast<double>(k);
    s += "<g class=\"bar\" data-feature=\"" + Escape(schema[j].name) +
         "\" data-rank=\"" + std::to_string(k) + "\">\n";
    s += "<text class=\"feature-label\" x=\"" + Num(layout.left - 8) + "\" y=\"" +
         Num(y + layout.track / 2 + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" +
         Escape(schema[j].name) + "</text>\n";
    double start = 0.0;
    for (const auto& seg : bars[j]) {
      const double x0 = x(start);
      const double x1 = x(start + seg.value);
      s += "<rect class=\"bar-segment\"";
      if (!seg.label.empty()) s += " data-class=\"" + Escape(seg.label) + "\"";
      s += " x=\"" + Num(x0) + "\" y=\"" + Num(y + 5) + "\" width=\"" +
           Num(x1 - x0) + "\" height=\"" + Num(layout.track - 10) + "\" fill=\"" +
           std::string(seg.color) + "\"/>\n";
      start += seg.value;
    }
    s += "</g>\n";
  }
  const double axis_y = layout.top + layout.track * static_cast<double>(p);
  s += Axis(x, layout, axis_y, "importance");
  if (!legend.empty()) {
    s += "<g class=\"legend\">\n";
    double lx = layout.left;
    const double ly = axis_y + layout.bottom;
    for (std::size_t c = 0; c < legend.size(); ++c) {
      s += "<rect x=\"" + Num(lx) + "\" y=\"" + Num(ly) +
           "\" width=\"12\" height=\"12\" fill=\"" +
           std::string(kClassPalette[c % std::size(kClassPalette)]) + "\"/>\n";
      s += "<text x=\"" + Num(lx + 16) + "\" y=\"" + Num(ly + 11) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + Escape(legend[c]) +
           "</text>\n";
      lx += 20 + 7.0 * static_cast<double>(legend[c].size()) + 16;
    }
    s += "</g>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string SingleSeriesBars(const Schema& schema,
                             std::span<const std::size_t> order,
                             std::span<const FeatureEffect> effects,
                             const std::string& title, const PlotLayout& layout) {
  std::vector<std::vector<BarSegment>> bars(effects.size());
  for (std::size_t j = 0; j < effects.size(); ++j) {
    bars[j].push_back({effects[j].importance, "#4E79A7", ""});
  }
  return BarChart(schema, order, bars, {}, title, layout);
}

}  // namespace

std::string QuantileColor(double q) {
  q = std::clamp(std::isfinite(q) ? q : 0.0, 0.0, 1.0);
  const int red = static_cast<int>(std::lround(255.0 * q));
  const int blue = 255 - red;
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02X00%02X", red, blue);
  return buf;
}

std::string RenderEffectPlot(const GlobalExplanation& g, const PlotLayout& layout) {
  return EffectPlot(*g.schema, g.ranking, g.effects, false, 0.0, nullptr, layout);
}

std::string RenderEffectPlot(const LocalExplanation& l, const PlotLayout& layout) {
  return EffectPlot(*l.schema, l.ordering, l.effects, true, l.actual_prediction,
                    &l.observation_quantile, layout);
}

std::string RenderImportanceBars(const GlobalExplanation& g,
                                 const PlotLayout& layout) {
  return SingleSeriesBars(*g.schema, g.ranking, g.effects,
                          "Global feature importance", layout);
}

std::string RenderImportanceBars(const LocalExplanation& l,
                                 const PlotLayout& layout) {
  return SingleSeriesBars(*l.schema, l.ordering, l.effects,
                          "Local feature importance", layout);
}

std::string RenderImportanceBars(const ClassificationExplanation& c,
                                 const PlotLayout& layout) {
  const bool global = c.scope == ExplainScope::kGlobal;
  const Schema& schema = global ? *c.global.front().schema : *c.local.front().schema;
  std::vector<std::vector<BarSegment>> bars(c.n_features());
  for (std::size_t j = 0; j < c.n_features(); ++j) {
    for (std::size_t k = 0; k < c.classes.size(); ++k) {
      bars[j].push_back({c.class_importance(k, j),
                         kClassPalette[k % std::size(kClassPalette)],
                         c.classes[k]});
    }
  }
  return BarChart(schema, c.ranking, bars, c.classes,
                  global ? "Global feature importance by class"
                         : "Local feature importance by class",
                  layout);
}

}  // namespace acme
