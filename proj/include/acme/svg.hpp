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

#ifndef ACME_SVG_HPP_
#define ACME_SVG_HPP_

#include <string>

#include "acme/engine.hpp"

namespace acme {

// Plot geometry shared by the renderers and their tests.
struct PlotLayout {
  double width = 760.0;
  double left = 150.0;    // label gutter
  double right = 30.0;
  double top = 48.0;
  double track = 28.0;    // height of one feature track or bar row
  double bottom = 48.0;   // x axis and tick labels
};

// Linear blue (#0000FF, q = 0) to red (#FF0000, q = 1) scale.
std::string QuantileColor(double q);

// One horizontal track per feature, most important on top, one marker per
// probe colored by quantile level. The global plot shows standardized
// effects with a dashed line at 0; the local plot shows raw predictions with
// a dashed line at the observation's prediction and a larger marker at the
// observation itself.
std::string RenderEffectPlot(const GlobalExplanation& explanation,
                             const PlotLayout& layout = {});
std::string RenderEffectPlot(const LocalExplanation& explanation,
                             const PlotLayout& layout = {});

// Horizontal importance bars in ranking order; stacked per class for
// classification explanations.
std::string RenderImportanceBars(const GlobalExplanation& explanation,
                                 const PlotLayout& layout = {});
std::string RenderImportanceBars(const LocalExplanation& explanation,
                                 const PlotLayout& layout = {});
std::string RenderImportanceBars(const ClassificationExplanation& explanation,
                                 const PlotLayout& layout = {});

}  // namespace acme

#endif  // ACME_SVG_HPP_
