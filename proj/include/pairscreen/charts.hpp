#pragma once

// Static SVG line charts: ROC overlays and metric-versus-factor plots.

#include <string>
#include <utility>
#include <vector>

#include "pairscreen/harness.hpp"
#include "pairscreen/roc.hpp"

namespace pairscreen {

struct ChartSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    /// SVG stroke-dasharray; empty for a solid line.
    std::string dash;
    bool markers = false;
};

struct Chart {
    std::string title;
    std::string x_label;
    std::string y_label;
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;
    /// When set, x positions 0..n-1 are labelled with these strings.
    std::vector<std::string> x_categories;
    /// Draw the y = x chance line.
    bool diagonal = false;
    std::vector<ChartSeries> series;
};

std::string render_svg(const Chart& chart);

/// Binormal ROC curves of both tests for each analysis.
Chart roc_chart(const std::vector<AnalysisResult>& results, const std::string& title);

struct NamedChart {
    std::string stem;
    std::string svg;
};

/// Rejection rate (and CRF / WRF under the alternative) against the first swept
/// factor, one chart per combination of the other swept factors. Empty when
/// nothing is swept.
std::vector<NamedChart> grid_charts(const FactorGrid& grid,
                                    const std::vector<ScenarioMetrics>& metrics);

}  // namespace pairscreen
