#pragma once

#include <string>
#include <vector>

namespace mdseq {

/// Minimal deterministic SVG charts: fixed layout, shortest round-trip
/// number formatting, no timestamps, so identical inputs give identical
/// bytes.
struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;  // non-finite points are skipped
};

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<SvgSeries>& series);

/// Grouped bars, one group per category, one bar per series.
std::string svg_bar_chart(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<std::string>& categories,
                          const std::vector<std::string>& series_labels,
                          const std::vector<std::vector<double>>& values);

}  // namespace mdseq
