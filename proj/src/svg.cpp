#include "mdseq/svg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mdseq/common.hpp"

namespace mdseq {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double x) { return format_double(x); }

struct Range {
    double lo = 0.0, hi = 1.0;
    void expand(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

void open_svg(std::string& s, const std::string& title, const std::string& x_label,
              const std::string& y_label) {
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kWidth) +
         "\" height=\"" + std::to_string(kHeight) + "\" viewBox=\"0 0 " +
         std::to_string(kWidth) + " " + std::to_string(kHeight) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + std::to_string(kWidth / 2) +
         "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         escape(title) + "</text>\n";
    s += "<text x=\"" + std::to_string(kWidth / 2) + "\" y=\"" + std::to_string(kHeight - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
         escape(x_label) + "</text>\n";
    s += "<text x=\"16\" y=\"" + std::to_string(kHeight / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 " +
         std::to_string(kHeight / 2) + ")\">" + escape(y_label) + "</text>\n";
}

void axes_and_ticks(std::string& s, const Range& xr, const Range& yr,
                    const std::function<double(double)>& px,
                    const std::function<double(double)>& py, bool draw_x_ticks = true) {
    const int x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const int y0 = kHeight - kMarginBottom, y1 = kMarginTop;
    s += "<line x1=\"" + std::to_string(x0) + "\" y1=\"" + std::to_string(y0) + "\" x2=\"" +
         std::to_string(x1) + "\" y2=\"" + std::to_string(y0) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    s += "<line x1=\"" + std::to_string(x0) + "\" y1=\"" + std::to_string(y0) + "\" x2=\"" +
         std::to_string(x0) + "\" y2=\"" + std::to_string(y1) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
        s += "<text x=\"" + std::to_string(x0 - 6) + "\" y=\"" + fmt(py(yv) + 3) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + fmt(yv) +
             "</text>\n";
        if (draw_x_ticks) {
            const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
            s += "<text x=\"" + fmt(px(xv)) + "\" y=\"" + std::to_string(y0 + 16) +
                 "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
                 fmt(xv) + "</text>\n";
        }
    }
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<SvgSeries>& series) {
    Range xr, yr;
    bool any = false;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points)
            if (std::isfinite(x) && std::isfinite(y)) {
                if (!any) {
                    xr.lo = xr.hi = x;
                    yr.lo = yr.hi = y;
                    any = true;
                } else {
                    xr.expand(x);
                    yr.expand(y);
                }
            }
    if (!any) {
        xr = {0.0, 1.0};
        yr = {0.0, 1.0};
    }
    if (xr.hi == xr.lo) xr.hi = xr.lo + 1.0;
    if (yr.hi == yr.lo) yr.hi = yr.lo + 1.0;

    const auto px = [&](double x) {
        return kMarginLeft + (x - xr.lo) / (xr.hi - xr.lo) * (kWidth - kMarginLeft - kMarginRight);
    };
    const auto py = [&](double y) {
        return kHeight - kMarginBottom -
               (y - yr.lo) / (yr.hi - yr.lo) * (kHeight - kMarginTop - kMarginBottom);
    };

    std::string s;
    open_svg(s, title, x_label, y_label);
    axes_and_ticks(s, xr, yr, px, py);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::string color = kPalette[i % 6];
        std::string pts;
        for (const auto& [x, y] : series[i].points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            pts += fmt(px(x)) + "," + fmt(py(y)) + " ";
        }
        if (!pts.empty()) pts.pop_back();
        s += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" +
             pts + "\"/>\n";
        const int lx = kWidth - kMarginRight - 150;
        const int ly = kMarginTop + 16 * static_cast<int>(i);
        s += "<line x1=\"" + std::to_string(lx) + "\" y1=\"" + std::to_string(ly) + "\" x2=\"" +
             std::to_string(lx + 18) + "\" y2=\"" + std::to_string(ly) + "\" stroke=\"" + color +
             "\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + std::to_string(lx + 24) + "\" y=\"" + std::to_string(ly + 4) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(series[i].label) +
             "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

std::string svg_bar_chart(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<std::string>& categories,
                          const std::vector<std::string>& series_labels,
                          const std::vector<std::vector<double>>& values) {
    require(series_labels.size() == values.size(), "svg_bar_chart: series/values mismatch");
    Range yr;
    yr.lo = 0.0;
    yr.hi = 0.0;
    for (const auto& row : values) {
        require(row.size() == categories.size(), "svg_bar_chart: category count mismatch");
        for (double v : row) yr.expand(v);
    }
    if (yr.hi == yr.lo) yr.hi = yr.lo + 1.0;

    const auto py = [&](double y) {
        return kHeight - kMarginBottom -
               (y - yr.lo) / (yr.hi - yr.lo) * (kHeight - kMarginTop - kMarginBottom);
    };
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double group_w = plot_w / std::max<std::size_t>(1, categories.size());
    const double bar_w = group_w * 0.8 / std::max<std::size_t>(1, values.size());

    std::string s;
    open_svg(s, title, x_label, y_label);
    axes_and_ticks(
        s, Range{0.0, static_cast<double>(categories.size())}, yr,
        [&](double x) { return kMarginLeft + x / categories.size() * plot_w; }, py,
        /*draw_x_ticks=*/false);
    for (std::size_t g = 0; g < categories.size(); ++g) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double v = values[i][g];
            if (!std::isfinite(v)) continue;
            const double x = kMarginLeft + g * group_w + group_w * 0.1 + i * bar_w;
            const double y_top = py(std::max(v, 0.0));
            const double y_bot = py(std::min(v, 0.0));
            s += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(y_top) + "\" width=\"" + fmt(bar_w) +
                 "\" height=\"" + fmt(std::max(0.5, y_bot - y_top)) + "\" fill=\"" +
                 kPalette[i % 6] + "\"/>\n";
        }
        s += "<text x=\"" + fmt(kMarginLeft + g * group_w + group_w / 2) + "\" y=\"" +
             std::to_string(kHeight - kMarginBottom + 16) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
             escape(categories[g]) + "</text>\n";
    }
    for (std::size_t i = 0; i < series_labels.size(); ++i) {
        const int lx = kWidth - kMarginRight - 150;
        const int ly = kMarginTop + 16 * static_cast<int>(i);
        s += "<rect x=\"" + std::to_string(lx) + "\" y=\"" + std::to_string(ly - 8) +
             "\" width=\"12\" height=\"12\" fill=\"" + kPalette[i % 6] + "\"/>\n";
        s += "<text x=\"" + std::to_string(lx + 18) + "\" y=\"" + std::to_string(ly + 2) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(series_labels[i]) +
             "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace mdseq
