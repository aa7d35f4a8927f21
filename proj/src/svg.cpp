#include "pdfool/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace pdfool {

namespace {

std::string fixed2(double v) {
    char buf[48];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
    if (ec != std::errc()) throw NumericError("svg: failed to format coordinate");
    return std::string(buf, end);
}

std::string tick_label(double v) {
    char buf[48];
    const int written = std::snprintf(buf, sizeof(buf), "%.4g", v);
    return std::string(buf, buf + written);
}

struct StyleAttrs {
    const char* stroke;
    const char* extra;
};

StyleAttrs style_attrs(SvgStyle style) {
    switch (style) {
        case SvgStyle::pd_original: return {"#d62728", " stroke-width=\"2\""};
        case SvgStyle::pd_adversarial: return {"#ff7f0e", " stroke-width=\"2\""};
        case SvgStyle::pd_target: return {"#555555", " stroke-width=\"1.5\" stroke-dasharray=\"6,3\""};
        case SvgStyle::pd_rho: return {"#2ca02c", " stroke-width=\"1.5\" stroke-dasharray=\"2,2\""};
        case SvgStyle::pd_other: return {"#9467bd", " stroke-width=\"1.5\""};
        case SvgStyle::ice: return {"#1f77b4", " stroke-width=\"0.6\" stroke-opacity=\"0.35\""};
        case SvgStyle::band: return {"#000000", " stroke-width=\"1.2\" stroke-dasharray=\"4,3\""};
    }
    return {"#000000", ""};
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range padded_range(double lo, double hi) {
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

}  // namespace

std::string render_line_panels(const std::vector<SvgPanel>& panels, int panel_width, int panel_height) {
    if (panels.empty()) throw DataError("svg: nothing to plot");
    const int margin_left = 56, margin_right = 14, margin_top = 30, margin_bottom = 40;
    const int total_width = panel_width * static_cast<int>(panels.size());
    const int total_height = panel_height;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total_width << "\" height=\"" << total_height
        << "\" viewBox=\"0 0 " << total_width << ' ' << total_height << "\">\n";
    out << "<rect width=\"" << total_width << "\" height=\"" << total_height << "\" fill=\"#ffffff\"/>\n";

    for (std::size_t pi = 0; pi < panels.size(); ++pi) {
        const auto& panel = panels[pi];
        const double x0 = static_cast<double>(pi) * panel_width + margin_left;
        const double x1 = static_cast<double>(pi + 1) * panel_width - margin_right;
        const double y0 = margin_top;
        const double y1 = static_cast<double>(panel_height - margin_bottom);

        bool any = false;
        double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
        for (const auto& s : panel.series) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                if (!any) {
                    xlo = xhi = s.x[i];
                    ylo = yhi = s.y[i];
                    any = true;
                } else {
                    xlo = std::min(xlo, s.x[i]);
                    xhi = std::max(xhi, s.x[i]);
                    ylo = std::min(ylo, s.y[i]);
                    yhi = std::max(yhi, s.y[i]);
                }
            }
        }
        if (!any) throw DataError("svg: panel '" + panel.title + "' has no finite points");
        const Range xr = padded_range(xlo, xhi);
        const Range yr = padded_range(ylo, yhi);
        auto sx = [&](double v) { return x0 + (v - xr.lo) / (xr.hi - xr.lo) * (x1 - x0); };
        auto sy = [&](double v) { return y1 - (v - yr.lo) / (yr.hi - yr.lo) * (y1 - y0); };

        out << "<g>\n";
        out << "<text x=\"" << fixed2((x0 + x1) / 2) << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\""
            << " text-anchor=\"middle\">" << panel.title << "</text>\n";
        out << "<rect x=\"" << fixed2(x0) << "\" y=\"" << fixed2(y0) << "\" width=\"" << fixed2(x1 - x0)
            << "\" height=\"" << fixed2(y1 - y0) << "\" fill=\"none\" stroke=\"#333333\"/>\n";

        for (int t = 0; t <= 4; ++t) {
            const double fx = xr.lo + (xr.hi - xr.lo) * t / 4.0;
            const double fy = yr.lo + (yr.hi - yr.lo) * t / 4.0;
            out << "<line x1=\"" << fixed2(sx(fx)) << "\" y1=\"" << fixed2(y1) << "\" x2=\"" << fixed2(sx(fx))
                << "\" y2=\"" << fixed2(y1 + 4) << "\" stroke=\"#333333\"/>\n";
            out << "<text x=\"" << fixed2(sx(fx)) << "\" y=\"" << fixed2(y1 + 16)
                << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" << tick_label(fx)
                << "</text>\n";
            out << "<line x1=\"" << fixed2(x0 - 4) << "\" y1=\"" << fixed2(sy(fy)) << "\" x2=\"" << fixed2(x0)
                << "\" y2=\"" << fixed2(sy(fy)) << "\" stroke=\"#333333\"/>\n";
            out << "<text x=\"" << fixed2(x0 - 6) << "\" y=\"" << fixed2(sy(fy) + 3)
                << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << tick_label(fy)
                << "</text>\n";
        }

        // ICE curves go under the PD lines.
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& s : panel.series) {
                const bool background = s.style == SvgStyle::ice;
                if ((pass == 0) != background) continue;
                if (s.x.size() < 2) continue;
                const auto attrs = style_attrs(s.style);
                out << "<polyline fill=\"none\" stroke=\"" << attrs.stroke << "\"" << attrs.extra << " points=\"";
                for (std::size_t i = 0; i < s.x.size(); ++i) {
                    if (i) out << ' ';
                    out << fixed2(sx(s.x[i])) << ',' << fixed2(sy(s.y[i]));
                }
                out << "\"/>\n";
            }
        }

        // Legend: one entry per non-ICE label, plus a single ICE entry.
        double ly = y0 + 12;
        bool ice_listed = false;
        for (const auto& s : panel.series) {
            if (s.style == SvgStyle::ice) {
                if (ice_listed) continue;
                ice_listed = true;
            }
            const auto attrs = style_attrs(s.style);
            const std::string label = s.style == SvgStyle::ice ? "ice" : s.label;
            out << "<line x1=\"" << fixed2(x0 + 8) << "\" y1=\"" << fixed2(ly) << "\" x2=\"" << fixed2(x0 + 28)
                << "\" y2=\"" << fixed2(ly) << "\" stroke=\"" << attrs.stroke << "\"" << attrs.extra << "/>\n";
            out << "<text x=\"" << fixed2(x0 + 32) << "\" y=\"" << fixed2(ly + 3)
                << "\" font-family=\"sans-serif\" font-size=\"10\">" << label << "</text>\n";
            ly += 13;
        }
        out << "</g>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace pdfool
