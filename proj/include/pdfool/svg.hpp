#pragma once

#include <string>
#include <vector>

#include "pdfool/common.hpp"

namespace pdfool {

enum class SvgStyle { pd_original, pd_adversarial, pd_target, pd_rho, pd_other, ice, band };

struct SvgSeries {
    std::string label;
    SvgStyle style = SvgStyle::pd_other;
    std::vector<double> x;
    std::vector<double> y;
};

struct SvgPanel {
    std::string title;
    std::vector<SvgSeries> series;
};

// Self-contained static SVG with one coordinate frame per panel, laid out
// horizontally. Byte-deterministic for identical input.
std::string render_line_panels(const std::vector<SvgPanel>& panels, int panel_width = 460, int panel_height = 360);

}  // namespace pdfool
