#pragma once

#include <string>
#include <vector>

#include "snapkit/model.hpp"

namespace snapkit::cli {

struct SvgLayer {
    std::string name;
    std::string color;  ///< any SVG color; empty picks from the palette
    Configuration cfg;
};

/// Static drawing of planar realizations: one <g class="layer"> per layer with
/// translucent plates, bars and knots, plus one group of knot labels.
/// Throws ValidationError unless the framework is planar.
std::string render_svg(const Framework& fw, const std::vector<SvgLayer>& layers,
                       double width = 640.0);

}  // namespace snapkit::cli
