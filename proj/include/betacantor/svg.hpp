#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "betacantor/measure.hpp"

namespace betacantor {

struct SvgOptions {
  std::string title;
  std::string config_hash;
  bool timestamp = true;  // a generation-time comment; off for byte-stable output
};

// One panel per generation, stacked top to bottom, each segment a
// horizontal stroke. Heights inside a panel are stretched to fill it, since
// the vertical offsets are far smaller than the unit interval.
void write_generations_svg(std::ostream& out, const std::vector<std::vector<WeightedSegment>>& generations,
                           const SvgOptions& options);

struct Curve {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Polyline plot with log-scaled x axis (and y axis when log_y is set).
void write_curves_svg(std::ostream& out, const std::vector<Curve>& curves, const std::string& x_label,
                      const std::string& y_label, bool log_y, const SvgOptions& options);

}  // namespace betacantor
