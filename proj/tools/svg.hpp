#pragma once

#include "sawfilm/curve.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sawfilm::cli {

enum class SeriesStyle { markers, line };

struct PlotSeries {
  std::string label;
  DispersionCurve curve;
  SeriesStyle style = SeriesStyle::line;
};

struct PlotOptions {
  std::string title;
  double width = 720.0;   // px
  double height = 480.0;
  double padding = 0.05;  // fraction of the data range added on each side
};

struct AxisRange {
  double lo = 0.0;
  double hi = 1.0;
};

/// Data range padded by `padding` on both ends; a zero span is widened to
/// +-1 % of the value (or +-1 when the value is zero).
AxisRange padded_range(const std::vector<double>& values, double padding);

/// Frequency axis in MHz, phase velocity in m/s. Markers carry sigma bars.
void write_dispersion_svg(std::ostream& out, const std::vector<PlotSeries>& series,
                          const PlotOptions& options = {});

}  // namespace sawfilm::cli
