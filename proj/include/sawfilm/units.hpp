#pragma once

#include <string>
#include <string_view>

namespace sawfilm {

enum class Dimension {
  dimensionless,
  pressure,
  density,
  length,
  time,
  frequency,
  velocity,
};

std::string_view dimension_name(Dimension d);

/// Parses "69.8 GPa", "2.435um", "2200 kg/m3", "5080 m/s" into SI.
/// A bare number is accepted only for Dimension::dimensionless; a trailing
/// '%' is accepted there and divides by 100. Throws ParseError.
double parse_quantity(std::string_view text, Dimension expected);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace sawfilm
