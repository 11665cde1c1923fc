#include "sawfilm/units.hpp"

#include "sawfilm/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <utility>

namespace sawfilm {

namespace {

struct UnitEntry {
  std::string_view symbol;
  Dimension dimension;
  double scale;
};

constexpr std::array<UnitEntry, 27> kUnits{{
    {"Pa", Dimension::pressure, 1.0},
    {"kPa", Dimension::pressure, 1e3},
    {"MPa", Dimension::pressure, 1e6},
    {"GPa", Dimension::pressure, 1e9},
    {"kg/m3", Dimension::density, 1.0},
    {"kg/m^3", Dimension::density, 1.0},
    {"kg/m\xC2\xB3", Dimension::density, 1.0},
    {"g/cm3", Dimension::density, 1e3},
    {"g/cm^3", Dimension::density, 1e3},
    {"m", Dimension::length, 1.0},
    {"mm", Dimension::length, 1e-3},
    {"um", Dimension::length, 1e-6},
    {"\xC2\xB5m", Dimension::length, 1e-6},
    {"nm", Dimension::length, 1e-9},
    {"s", Dimension::time, 1.0},
    {"ms", Dimension::time, 1e-3},
    {"us", Dimension::time, 1e-6},
    {"\xC2\xB5s", Dimension::time, 1e-6},
    {"ns", Dimension::time, 1e-9},
    {"ps", Dimension::time, 1e-12},
    {"Hz", Dimension::frequency, 1.0},
    {"kHz", Dimension::frequency, 1e3},
    {"MHz", Dimension::frequency, 1e6},
    {"GHz", Dimension::frequency, 1e9},
    {"m/s", Dimension::velocity, 1.0},
    {"km/s", Dimension::velocity, 1e3},
    {"%", Dimension::dimensionless, 1e-2},
}};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::string_view dimension_name(Dimension d) {
  switch (d) {
    case Dimension::dimensionless: return "dimensionless";
    case Dimension::pressure: return "pressure";
    case Dimension::density: return "density";
    case Dimension::length: return "length";
    case Dimension::time: return "time";
    case Dimension::frequency: return "frequency";
    case Dimension::velocity: return "velocity";
  }
  return "unknown";
}

double parse_quantity(std::string_view text, Dimension expected) {
  const std::string_view s = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr == s.data()) {
    throw ParseError("cannot parse number in '" + std::string(text) + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError("non-finite value '" + std::string(text) + "'");
  }
  const std::string_view unit = trim(s.substr(static_cast<std::size_t>(ptr - s.data())));
  if (unit.empty()) {
    if (expected != Dimension::dimensionless) {
      throw ParseError("missing unit in '" + std::string(text) + "' (expected " +
                       std::string(dimension_name(expected)) + ")");
    }
    return value;
  }
  for (const auto& entry : kUnits) {
    if (entry.symbol == unit) {
      if (entry.dimension != expected) {
        throw ParseError("unit '" + std::string(unit) + "' is not a " +
                         std::string(dimension_name(expected)) + " unit");
      }
      return value * entry.scale;
    }
  }
  throw ParseError("unknown unit '" + std::string(unit) + "'");
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

}  // namespace sawfilm
