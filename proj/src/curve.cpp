#include "sawfilm/curve.hpp"

#include "sawfilm/errors.hpp"
#include "sawfilm/units.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace sawfilm {

DispersionCurve::DispersionCurve(std::vector<CurvePoint> points) : points_(std::move(points)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const CurvePoint& p = points_[i];
    if (!std::isfinite(p.frequency) || !(p.velocity > 0.0) || !std::isfinite(p.velocity)) {
      throw DomainError("curve point " + std::to_string(i) + " has invalid frequency or velocity");
    }
    if (p.sigma.has_value() != points_.front().sigma.has_value()) {
      throw DomainError("curve mixes points with and without sigma");
    }
    if (p.sigma && !(*p.sigma >= 0.0)) {
      throw DomainError("curve point " + std::to_string(i) + " has negative sigma");
    }
    if (i > 0 && !(p.frequency > points_[i - 1].frequency)) {
      throw DomainError("curve frequencies must be strictly increasing (point " +
                        std::to_string(i) + ")");
    }
  }
}

std::vector<double> DispersionCurve::frequencies() const {
  std::vector<double> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.frequency);
  return out;
}

std::vector<double> DispersionCurve::velocities() const {
  std::vector<double> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.velocity);
  return out;
}

bool DispersionCurve::covers(double frequency) const {
  return !points_.empty() && frequency >= points_.front().frequency &&
         frequency <= points_.back().frequency;
}

double DispersionCurve::velocity_at(double frequency) const {
  if (!covers(frequency)) throw DomainError("frequency outside the sampled curve");
  auto it = std::lower_bound(points_.begin(), points_.end(), frequency,
                             [](const CurvePoint& p, double f) { return p.frequency < f; });
  if (it->frequency == frequency) return it->velocity;
  const CurvePoint& hi = *it;
  const CurvePoint& lo = *(it - 1);
  const double t = (frequency - lo.frequency) / (hi.frequency - lo.frequency);
  return lo.velocity + t * (hi.velocity - lo.velocity);
}

DispersionCurve merge_curves(std::span<const DispersionCurve> parts, double relative_tolerance) {
  std::vector<CurvePoint> all;
  for (const auto& part : parts) all.insert(all.end(), part.begin(), part.end());
  std::stable_sort(all.begin(), all.end(),
                   [](const CurvePoint& a, const CurvePoint& b) { return a.frequency < b.frequency; });
  std::vector<CurvePoint> merged;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i + 1;
    while (j < all.size() &&
           all[j].frequency - all[i].frequency <= relative_tolerance * std::abs(all[i].frequency)) {
      ++j;
    }
    const double n = static_cast<double>(j - i);
    CurvePoint p;
    double var = 0.0;
    bool have_sigma = true;
    for (std::size_t k = i; k < j; ++k) {
      p.frequency += all[k].frequency / n;
      p.velocity += all[k].velocity / n;
      if (all[k].sigma) var += *all[k].sigma * *all[k].sigma;
      else have_sigma = false;
    }
    if (have_sigma) p.sigma = std::sqrt(var) / n;
    merged.push_back(p);
    i = j;
  }
  return DispersionCurve(std::move(merged));
}

void write_curve_csv(std::ostream& out, const DispersionCurve& curve) {
  const bool sigma = curve.has_sigma();
  out << "frequency_hz,phase_velocity_m_per_s" << (sigma ? ",sigma_m_per_s" : "") << '\n';
  for (const auto& p : curve) {
    out << format_double(p.frequency) << ',' << format_double(p.velocity);
    if (sigma) out << ',' << format_double(*p.sigma);
    out << '\n';
  }
}

namespace {

double parse_field(std::string_view field, std::string_view origin, std::size_t line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw ParseError(std::string(origin) + ":" + std::to_string(line) + ": invalid number '" +
                     std::string(field) + "'");
  }
  return value;
}

}  // namespace

DispersionCurve read_curve_csv(std::istream& in, std::string_view origin) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::vector<CurvePoint> points;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (columns == 0) {
      if (line == "frequency_hz,phase_velocity_m_per_s") columns = 2;
      else if (line == "frequency_hz,phase_velocity_m_per_s,sigma_m_per_s") columns = 3;
      else {
        throw ParseError(std::string(origin) + ":" + std::to_string(line_no) +
                         ": expected dispersion CSV header");
      }
      continue;
    }
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != columns) {
      throw ParseError(std::string(origin) + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(columns) + " fields");
    }
    CurvePoint p;
    p.frequency = parse_field(fields[0], origin, line_no);
    p.velocity = parse_field(fields[1], origin, line_no);
    if (columns == 3) p.sigma = parse_field(fields[2], origin, line_no);
    points.push_back(p);
  }
  if (columns == 0) throw ParseError(std::string(origin) + ": empty dispersion CSV");
  try {
    return DispersionCurve(std::move(points));
  } catch (const DomainError& e) {
    throw ParseError(std::string(origin) + ": " + e.what());
  }
}

}  // namespace sawfilm
