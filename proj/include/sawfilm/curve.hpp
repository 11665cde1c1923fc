#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sawfilm {

struct CurvePoint {
  double frequency = 0.0;  // Hz
  double velocity = 0.0;   // m/s
  std::optional<double> sigma;  // m/s
};

/// Phase velocity sampled at strictly increasing frequencies.
class DispersionCurve {
public:
  DispersionCurve() = default;
  /// Throws DomainError unless frequencies strictly increase, velocities are
  /// positive, and either every point or no point carries a sigma.
  explicit DispersionCurve(std::vector<CurvePoint> points);

  const std::vector<CurvePoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const CurvePoint& operator[](std::size_t i) const { return points_[i]; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  bool has_sigma() const { return !points_.empty() && points_.front().sigma.has_value(); }
  std::vector<double> frequencies() const;
  std::vector<double> velocities() const;

  /// Piecewise-linear interpolation; throws DomainError outside the sampled range.
  double velocity_at(double frequency) const;
  bool covers(double frequency) const;

private:
  std::vector<CurvePoint> points_;
};

/// Union of curve fragments sorted by frequency. Points whose frequencies
/// agree to `relative_tolerance` are averaged (sigmas combined in quadrature / n).
DispersionCurve merge_curves(std::span<const DispersionCurve> parts,
                             double relative_tolerance = 1e-6);

// Dispersion CSV: `frequency_hz,phase_velocity_m_per_s[,sigma_m_per_s]`.
void write_curve_csv(std::ostream& out, const DispersionCurve& curve);
/// Throws ParseError naming the line on malformed input.
DispersionCurve read_curve_csv(std::istream& in, std::string_view origin = "<stream>");

}  // namespace sawfilm
