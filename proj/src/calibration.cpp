#include "sawfilm/signal.hpp"

#include "sawfilm/errors.hpp"
#include "sawfilm/units.hpp"
#include "text_util.hpp"

#include <cmath>
#include <istream>
#include <ostream>

namespace sawfilm {

CalibrationResult calibrate_projection_ratio(const std::vector<CalibrationPoint>& points,
                                             double pixel_pitch, double v_reference) {
  if (points.empty()) throw DomainError("calibration needs at least one measurement");
  if (!(pixel_pitch > 0.0)) throw DomainError("pixel pitch must be positive");
  if (!(v_reference > 0.0)) throw DomainError("reference velocity must be positive");
  double sxy = 0.0, sxx = 0.0;
  std::vector<double> ratios;
  for (const CalibrationPoint& p : points) {
    if (p.period_pixels < 1 || !(p.frequency > 0.0)) {
      throw DomainError("calibration point needs period_pixels >= 1 and a positive frequency");
    }
    const double x = v_reference / (pixel_pitch * p.period_pixels);
    sxy += p.frequency * x;
    sxx += x * x;
    ratios.push_back(p.frequency / x);
  }
  CalibrationResult r;
  r.ratio = sxy / sxx;
  r.n_points = points.size();
  if (ratios.size() >= 2) {
    double mean = 0.0;
    for (double q : ratios) mean += q;
    mean /= static_cast<double>(ratios.size());
    double ss = 0.0;
    for (double q : ratios) ss += (q - mean) * (q - mean);
    r.sigma = std::sqrt(ss / static_cast<double>(ratios.size() - 1));
  }
  return r;
}

std::vector<CalibrationPoint> read_calibration_csv(std::istream& in, std::string_view origin) {
  std::vector<CalibrationPoint> out;
  bool header = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != "period_pixels,frequency_hz") {
        throw ParseError(detail::where(origin, line_no) + "expected header 'period_pixels,frequency_hz'");
      }
      header = true;
      continue;
    }
    const auto fields = detail::split_fields(line);
    if (fields.size() != 2) throw ParseError(detail::where(origin, line_no) + "expected 2 fields");
    const double pixels = detail::parse_number(fields[0], origin, line_no);
    if (pixels < 1.0 || pixels != std::floor(pixels) || pixels > 1e6) {
      throw ParseError(detail::where(origin, line_no) + "period_pixels must be a positive integer");
    }
    const double f = detail::parse_number(fields[1], origin, line_no);
    if (!(f > 0.0)) throw ParseError(detail::where(origin, line_no) + "frequency must be positive");
    out.push_back(CalibrationPoint{static_cast<int>(pixels), f});
  }
  if (!header) throw ParseError(std::string(origin) + ": empty calibration CSV");
  if (out.empty()) throw ParseError(std::string(origin) + ": no calibration measurements");
  return out;
}

void write_calibration_csv(std::ostream& out, const std::vector<CalibrationPoint>& points) {
  out << "period_pixels,frequency_hz\n";
  for (const auto& p : points) out << p.period_pixels << ',' << format_double(p.frequency) << '\n';
}

}  // namespace sawfilm
