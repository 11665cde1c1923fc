#include "svg.hpp"

#include "sawfilm/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace sawfilm::cli {

namespace {

constexpr std::array<const char*, 6> kColors{"#1f77b4", "#d62728", "#2ca02c",
                                             "#9467bd", "#ff7f0e", "#17becf"};
constexpr std::array<const char*, 4> kDashes{"", "6 3", "2 3", "8 3 2 3"};
enum class Marker { circle, square, triangle, diamond };

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// 1, 2 or 5 times a power of ten, giving roughly `target` intervals.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

std::string tick_label(double v, double step) {
  const int digits = std::max(0, -static_cast<int>(std::floor(std::log10(step))));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, std::abs(v) < 0.5 * step ? 0.0 : v);
  return buf;
}

void marker(std::ostream& out, Marker m, double x, double y, const char* color) {
  constexpr double r = 3.5;
  switch (m) {
    case Marker::circle:
      out << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\""
          << color << "\"/>\n";
      break;
    case Marker::square:
      out << "<rect x=\"" << num(x - r) << "\" y=\"" << num(y - r) << "\" width=\"" << num(2 * r)
          << "\" height=\"" << num(2 * r) << "\" fill=\"" << color << "\"/>\n";
      break;
    case Marker::triangle:
      out << "<polygon points=\"" << num(x) << "," << num(y - r * 1.2) << " " << num(x - r) << ","
          << num(y + r) << " " << num(x + r) << "," << num(y + r) << "\" fill=\"" << color << "\"/>\n";
      break;
    case Marker::diamond:
      out << "<polygon points=\"" << num(x) << "," << num(y - r * 1.3) << " " << num(x + r) << ","
          << num(y) << " " << num(x) << "," << num(y + r * 1.3) << " " << num(x - r) << "," << num(y)
          << "\" fill=\"none\" stroke=\"" << color << "\"/>\n";
      break;
  }
}

}  // namespace

AxisRange padded_range(const std::vector<double>& values, double padding) {
  if (values.empty()) return {};
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double a = *lo, b = *hi;
  if (b - a <= 0.0) {
    const double half = a == 0.0 ? 1.0 : 0.01 * std::abs(a);
    return {a - half, b + half};
  }
  const double pad = padding * (b - a);
  return {a - pad, b + pad};
}

void write_dispersion_svg(std::ostream& out, const std::vector<PlotSeries>& series,
                          const PlotOptions& options) {
  if (series.empty()) throw DomainError("plot needs at least one curve");
  std::vector<double> fs, vs;
  for (const auto& s : series) {
    for (const auto& p : s.curve) {
      fs.push_back(p.frequency / 1e6);
      vs.push_back(p.velocity);
      if (s.style == SeriesStyle::markers && p.sigma) {
        vs.push_back(p.velocity - *p.sigma);
        vs.push_back(p.velocity + *p.sigma);
      }
    }
  }
  if (fs.empty()) throw DomainError("plot: all curves are empty");
  const AxisRange xr = padded_range(fs, options.padding);
  const AxisRange yr = padded_range(vs, options.padding);

  const double W = options.width, H = options.height;
  const double left = 80, right = 170, top = options.title.empty() ? 20 : 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  auto X = [&](double f) { return left + (f - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto Y = [&](double v) { return top + (yr.hi - v) / (yr.hi - yr.lo) * ph; };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W) << "\" height=\"" << num(H)
      << "\" viewBox=\"0 0 " << num(W) << " " << num(H) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << num(W) << "\" height=\"" << num(H) << "\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    out << "<text x=\"" << num(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(options.title) << "</text>\n";
  }

  // Axes, ticks, grid.
  out << "<g id=\"axes\" stroke=\"black\" fill=\"none\">\n";
  out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\""
      << num(ph) << "\"/>\n</g>\n";
  out << "<g id=\"ticks\">\n";
  const double xs = nice_step(xr.hi - xr.lo, 6);
  for (double t = std::ceil(xr.lo / xs) * xs; t <= xr.hi + 1e-9 * xs; t += xs) {
    out << "<line x1=\"" << num(X(t)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(X(t)) << "\" y2=\""
        << num(top) << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << num(X(t)) << "\" y=\"" << num(top + ph + 16) << "\" text-anchor=\"middle\">"
        << tick_label(t, xs) << "</text>\n";
  }
  const double ys = nice_step(yr.hi - yr.lo, 6);
  for (double t = std::ceil(yr.lo / ys) * ys; t <= yr.hi + 1e-9 * ys; t += ys) {
    out << "<line x1=\"" << num(left) << "\" y1=\"" << num(Y(t)) << "\" x2=\"" << num(left + pw) << "\" y2=\""
        << num(Y(t)) << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(Y(t) + 4) << "\" text-anchor=\"end\">"
        << tick_label(t, ys) << "</text>\n";
  }
  out << "</g>\n";
  out << "<text id=\"x-label\" x=\"" << num(left + pw / 2) << "\" y=\"" << num(H - 16)
      << "\" text-anchor=\"middle\">Frequency (MHz)</text>\n";
  out << "<text id=\"y-label\" x=\"18\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << num(top + ph / 2) << ")\">Phase velocity (m/s)</text>\n";

  int n_markers = 0, n_lines = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const PlotSeries& s = series[i];
    const char* color = kColors[i % kColors.size()];
    out << "<g class=\"series\" id=\"series-" << i << "\">\n";
    if (s.style == SeriesStyle::line) {
      const char* dash = kDashes[n_lines++ % kDashes.size()];
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
      if (*dash) out << " stroke-dasharray=\"" << dash << "\"";
      out << " points=\"";
      for (std::size_t k = 0; k < s.curve.size(); ++k) {
        if (k) out << ' ';
        out << num(X(s.curve[k].frequency / 1e6)) << ',' << num(Y(s.curve[k].velocity));
      }
      out << "\"/>\n";
    } else {
      const Marker m = static_cast<Marker>(n_markers++ % 4);
      for (const auto& p : s.curve) {
        const double x = X(p.frequency / 1e6), y = Y(p.velocity);
        if (p.sigma && *p.sigma > 0.0) {
          out << "<line x1=\"" << num(x) << "\" y1=\"" << num(Y(p.velocity - *p.sigma)) << "\" x2=\"" << num(x)
              << "\" y2=\"" << num(Y(p.velocity + *p.sigma)) << "\" stroke=\"" << color << "\"/>\n";
        }
        marker(out, m, x, y, color);
      }
    }
    out << "</g>\n";

    // Legend entry.
    const double ly = top + 14 + 20 * static_cast<double>(i), lx = left + pw + 14;
    if (s.style == SeriesStyle::line) {
      const char* dash = kDashes[(n_lines - 1) % kDashes.size()];
      out << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 24) << "\" y2=\""
          << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
      if (*dash) out << " stroke-dasharray=\"" << dash << "\"";
      out << "/>\n";
    } else {
      marker(out, static_cast<Marker>((n_markers - 1) % 4), lx + 12, ly, color);
    }
    out << "<text x=\"" << num(lx + 30) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace sawfilm::cli
