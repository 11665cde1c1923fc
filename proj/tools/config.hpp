#pragma once

#include "sawfilm/inversion.hpp"
#include "sawfilm/material_db.hpp"
#include "sawfilm/signal.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sawfilm::cli {

struct Sampling {
  double f_min = 0.0;  // Hz
  double f_max = 0.0;
  int n_points = 0;

  /// Evenly spaced frequencies; a single point sits at f_min.
  std::vector<double> frequencies() const;
};

struct SynthesisConfig {
  std::vector<MaskSpec> masks;  // glass masks followed by SLM patterns
  std::vector<int> slm_period_pixels;  // parallel to the SLM entries of `masks`
  SynthesisOptions options;
  Sampling model_curve{10e6, 800e6, 80};
};

struct FitConfig {
  std::vector<FreeParameter> free;
  FitOptions options;
};

struct RunConfig {
  std::filesystem::path path;
  std::filesystem::path material_db;
  MaterialDb db;
  LayerStack stack;
  std::optional<MixingCoupling> coupling;
  std::optional<std::uint64_t> seed;
  Sampling dispersion{50e6, 500e6, 10};
  SynthesisConfig synthesis;
  ExtractionOptions extraction;
  double pixel_pitch = 32e-6;
  double v_reference = 5080.0;
  FitConfig fit;
};

/// Directory holding the shipped material database.
std::filesystem::path default_data_dir();

/// Throws ParseError (file:line: message) on malformed input, unknown keys,
/// unknown materials or bad units.
RunConfig parse_run_config(std::string_view text, std::string_view origin,
                           const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace sawfilm::cli
