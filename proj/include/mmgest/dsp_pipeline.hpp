#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <vector>

#include "mmgest/radar_frontend.hpp"

namespace mmgest::dsp {

using radar::cdouble;

/// Range-Doppler spectra of one frame. Doppler columns are stored centered:
/// column `c` holds signed Doppler bin `c - doppler_bins / 2`.
struct RangeDopplerMap {
  int antennas = 0;
  int range_bins = 0;
  int doppler_bins = 0;
  double range_resolution = 0.0;     // m per range bin
  double velocity_resolution = 0.0;  // m/s per Doppler bin
  std::vector<cdouble> spectrum;     // [antenna][range][doppler column]
  std::vector<double> antenna_power; // |spectrum|^2, same layout
  std::vector<double> power;         // [range][doppler column], mean over antennas

  int doppler_bin(int column) const { return column - doppler_bins / 2; }
  int doppler_column(int bin) const { return bin + doppler_bins / 2; }
  double cell(int range_bin, int column) const { return power[static_cast<std::size_t>(range_bin) * doppler_bins + column]; }
  double velocity_of(int bin) const { return bin * velocity_resolution; }
  double range_of(int bin) const { return bin * range_resolution; }

  /// Complex value of every antenna at one cell, in virtual antenna order.
  std::vector<cdouble> antenna_values(int range_bin, int column) const;

  /// Map holding only a summed power grid (row-major [range][column]); no per-antenna data.
  static RangeDopplerMap from_power(std::vector<double> grid, int range_bins, int doppler_bins);
};

struct RangeDopplerOptions {
  double max_range = scene::kMaxSceneRange;  // range bins beyond this are dropped
};

/// Hann-windowed fast-time DFT per chirp, Hann-windowed slow-time DFT per range bin.
RangeDopplerMap range_doppler(const radar::AdcCube& cube, const RangeDopplerOptions& options = {});

struct CfarConfig {
  int guard_cells = 2;     // per side, per dimension
  int training_cells = 8;  // per side, per dimension
  double pfa = 1e-4;
  int zero_doppler_halfwidth = 1;  // Doppler bins |k| <= this are never tested nor used as training

  void validate() const;
};

struct Detection {
  int range_bin = 0;
  int doppler_bin = 0;  // signed
  double intensity = 0.0;
};

/// CA-CFAR scaling for `training` exponential-power cells: N * (pfa^(-1/N) - 1),
/// never below 1 so a cell must exceed its local mean.
double cfar_alpha(double pfa, int training);

/// Cell-averaging CFAR on the summed power map with a cross-shaped training
/// window. Range windows are truncated at the map edges; Doppler wraps.
std::vector<Detection> cfar_detect(const RangeDopplerMap& map, const CfarConfig& cfg);

struct Angles {
  double azimuth = 0.0;    // rad, positive toward +x
  double elevation = 0.0;  // rad, positive toward +z
};

/// Azimuth from a zero-padded DFT over the lower azimuth row; elevation from the
/// phase difference between the two rows at matching azimuth positions.
Angles estimate_aoa(std::span<const cdouble> values, const radar::VirtualArray& array, int fft_size = 256);

struct DetectedPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double v = 0.0;          // m/s, positive = receding
  double intensity = 0.0;  // linear power
  int range_bin = 0;
  int doppler_bin = 0;
};

std::vector<DetectedPoint> extract_points(const radar::AdcCube& cube, const CfarConfig& cfar = {},
                                          const RangeDopplerOptions& options = {});

/// Summed power grid as CSV, one row per range bin, columns in Doppler order.
void write_rd_csv(const RangeDopplerMap& map, const std::filesystem::path& path);

}  // namespace mmgest::dsp
