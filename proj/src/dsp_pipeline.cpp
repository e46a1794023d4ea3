#include "mmgest/dsp_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "mmgest/errors.hpp"
#include "mmgest/fft.hpp"

namespace mmgest::dsp {

namespace {

std::vector<double> hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / n));
  return w;
}

}  // namespace

std::vector<cdouble> RangeDopplerMap::antenna_values(int range_bin, int column) const {
  std::vector<cdouble> out(antennas);
  for (int a = 0; a < antennas; ++a) {
    out[a] = spectrum[(static_cast<std::size_t>(a) * range_bins + range_bin) * doppler_bins + column];
  }
  return out;
}

RangeDopplerMap RangeDopplerMap::from_power(std::vector<double> grid, int range_bins, int doppler_bins) {
  if (range_bins < 1 || doppler_bins < 1 || grid.size() != static_cast<std::size_t>(range_bins) * doppler_bins) {
    throw InvalidArgument("power grid size does not match its dimensions");
  }
  RangeDopplerMap map;
  map.range_bins = range_bins;
  map.doppler_bins = doppler_bins;
  map.power = std::move(grid);
  return map;
}

RangeDopplerMap range_doppler(const radar::AdcCube& cube, const RangeDopplerOptions& options) {
  const auto& cfg = cube.config();
  if (cube.antennas() != cfg.virtual_antennas() || cube.chirps() != cfg.chirps_per_frame ||
      cube.samples() != cfg.samples_per_chirp) {
    throw InvalidArgument("ADC cube dimensions do not match its chirp config");
  }
  const int na = cube.antennas();
  const int nc = cube.chirps();
  const int ns = cube.samples();

  RangeDopplerMap map;
  map.antennas = na;
  map.doppler_bins = nc;
  map.range_resolution = cfg.range_resolution();
  map.velocity_resolution = cfg.velocity_resolution();
  map.range_bins = std::min(ns, static_cast<int>(std::floor(options.max_range / map.range_resolution)) + 1);
  const int nr = map.range_bins;

  const auto fast_win = hann(ns);
  const auto slow_win = hann(nc);

  // Range FFT; keep the first nr bins as [antenna][chirp][range].
  std::vector<cdouble> range_cube(static_cast<std::size_t>(na) * nc * nr);
  std::vector<cdouble> buf(ns);
  for (int a = 0; a < na; ++a) {
    for (int c = 0; c < nc; ++c) {
      const auto row = cube.row(a, c);
      for (int k = 0; k < ns; ++k) buf[k] = row[k] * fast_win[k];
      fft_forward(buf);
      std::copy_n(buf.begin(), nr, range_cube.begin() + (static_cast<std::ptrdiff_t>(a) * nc + c) * nr);
    }
  }

  const std::size_t cells = static_cast<std::size_t>(nr) * nc;
  map.spectrum.assign(static_cast<std::size_t>(na) * cells, cdouble{});
  map.antenna_power.assign(map.spectrum.size(), 0.0);
  map.power.assign(cells, 0.0);
  std::vector<cdouble> slow(nc);
  for (int a = 0; a < na; ++a) {
    for (int r = 0; r < nr; ++r) {
      for (int c = 0; c < nc; ++c) {
        slow[c] = range_cube[(static_cast<std::size_t>(a) * nc + c) * nr + r] * slow_win[c];
      }
      fft_forward(slow);
      for (int i = 0; i < nc; ++i) {
        const int col = (i + nc / 2) % nc;
        const std::size_t idx = (static_cast<std::size_t>(a) * nr + r) * nc + col;
        map.spectrum[idx] = slow[i];
        map.antenna_power[idx] = std::norm(slow[i]);
      }
    }
  }
  for (int a = 0; a < na; ++a) {
    const double* src = map.antenna_power.data() + static_cast<std::size_t>(a) * cells;
    for (std::size_t i = 0; i < cells; ++i) map.power[i] += src[i];
  }
  for (auto& p : map.power) p /= na;
  return map;
}

void CfarConfig::validate() const {
  if (guard_cells < 0) throw InvalidArgument("CFAR guard_cells must be >= 0");
  if (training_cells < 1) throw InvalidArgument("CFAR training_cells must be >= 1");
  if (!(pfa > 0.0 && pfa < 1.0)) throw InvalidArgument("CFAR pfa must lie in (0, 1)");
  if (zero_doppler_halfwidth < -1) throw InvalidArgument("zero_doppler_halfwidth must be >= -1");
}

double cfar_alpha(double pfa, int training) {
  const double n = training;
  return std::max(1.0, n * (std::pow(pfa, -1.0 / n) - 1.0));
}

std::vector<Detection> cfar_detect(const RangeDopplerMap& map, const CfarConfig& cfg) {
  cfg.validate();
  const int reach = cfg.guard_cells + cfg.training_cells;
  if (map.range_bins < 2 * reach + 1 || map.doppler_bins < 2 * reach + 1) {
    throw InvalidArgument("range-Doppler map smaller than the CFAR window");
  }
  const int nr = map.range_bins;
  const int nd = map.doppler_bins;

  std::vector<char> excluded(nd, 0);
  for (int col = 0; col < nd; ++col) excluded[col] = std::abs(map.doppler_bin(col)) <= cfg.zero_doppler_halfwidth;

  std::vector<double> alpha(4 * cfg.training_cells + 1, 0.0);
  for (int n = 1; n < static_cast<int>(alpha.size()); ++n) alpha[n] = cfar_alpha(cfg.pfa, n);

  std::vector<Detection> out;
  for (int r = 0; r < nr; ++r) {
    for (int col = 0; col < nd; ++col) {
      if (excluded[col]) continue;
      double sum = 0.0;
      int count = 0;
      for (int k = cfg.guard_cells + 1; k <= reach; ++k) {
        if (r - k >= 0) { sum += map.cell(r - k, col); ++count; }
        if (r + k < nr) { sum += map.cell(r + k, col); ++count; }
        const int lo = ((col - k) % nd + nd) % nd;
        const int hi = (col + k) % nd;
        if (!excluded[lo]) { sum += map.cell(r, lo); ++count; }
        if (!excluded[hi]) { sum += map.cell(r, hi); ++count; }
      }
      if (count == 0) continue;
      const double cut = map.cell(r, col);
      if (cut * count > alpha[count] * sum) out.push_back({r, map.doppler_bin(col), cut});
    }
  }
  return out;
}

Angles estimate_aoa(std::span<const cdouble> values, const radar::VirtualArray& array, int fft_size) {
  if (values.size() != array.elements.size()) {
    throw InvalidArgument("AoA needs one value per virtual antenna (" + std::to_string(array.elements.size()) +
                          "), got " + std::to_string(values.size()));
  }
  if (std::all_of(values.begin(), values.end(), [](const cdouble& v) { return v == cdouble{}; })) {
    throw NoSignal("all-zero antenna slice");
  }

  std::vector<std::pair<int, cdouble>> row;  // (azimuth position, value) on the lower row
  for (const auto& el : array.elements) {
    if (el.elevation_pos == 0) row.emplace_back(el.azimuth_pos, values[el.index]);
  }

  // Zero-padded DFT over u = sin(az)cos(el) in [-1, 1).
  std::vector<double> spectrum(fft_size);
  for (int k = 0; k < fft_size; ++k) {
    const double u = -1.0 + 2.0 * k / fft_size;
    cdouble acc{};
    for (const auto& [pos, v] : row) acc += v * std::polar(1.0, -std::numbers::pi * pos * u);
    spectrum[k] = std::norm(acc);
  }
  const int peak = static_cast<int>(std::max_element(spectrum.begin(), spectrum.end()) - spectrum.begin());
  const double left = spectrum[(peak - 1 + fft_size) % fft_size];
  const double right = spectrum[(peak + 1) % fft_size];
  const double denom = left - 2.0 * spectrum[peak] + right;
  const double frac = denom != 0.0 ? std::clamp(0.5 * (left - right) / denom, -0.5, 0.5) : 0.0;
  double ux = -1.0 + 2.0 * (peak + frac) / fft_size;
  if (ux >= 1.0) ux -= 2.0;

  cdouble cross{};
  for (const auto& upper : array.elements) {
    if (upper.elevation_pos != 1) continue;
    for (const auto& lower : array.elements) {
      if (lower.elevation_pos == 0 && lower.azimuth_pos == upper.azimuth_pos) {
        cross += std::conj(values[lower.index]) * values[upper.index];
      }
    }
  }
  const double uz = cross == cdouble{} ? 0.0 : std::clamp(std::arg(cross) / std::numbers::pi, -0.999, 0.999);
  const double elevation = std::asin(uz);
  const double horizontal = std::sqrt(1.0 - uz * uz);
  const double azimuth = std::asin(std::clamp(ux / horizontal, -0.999999, 0.999999));
  return {azimuth, elevation};
}

std::vector<DetectedPoint> extract_points(const radar::AdcCube& cube, const CfarConfig& cfar,
                                          const RangeDopplerOptions& options) {
  const auto map = range_doppler(cube, options);
  const auto array = radar::make_virtual_array(cube.config());
  std::vector<DetectedPoint> points;
  for (const auto& det : cfar_detect(map, cfar)) {
    if (det.range_bin == 0) continue;  // DC bin carries no range information
    const auto values = map.antenna_values(det.range_bin, map.doppler_column(det.doppler_bin));
    const Angles ang = estimate_aoa(values, array);
    const double r = map.range_of(det.range_bin);
    DetectedPoint p;
    p.x = r * std::cos(ang.elevation) * std::sin(ang.azimuth);
    p.y = r * std::cos(ang.elevation) * std::cos(ang.azimuth);
    p.z = r * std::sin(ang.elevation);
    p.v = map.velocity_of(det.doppler_bin);
    p.intensity = det.intensity;
    p.range_bin = det.range_bin;
    p.doppler_bin = det.doppler_bin;
    points.push_back(p);
  }
  return points;
}

void write_rd_csv(const RangeDopplerMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[32];
  for (int r = 0; r < map.range_bins; ++r) {
    for (int c = 0; c < map.doppler_bins; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", map.cell(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace mmgest::dsp
