#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mmgest/gesture_scene.hpp"

namespace mmgest::radar {

using cdouble = std::complex<double>;

inline constexpr double kLightSpeed = 2.99792458e8;

/// FMCW waveform and MIMO array parameters. Defaults describe a 77 GHz
/// 3TX/4RX sensor sampling at 37.5 Msps.
struct ChirpConfig {
  double carrier_freq = 77e9;       // Hz
  double bandwidth = 4e9;           // Hz
  double ramp_time = 60e-6;         // s
  double idle_time = 6e-6;          // s, between ramps
  int samples_per_chirp = 2250;     // fast-time samples
  double adc_rate = 37.5e6;         // samples/s
  int chirps_per_frame = 64;        // slow-time samples per virtual antenna
  double frame_period = 0.1;        // s
  int n_tx = 3;
  int n_rx = 4;
  double noise_std = 0.1;           // complex noise amplitude per ADC sample

  double light_speed() const { return kLightSpeed; }
  double slope() const { return bandwidth / ramp_time; }
  double wavelength() const { return kLightSpeed / carrier_freq; }
  int virtual_antennas() const { return n_tx * n_rx; }
  /// Slow-time sampling interval seen by one virtual antenna (TDM over n_tx ramps).
  double chirp_interval() const { return n_tx * (ramp_time + idle_time); }
  double frame_active_time() const { return chirps_per_frame * chirp_interval(); }

  double max_unambiguous_range() const { return adc_rate * kLightSpeed / (2.0 * slope() * 2.0); }
  double max_unambiguous_velocity() const { return wavelength() / (4.0 * chirp_interval()); }
  /// Range spacing of one fast-time DFT bin; c / (2B) when the whole ramp is sampled.
  double range_resolution() const {
    return adc_rate / samples_per_chirp * kLightSpeed / (2.0 * slope());
  }
  /// Velocity spacing of one slow-time DFT bin.
  double velocity_resolution() const {
    return wavelength() / (2.0 * chirps_per_frame * chirp_interval());
  }
  double fast_time_bin_hz() const { return adc_rate / samples_per_chirp; }

  /// Throws InvalidArgument when any invariant is violated.
  void validate() const;
};

/// Parses flat `key=value` lines ('#' starts a comment). Unknown keys are errors.
ChirpConfig parse_chirp_config(const std::string& text);
ChirpConfig load_chirp_config(const std::filesystem::path& path);
/// Canonical text form, parseable by parse_chirp_config.
std::string to_config_text(const ChirpConfig& cfg);
/// FNV-1a of the canonical text, rendered as 16 hex digits.
std::string config_hash(const ChirpConfig& cfg);

struct ArrayElement {
  int index = 0;        // virtual antenna index (tx * n_rx + rx)
  int azimuth_pos = 0;  // offset in units of lambda/2
  int elevation_pos = 0;
};

struct VirtualArray {
  std::vector<ArrayElement> elements;
  int azimuth_count = 0;
  int elevation_count = 0;
};

/// 3TX/4RX yields 8 azimuth elements in the lower row and 4 elevated elements
/// (the TX1 image, shifted by lambda laterally and lambda/2 vertically). Other
/// geometries fall back to a single uniform row.
VirtualArray make_virtual_array(const ChirpConfig& cfg);

/// Sampled IF data for one frame, indexed [virtual antenna][chirp][sample].
class AdcCube {
 public:
  AdcCube(ChirpConfig cfg, int frame_index, double timestamp);

  const ChirpConfig& config() const { return config_; }
  int frame_index() const { return frame_index_; }
  double timestamp() const { return timestamp_; }

  int antennas() const { return antennas_; }
  int chirps() const { return chirps_; }
  int samples() const { return samples_; }

  cdouble& at(int antenna, int chirp, int sample) { return data_[offset(antenna, chirp) + sample]; }
  const cdouble& at(int antenna, int chirp, int sample) const { return data_[offset(antenna, chirp) + sample]; }

  std::span<cdouble> row(int antenna, int chirp) { return {data_.data() + offset(antenna, chirp), static_cast<std::size_t>(samples_)}; }
  std::span<const cdouble> row(int antenna, int chirp) const {
    return {data_.data() + offset(antenna, chirp), static_cast<std::size_t>(samples_)};
  }

  std::span<cdouble> data() { return data_; }
  std::span<const cdouble> data() const { return data_; }

  /// Cube shaped for a different geometry than its config (used to build malformed inputs in tests).
  static AdcCube with_shape(ChirpConfig cfg, int antennas, int chirps, int samples);

 private:
  std::size_t offset(int antenna, int chirp) const {
    return (static_cast<std::size_t>(antenna) * chirps_ + chirp) * samples_;
  }

  ChirpConfig config_;
  int frame_index_ = 0;
  double timestamp_ = 0.0;
  int antennas_ = 0;
  int chirps_ = 0;
  int samples_ = 0;
  std::vector<cdouble> data_;
};

struct IfTone {
  double beat_freq = 0.0;  // Hz
  double phase = 0.0;      // rad in [0, 2pi)
};

/// Beat frequency S*2d/c and phase 4*pi*d/lambda of a reflector at range d.
IfTone if_tone_params(const ChirpConfig& cfg, double range);

/// Point reflector as seen by the synthesizer.
struct Reflector {
  Vec3 position;
  double radial_velocity = 0.0;
  double rcs = 1.0;
};

/// Noise-free superposition of reflectors plus circular Gaussian noise
/// (complex std `noise_std`, i.e. each of I and Q has variance noise_std^2 / 2).
AdcCube synthesize_reflectors(std::span<const Reflector> reflectors, const ChirpConfig& cfg, int frame_index,
                              double timestamp, double noise_std, std::uint64_t rng_seed);

/// Samples the scene at t0 and synthesizes one frame.
AdcCube synthesize_frame(const scene::GestureScene& scene, const ChirpConfig& cfg, double t0, double noise_std,
                         std::uint64_t rng_seed);

}  // namespace mmgest::radar
