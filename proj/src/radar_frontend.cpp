#include "mmgest/radar_frontend.hpp"

#include <charconv>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <sstream>

#include "mmgest/errors.hpp"

namespace mmgest::radar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& value, const std::string& key, std::size_t line) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) throw ParseError("bad numeric value for " + key + ": '" + value + "'", line);
  return out;
}

int parse_count(const std::string& value, const std::string& key, std::size_t line) {
  const double v = parse_number(value, key, line);
  if (v != std::floor(v) || v < 0 || v > 1e9) throw ParseError(key + " must be a non-negative integer", line);
  return static_cast<int>(v);
}

double wrap_phase(double phase) {
  double p = std::fmod(phase, kTwoPi);
  if (p < 0) p += kTwoPi;
  return p;
}

}  // namespace

void ChirpConfig::validate() const {
  auto fail = [](const std::string& msg) { throw InvalidArgument("chirp config: " + msg); };
  if (!(carrier_freq > 0) || !(bandwidth > 0) || !(ramp_time > 0) || !(adc_rate > 0) || !(frame_period > 0)) {
    fail("frequencies and durations must be positive");
  }
  if (!(idle_time >= 0)) fail("idle_time must be non-negative");
  if (samples_per_chirp < 2 || chirps_per_frame < 2) fail("need at least 2 samples and 2 chirps");
  if (n_tx < 1 || n_rx < 1) fail("need at least one TX and one RX");
  if (!(noise_std >= 0)) fail("noise_std must be non-negative");
  if (samples_per_chirp / adc_rate > ramp_time * (1.0 + 1e-9)) fail("samples_per_chirp / adc_rate exceeds ramp_time");
  if (frame_active_time() > frame_period) fail("chirps do not fit in the frame period");
  if (max_unambiguous_range() < scene::kMaxSceneRange) fail("max unambiguous range below the scene range");
}

ChirpConfig parse_chirp_config(const std::string& text) {
  ChirpConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "carrier_freq_hz") cfg.carrier_freq = parse_number(value, key, line_no);
    else if (key == "bandwidth_hz") cfg.bandwidth = parse_number(value, key, line_no);
    else if (key == "ramp_time_s") cfg.ramp_time = parse_number(value, key, line_no);
    else if (key == "idle_time_s") cfg.idle_time = parse_number(value, key, line_no);
    else if (key == "samples_per_chirp") cfg.samples_per_chirp = parse_count(value, key, line_no);
    else if (key == "adc_rate_sps") cfg.adc_rate = parse_number(value, key, line_no);
    else if (key == "chirps_per_frame") cfg.chirps_per_frame = parse_count(value, key, line_no);
    else if (key == "frame_period_s") cfg.frame_period = parse_number(value, key, line_no);
    else if (key == "n_tx") cfg.n_tx = parse_count(value, key, line_no);
    else if (key == "n_rx") cfg.n_rx = parse_count(value, key, line_no);
    else if (key == "noise_std") cfg.noise_std = parse_number(value, key, line_no);
    else throw ParseError("unknown key '" + key + "'", line_no);
  }
  cfg.validate();
  return cfg;
}

ChirpConfig load_chirp_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open chirp config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_chirp_config(ss.str());
}

std::string to_config_text(const ChirpConfig& cfg) {
  char buf[640];
  std::snprintf(buf, sizeof buf,
                "carrier_freq_hz=%.17g\nbandwidth_hz=%.17g\nramp_time_s=%.17g\nidle_time_s=%.17g\n"
                "samples_per_chirp=%d\nadc_rate_sps=%.17g\nchirps_per_frame=%d\nframe_period_s=%.17g\n"
                "n_tx=%d\nn_rx=%d\nnoise_std=%.17g\n",
                cfg.carrier_freq, cfg.bandwidth, cfg.ramp_time, cfg.idle_time, cfg.samples_per_chirp, cfg.adc_rate,
                cfg.chirps_per_frame, cfg.frame_period, cfg.n_tx, cfg.n_rx, cfg.noise_std);
  return buf;
}

std::string config_hash(const ChirpConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_config_text(cfg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

VirtualArray make_virtual_array(const ChirpConfig& cfg) {
  VirtualArray arr;
  const bool elevated = cfg.n_tx == 3 && cfg.n_rx == 4;
  for (int tx = 0; tx < cfg.n_tx; ++tx) {
    int tx_az = tx * cfg.n_rx;
    int tx_el = 0;
    if (elevated) {
      static constexpr int kAz[3] = {0, 2, 4};
      static constexpr int kEl[3] = {0, 1, 0};
      tx_az = kAz[tx];
      tx_el = kEl[tx];
    }
    for (int rx = 0; rx < cfg.n_rx; ++rx) {
      arr.elements.push_back({tx * cfg.n_rx + rx, tx_az + rx, tx_el});
    }
  }
  arr.azimuth_count = elevated ? 8 : cfg.n_tx * cfg.n_rx;
  arr.elevation_count = elevated ? 2 : 1;
  return arr;
}

AdcCube::AdcCube(ChirpConfig cfg, int frame_index, double timestamp)
    : config_(cfg),
      frame_index_(frame_index),
      timestamp_(timestamp),
      antennas_(cfg.virtual_antennas()),
      chirps_(cfg.chirps_per_frame),
      samples_(cfg.samples_per_chirp),
      data_(static_cast<std::size_t>(antennas_) * chirps_ * samples_) {}

AdcCube AdcCube::with_shape(ChirpConfig cfg, int antennas, int chirps, int samples) {
  AdcCube cube(cfg, 0, 0.0);
  cube.antennas_ = antennas;
  cube.chirps_ = chirps;
  cube.samples_ = samples;
  cube.data_.assign(static_cast<std::size_t>(antennas) * chirps * samples, cdouble{});
  return cube;
}

IfTone if_tone_params(const ChirpConfig& cfg, double range) {
  if (!(range > 0.0) || range > cfg.max_unambiguous_range()) {
    throw OutOfRange("range " + std::to_string(range) + " m outside (0, max unambiguous range]");
  }
  return {cfg.slope() * 2.0 * range / kLightSpeed, wrap_phase(4.0 * std::numbers::pi * range / cfg.wavelength())};
}

AdcCube synthesize_reflectors(std::span<const Reflector> reflectors, const ChirpConfig& cfg, int frame_index,
                              double timestamp, double noise_std, std::uint64_t rng_seed) {
  AdcCube cube(cfg, frame_index, timestamp);
  const VirtualArray array = make_virtual_array(cfg);
  const int n = cfg.samples_per_chirp;
  const int chirps = cube.chirps();
  const double lambda = cfg.wavelength();
  const std::size_t count = reflectors.size();

  // Every row is a weighted sum of one fast-time tone per reflector; the weight
  // carries the range phase, the array phase, the Doppler progression and the
  // rcs / d^2 amplitude.
  std::vector<cdouble> tones(count * n);
  std::vector<cdouble> weights(count * array.elements.size() * chirps);
  for (std::size_t r = 0; r < count; ++r) {
    const auto& refl = reflectors[r];
    const double d = refl.position.norm();
    const IfTone if_tone = if_tone_params(cfg, d);
    const double ux = refl.position.x / d;
    const double uz = refl.position.z / d;
    const double amplitude = refl.rcs / (d * d);
    const double doppler_step = 4.0 * std::numbers::pi * refl.radial_velocity * cfg.chirp_interval() / lambda;
    const double omega = kTwoPi * if_tone.beat_freq / cfg.adc_rate;
    for (int k = 0; k < n; ++k) tones[r * n + k] = std::polar(1.0, wrap_phase(omega * k));
    for (const auto& el : array.elements) {
      const double spatial = std::numbers::pi * (el.azimuth_pos * ux + el.elevation_pos * uz);
      for (int c = 0; c < chirps; ++c) {
        weights[(r * array.elements.size() + el.index) * chirps + c] =
            std::polar(amplitude, wrap_phase(if_tone.phase + spatial + doppler_step * c));
      }
    }
  }

  // Split real/imaginary planes so the accumulation vectorizes.
  std::vector<double> tone_re(count * n), tone_im(count * n);
  for (std::size_t i = 0; i < tones.size(); ++i) {
    tone_re[i] = tones[i].real();
    tone_im[i] = tones[i].imag();
  }
  std::vector<double> acc_re(n), acc_im(n);

  std::mt19937_64 rng(rng_seed);
  boost::random::normal_distribution<double> gauss(0.0, noise_std / std::numbers::sqrt2);
  for (int a = 0; a < cube.antennas(); ++a) {
    for (int c = 0; c < chirps; ++c) {
      std::fill(acc_re.begin(), acc_re.end(), 0.0);
      std::fill(acc_im.begin(), acc_im.end(), 0.0);
      for (std::size_t r = 0; r < count; ++r) {
        const cdouble w = weights[(r * array.elements.size() + a) * chirps + c];
        const double wr = w.real();
        const double wi = w.imag();
        const double* __restrict tr = tone_re.data() + r * n;
        const double* __restrict ti = tone_im.data() + r * n;
        double* __restrict xr = acc_re.data();
        double* __restrict xi = acc_im.data();
        for (int k = 0; k < n; ++k) {
          xr[k] += wr * tr[k] - wi * ti[k];
          xi[k] += wr * ti[k] + wi * tr[k];
        }
      }
      auto row = cube.row(a, c);
      if (noise_std > 0.0) {
        for (int k = 0; k < n; ++k) {
          const double re = gauss(rng);
          const double im = gauss(rng);
          row[k] = cdouble(acc_re[k] + re, acc_im[k] + im);
        }
      } else {
        for (int k = 0; k < n; ++k) row[k] = cdouble(acc_re[k], acc_im[k]);
      }
    }
  }
  return cube;
}

AdcCube synthesize_frame(const scene::GestureScene& scene, const ChirpConfig& cfg, double t0, double noise_std,
                         std::uint64_t rng_seed) {
  if (!(t0 >= 0.0) || t0 + cfg.frame_active_time() > scene.duration + 1e-12) {
    throw OutOfRange("frame at t0=" + std::to_string(t0) + " s does not fit in the scene");
  }
  std::vector<Reflector> reflectors;
  for (const auto& s : scene::sample_scene(scene, t0)) reflectors.push_back({s.position, s.radial_velocity, s.rcs});
  const int frame_index = static_cast<int>(std::lround(t0 / cfg.frame_period));
  return synthesize_reflectors(reflectors, cfg, frame_index, t0, noise_std, rng_seed);
}

}  // namespace mmgest::radar
