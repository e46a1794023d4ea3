#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "mmgest/errors.hpp"
#include "mmgest/fft.hpp"
#include "mmgest/radar_frontend.hpp"

using namespace mmgest;
using namespace mmgest::radar;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> row_spectrum(const AdcCube& cube, int antenna, int chirp) {
  const auto row = cube.row(antenna, chirp);
  std::vector<cdouble> buf(row.begin(), row.end());
  fft_forward(buf);
  std::vector<double> mag(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) mag[i] = std::abs(buf[i]);
  return mag;
}

int peak_bin(const std::vector<double>& mag) {
  return static_cast<int>(std::max_element(mag.begin(), mag.end()) - mag.begin());
}

AdcCube synth(std::vector<Reflector> refl, const ChirpConfig& cfg = {}, double noise = 0.0, std::uint64_t seed = 1) {
  return synthesize_reflectors(refl, cfg, 0, 0.0, noise, seed);
}

double wrap(double a) { return std::remainder(a, 2.0 * kPi); }

}  // namespace

TEST_CASE("default config") {
  const ChirpConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.slope() * cfg.ramp_time == doctest::Approx(cfg.bandwidth).epsilon(1e-9));
  CHECK(cfg.range_resolution() == doctest::Approx(0.0374740573).epsilon(1e-6));
  CHECK(cfg.max_unambiguous_range() >= 9.62);
  CHECK(cfg.max_unambiguous_velocity() == doctest::Approx(4.9).epsilon(0.01));
  CHECK(cfg.virtual_antennas() == 12);
  CHECK(cfg.samples_per_chirp / cfg.adc_rate <= cfg.ramp_time * (1 + 1e-12));
  CHECK(cfg.frame_active_time() < cfg.frame_period);
}

TEST_CASE("config validation") {
  ChirpConfig cfg;
  cfg.ramp_time = 30e-6;  // 2250 samples no longer fit in the ramp
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.adc_rate = 5e6;  // max range drops below the scene range
  cfg.samples_per_chirp = 300;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.noise_std = -1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.chirps_per_frame = 1000;  // does not fit in 100 ms
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("config text round trip, hash, and parse errors") {
  ChirpConfig cfg;
  cfg.noise_std = 0.25;
  cfg.chirps_per_frame = 32;
  const auto text = to_config_text(cfg);
  const auto back = parse_chirp_config(text);
  CHECK(to_config_text(back) == text);
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(config_hash(cfg) != config_hash(ChirpConfig{}));
  CHECK(config_hash(cfg).size() == 16);

  const auto partial = parse_chirp_config("# comment\n\n  noise_std = 0.5  # trailing\nn_rx=4\n");
  CHECK(partial.noise_std == 0.5);
  CHECK(partial.carrier_freq == 77e9);

  try {
    parse_chirp_config("noise_std=0.1\nfoo=3\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("foo") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_chirp_config("noise_std=abc\n"), ParseError);
  CHECK_THROWS_AS(parse_chirp_config("n_tx=2.5\n"), ParseError);
  CHECK_THROWS_AS(parse_chirp_config("just words\n"), ParseError);
  CHECK_THROWS_AS(parse_chirp_config("ramp_time_s=1e-6\n"), InvalidArgument);
  CHECK_THROWS_AS(load_chirp_config("/nonexistent/radar.cfg"), IoError);

  const auto path = std::filesystem::temp_directory_path() / "mmgest_test_radar.cfg";
  std::ofstream(path) << text;
  CHECK(config_hash(load_chirp_config(path)) == config_hash(cfg));
  std::filesystem::remove(path);
}

TEST_CASE("virtual array layout") {
  const auto arr = make_virtual_array(ChirpConfig{});
  REQUIRE(arr.elements.size() == 12);
  CHECK(arr.azimuth_count == 8);
  CHECK(arr.elevation_count == 2);
  std::vector<int> lower;
  for (const auto& el : arr.elements) {
    if (el.elevation_pos == 0) lower.push_back(el.azimuth_pos);
  }
  std::sort(lower.begin(), lower.end());
  CHECK(lower == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
  for (std::size_t i = 0; i < arr.elements.size(); ++i) CHECK(arr.elements[i].index == static_cast<int>(i));

  ChirpConfig lin;
  lin.n_tx = 1;
  const auto row = make_virtual_array(lin);
  REQUIRE(row.elements.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(row.elements[i].azimuth_pos == i);
    CHECK(row.elements[i].elevation_pos == 0);
  }
}

TEST_CASE("if_tone_params") {
  const ChirpConfig cfg;
  CHECK(cfg.slope() == doctest::Approx(6.6667e13).epsilon(1e-4));
  const auto t = if_tone_params(cfg, 2.4);
  CHECK(t.beat_freq == doctest::Approx(1.0667e6).epsilon(1e-3));
  CHECK(t.beat_freq == doctest::Approx(cfg.slope() * 4.8 / kLightSpeed).epsilon(1e-14));
  CHECK(t.phase >= 0.0);
  CHECK(t.phase < 2 * kPi);
  for (double d : {0.3, 1.1, 2.4, 4.7}) {
    CHECK(if_tone_params(cfg, 2 * d).beat_freq == 2 * if_tone_params(cfg, d).beat_freq);
  }
  // approaches (0, 0) as d -> 0
  const auto tiny = if_tone_params(cfg, 1e-9);
  CHECK(tiny.beat_freq < 1.0);
  CHECK(tiny.phase < 1e-5);
  CHECK_THROWS_AS(if_tone_params(cfg, 0.0), OutOfRange);
  CHECK_THROWS_AS(if_tone_params(cfg, -1.0), OutOfRange);
  CHECK_THROWS_AS(if_tone_params(cfg, cfg.max_unambiguous_range() + 0.1), OutOfRange);
}

TEST_CASE("static scatterer: identical chirps, dominant bin at the beat frequency") {
  const ChirpConfig cfg;
  const auto cube = synth({{{0.0, 2.4, 0.0}, 0.0, 1.0}}, cfg);
  CHECK(cube.antennas() == 12);
  CHECK(cube.chirps() == 64);
  CHECK(cube.samples() == 2250);
  for (int a : {0, 5, 11}) {
    for (int c = 1; c < cube.chirps(); ++c) {
      for (int k = 0; k < cube.samples(); k += 97) CHECK(std::abs(cube.at(a, c, k) - cube.at(a, 0, k)) < 1e-12);
    }
  }
  const int expected = static_cast<int>(std::lround(if_tone_params(cfg, 2.4).beat_freq / cfg.fast_time_bin_hz()));
  CHECK(std::abs(peak_bin(row_spectrum(cube, 0, 0)) - expected) <= 1);
}

TEST_CASE("two scatterers give two spectral peaks") {
  const ChirpConfig cfg;
  const auto cube = synth({{{0.0, 1.5, 0.0}, 0.0, 1.0}, {{0.0, 4.0, 0.0}, 0.0, 4.0}}, cfg);
  const auto mag = row_spectrum(cube, 0, 0);
  for (double d : {1.5, 4.0}) {
    const int b = static_cast<int>(std::lround(if_tone_params(cfg, d).beat_freq / cfg.fast_time_bin_hz()));
    const double local = *std::max_element(mag.begin() + b - 1, mag.begin() + b + 2);
    CHECK(local > 100.0 * mag[(b + 300) % mag.size()]);
    CHECK(local >= mag[b - 5]);
    CHECK(local >= mag[b + 5]);
  }
}

TEST_CASE("linearity and rcs scaling with noise off") {
  const Reflector a{{0.4, 2.0, 0.1}, 0.7, 0.8};
  const Reflector b{{-0.6, 3.1, -0.2}, -1.3, 0.3};
  const auto ca = synth({a}), cb = synth({b}), cab = synth({a, b});
  double err = 0.0;
  for (std::size_t i = 0; i < cab.data().size(); ++i) {
    err = std::max(err, std::abs(cab.data()[i] - ca.data()[i] - cb.data()[i]));
  }
  CHECK(err < 1e-12);

  Reflector a3 = a;
  a3.rcs *= 3.0;
  const auto c3 = synth({a3});
  double scale_err = 0.0;
  for (std::size_t i = 0; i < c3.data().size(); ++i) {
    scale_err = std::max(scale_err, std::abs(c3.data()[i] - 3.0 * ca.data()[i]));
  }
  CHECK(scale_err < 1e-12);
}

TEST_CASE("adjacent azimuth elements differ in phase by pi sin(theta)") {
  const auto arr = make_virtual_array(ChirpConfig{});
  for (double deg : {-40.0, -12.5, 0.0, 7.0, 33.0}) {
    const double th = deg * kPi / 180.0;
    const auto cube = synth({{{2.0 * std::sin(th), 2.0 * std::cos(th), 0.0}, 0.0, 1.0}});
    for (int pos = 0; pos < 7; ++pos) {
      int i0 = -1, i1 = -1;
      for (const auto& el : arr.elements) {
        if (el.elevation_pos != 0) continue;
        if (el.azimuth_pos == pos) i0 = el.index;
        if (el.azimuth_pos == pos + 1) i1 = el.index;
      }
      const double dphi = std::arg(cube.at(i1, 0, 10) * std::conj(cube.at(i0, 0, 10)));
      CHECK(std::abs(wrap(dphi - kPi * std::sin(th))) < 1e-6);
    }
  }
}

TEST_CASE("Doppler phase advances 4 pi v T / lambda per chirp") {
  const ChirpConfig cfg;
  const double v = 1.1;
  const auto cube = synth({{{0.0, 2.0, 0.0}, v, 1.0}}, cfg);
  const double step = 4.0 * kPi * v * cfg.chirp_interval() / cfg.wavelength();
  for (int c = 1; c < 64; c += 9) {
    const double d = std::arg(cube.at(0, c, 0) * std::conj(cube.at(0, c - 1, 0)));
    CHECK(std::abs(wrap(d - step)) < 1e-9);
  }
}

TEST_CASE("empty scene is a valid zero cube; noise is seeded and has the requested power") {
  const auto zero = synth({});
  CHECK(std::all_of(zero.data().begin(), zero.data().end(), [](const cdouble& z) { return z == cdouble{}; }));

  const auto n1 = synth({}, {}, 0.3, 5), n2 = synth({}, {}, 0.3, 5), n3 = synth({}, {}, 0.3, 6);
  CHECK(std::equal(n1.data().begin(), n1.data().end(), n2.data().begin()));
  CHECK_FALSE(std::equal(n1.data().begin(), n1.data().end(), n3.data().begin()));
  double p = 0.0, re = 0.0;
  for (const auto& z : n1.data()) {
    p += std::norm(z);
    re += z.real() * z.real();
  }
  const double count = static_cast<double>(n1.data().size());
  CHECK(p / count == doctest::Approx(0.09).epsilon(0.01));
  CHECK(re / count == doctest::Approx(0.045).epsilon(0.01));
  for (const auto& z : n1.data()) REQUIRE(std::isfinite(z.real()));
}

TEST_CASE("synthesize_frame checks that the frame fits the scene") {
  scene::GestureScene sc;
  sc.label = scene::GestureClass::knock;
  sc.hand_tracks.push_back({[](double) { return Vec3{0.0, 2.0, 0.0}; }, 1.0, 0.0, 3.0});
  const ChirpConfig cfg;
  const auto cube = synthesize_frame(sc, cfg, 0.5, 0.0, 1);
  CHECK(cube.frame_index() == 5);
  CHECK(cube.timestamp() == 0.5);
  CHECK_THROWS_AS(synthesize_frame(sc, cfg, 2.995, 0.0, 1), OutOfRange);
  CHECK_THROWS_AS(synthesize_frame(sc, cfg, -0.1, 0.0, 1), OutOfRange);
}
