#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "mmgest/dsp_pipeline.hpp"
#include "mmgest/errors.hpp"
#include "mmgest/gesture_scene.hpp"

using namespace mmgest;
using namespace mmgest::dsp;
using radar::ChirpConfig;
using radar::Reflector;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

radar::AdcCube synth(std::vector<Reflector> refl, double noise = 0.0, std::uint64_t seed = 1) {
  return radar::synthesize_reflectors(refl, ChirpConfig{}, 0, 0.0, noise, seed);
}

std::pair<int, int> peak_cell(const RangeDopplerMap& m) {
  const auto it = std::max_element(m.power.begin(), m.power.end());
  const auto idx = static_cast<int>(it - m.power.begin());
  return {idx / m.doppler_bins, m.doppler_bin(idx % m.doppler_bins)};
}

DetectedPoint strongest(const std::vector<DetectedPoint>& pts) {
  return *std::max_element(pts.begin(), pts.end(),
                           [](const DetectedPoint& a, const DetectedPoint& b) { return a.intensity < b.intensity; });
}

RangeDopplerMap noise_map(int nr, int nd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> grid(static_cast<std::size_t>(nr) * nd);
  for (auto& v : grid) v = expo(rng);
  return RangeDopplerMap::from_power(std::move(grid), nr, nd);
}

std::vector<cdouble> steering(double az, double el) {
  const auto arr = radar::make_virtual_array(ChirpConfig{});
  std::vector<cdouble> v(arr.elements.size());
  const double ux = std::cos(el) * std::sin(az), uz = std::sin(el);
  for (const auto& e : arr.elements) v[e.index] = std::polar(1.0, std::numbers::pi * (e.azimuth_pos * ux + e.elevation_pos * uz));
  return v;
}

}  // namespace

TEST_CASE("range_doppler basics") {
  SUBCASE("all-zero cube gives an all-zero map") {
    const auto m = range_doppler(synth({}));
    CHECK(std::all_of(m.power.begin(), m.power.end(), [](double p) { return p == 0.0; }));
    CHECK(m.range_resolution == doctest::Approx(0.037474).epsilon(1e-4));
    CHECK(m.antennas == 12);
    CHECK(m.doppler_bins == 64);
    CHECK(m.range_bins == 257);
  }
  SUBCASE("static scatterer at 2.4 m peaks at range bin 64, Doppler bin 0") {
    const auto m = range_doppler(synth({{{0.0, 2.4, 0.0}, 0.0, 1.0}}));
    CHECK(peak_cell(m) == std::pair<int, int>{64, 0});
    for (double p : m.power) REQUIRE((p >= 0.0 && std::isfinite(p)));
  }
  SUBCASE("receding scatterer lands on the positive Doppler side") {
    const ChirpConfig cfg;
    const auto m = range_doppler(synth({{{0.0, 2.4, 0.0}, 1.0, 1.0}}));
    const int expected = static_cast<int>(std::lround(1.0 / cfg.velocity_resolution()));
    CHECK(peak_cell(m).second == expected);
    CHECK(expected > 0);
    const auto m2 = range_doppler(synth({{{0.0, 2.4, 0.0}, -1.0, 1.0}}));
    CHECK(peak_cell(m2).second == -expected);
  }
  SUBCASE("malformed cube") {
    const auto bad = radar::AdcCube::with_shape(ChirpConfig{}, 12, 32, 2250);
    CHECK_THROWS_AS(range_doppler(bad), InvalidArgument);
  }
}

TEST_CASE("cfar_alpha") {
  CHECK(cfar_alpha(1e-3, 32) == doctest::Approx(32.0 * (std::pow(1e-3, -1.0 / 32) - 1.0)));
  CHECK(cfar_alpha(1e-4, 16) > cfar_alpha(1e-3, 16));
  CHECK(cfar_alpha(0.45, 4) == 1.0);  // never below the local mean
}

TEST_CASE("cfar_detect on synthetic maps") {
  SUBCASE("flat map is empty for pfa < 0.5") {
    const auto m = RangeDopplerMap::from_power(std::vector<double>(64 * 64, 3.0), 64, 64);
    for (double pfa : {0.49, 0.4, 0.1, 1e-2, 1e-4, 1e-8}) {
      CfarConfig c;
      c.pfa = pfa;
      CHECK(cfar_detect(m, c).empty());
    }
  }
  SUBCASE("single dominant cell off zero Doppler") {
    std::vector<double> g(64 * 64, 1.0);
    g[30 * 64 + 40] = 100.0;
    const auto m = RangeDopplerMap::from_power(g, 64, 64);
    const auto d = cfar_detect(m, {});
    REQUIRE(d.size() == 1);
    CHECK(d[0].range_bin == 30);
    CHECK(d[0].doppler_bin == 8);
    CHECK(d[0].intensity == 100.0);
  }
  SUBCASE("dominant cell in the zero-Doppler band is not reported") {
    for (int bin : {-1, 0, 1}) {
      std::vector<double> g(64 * 64, 1.0);
      g[30 * 64 + 32 + bin] = 1000.0;
      CHECK(cfar_detect(RangeDopplerMap::from_power(g, 64, 64), {}).empty());
    }
  }
  SUBCASE("false-alarm rate on exponential noise") {
    CfarConfig c;
    c.pfa = 1e-3;
    const auto m = noise_map(1700, 64, 77);
    const double tested = 1700.0 * (64 - 3);
    const double rate = static_cast<double>(cfar_detect(m, c).size()) / tested;
    CHECK(tested >= 1e5);
    CHECK(rate >= 0.5e-3);
    CHECK(rate <= 2e-3);
  }
  SUBCASE("scale invariance") {
    const auto m = noise_map(200, 64, 3);
    const auto base = cfar_detect(m, {});
    for (double k : {0.01, 1.0, 100.0}) {
      auto scaled = m;
      for (auto& p : scaled.power) p *= k;
      const auto d = cfar_detect(scaled, {});
      REQUIRE(d.size() == base.size());
      for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(d[i].range_bin == base[i].range_bin);
        CHECK(d[i].doppler_bin == base[i].doppler_bin);
      }
    }
  }
  SUBCASE("lowering pfa never adds detections") {
    const auto m = noise_map(300, 64, 5);
    std::size_t prev = SIZE_MAX;
    for (double pfa : {0.3, 0.1, 1e-2, 1e-3, 1e-4, 1e-6}) {
      CfarConfig c;
      c.pfa = pfa;
      const auto n = cfar_detect(m, c).size();
      CHECK(n <= prev);
      prev = n;
    }
  }
  SUBCASE("errors") {
    const auto small = RangeDopplerMap::from_power(std::vector<double>(20 * 64, 1.0), 20, 64);
    CHECK_THROWS_AS(cfar_detect(small, {}), InvalidArgument);
    const auto m = RangeDopplerMap::from_power(std::vector<double>(64 * 64, 1.0), 64, 64);
    CfarConfig c;
    c.pfa = 1.5;
    CHECK_THROWS_AS(cfar_detect(m, c), InvalidArgument);
    c = {};
    c.training_cells = 0;
    CHECK_THROWS_AS(cfar_detect(m, c), InvalidArgument);
    c = {};
    c.guard_cells = -1;
    CHECK_THROWS_AS(cfar_detect(m, c), InvalidArgument);
    CHECK_THROWS_AS(RangeDopplerMap::from_power(std::vector<double>(10, 1.0), 4, 4), InvalidArgument);
  }
}

TEST_CASE("estimate_aoa") {
  const auto arr = radar::make_virtual_array(ChirpConfig{});
  SUBCASE("broadside") {
    const auto a = estimate_aoa(steering(0.0, 0.0), arr);
    CHECK(std::abs(a.azimuth) < 0.02);
    CHECK(std::abs(a.elevation) < 0.02);
  }
  SUBCASE("20 degrees azimuth") {
    CHECK(std::abs(estimate_aoa(steering(20 * kDeg, 0.0), arr).azimuth - 20 * kDeg) < 2 * kDeg);
  }
  SUBCASE("elevation from the row phase difference") {
    const auto a = estimate_aoa(steering(10 * kDeg, 15 * kDeg), arr);
    CHECK(std::abs(a.elevation - 15 * kDeg) < 1 * kDeg);
    CHECK(std::abs(a.azimuth - 10 * kDeg) < 2 * kDeg);
  }
  SUBCASE("two sources: the stronger wins") {
    auto strong = steering(-25 * kDeg, 0.0);
    const auto weak = steering(30 * kDeg, 0.0);
    for (std::size_t i = 0; i < strong.size(); ++i) strong[i] = 3.0 * strong[i] + weak[i];
    CHECK(std::abs(estimate_aoa(strong, arr).azimuth + 25 * kDeg) < 2 * kDeg);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(estimate_aoa(std::vector<cdouble>(12), arr), NoSignal);
    CHECK_THROWS_AS(estimate_aoa(std::vector<cdouble>(8, cdouble{1, 0}), arr), InvalidArgument);
  }
}

TEST_CASE("end-to-end on synthesized cubes") {
  const ChirpConfig cfg;
  SUBCASE("clutter-only scene gives no points") {
    const auto sc = scene::make_clutter_scene(11);
    for (double t0 : {0.0, 1.4}) CHECK(extract_points(radar::synthesize_frame(sc, cfg, t0, 0.1, 3)).empty());
  }
  SUBCASE("single moving scatterer") {
    const auto pts = extract_points(synth({{{0.0, 2.4, 0.0}, 0.8, 1.0}}));
    REQUIRE_FALSE(pts.empty());
    const auto p = strongest(pts);
    CHECK(std::abs(p.y - 2.4) <= 0.04);
    CHECK(std::abs(p.v - 0.8) <= cfg.velocity_resolution());
    CHECK(std::abs(p.x) < 0.05);
    for (const auto& q : pts) {
      // every detection is the same target's main lobe or sidelobes
      CHECK(std::abs(std::hypot(q.x, q.y, q.z) - 2.4) < 0.5);
      CHECK(q.intensity > 0.0);
    }
  }
  SUBCASE("range and velocity round trip") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> rr(0.5, 9.0), vv(-4.5, 4.5);
    for (int i = 0; i < 12; ++i) {
      const double r = rr(rng), v = vv(rng);
      const auto pts = extract_points(synth({{{0.0, r, 0.0}, v, 1.0}}));
      REQUIRE_FALSE(pts.empty());
      const auto p = strongest(pts);
      CHECK(std::abs(std::hypot(p.x, p.y, p.z) - r) <= cfg.range_resolution());
      CHECK(std::abs(p.v - v) <= cfg.velocity_resolution());
    }
  }
  SUBCASE("knock mid-tap") {
    const auto sc = scene::make_gesture_scene(scene::GestureClass::knock, {0.0, 2.4, 0.0}, 1);
    // frame start with the fastest vertical hand motion during the stroke
    double best_t = 0.0, best_v = 0.0, zlo = 1e9, zhi = -1e9;
    for (double t = 0.0; t <= 2.9; t += 0.1) {
      for (const auto& s : scene::sample_scene(sc, t)) {
        if (std::abs(s.radial_velocity) > best_v) {
          best_v = std::abs(s.radial_velocity);
          best_t = t;
        }
      }
    }
    for (double t = 0.0; t <= 3.0; t += 0.01) {
      for (const auto& tr : sc.hand_tracks) {
        zlo = std::min(zlo, tr.position(t).z);
        zhi = std::max(zhi, tr.position(t).z);
      }
    }
    const auto pts = extract_points(radar::synthesize_frame(sc, cfg, best_t, 0.1, 9));
    bool found = false;
    for (const auto& p : pts) found = found || (std::abs(p.v) > 0.2 && p.z >= zlo - 0.05 && p.z <= zhi + 0.05);
    CHECK(found);
  }
}

TEST_CASE("write_rd_csv writes one row per range bin") {
  const auto m = RangeDopplerMap::from_power(std::vector<double>(40 * 8, 0.5), 40, 8);
  const auto path = std::filesystem::temp_directory_path() / "mmgest_rd_test.csv";
  write_rd_csv(m, path);
  std::ifstream in(path);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 7);
  }
  CHECK(rows == 40);
  std::filesystem::remove(path);
}
