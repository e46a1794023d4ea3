#include "doctest.h"

#include <cmath>

#include "mmgest/errors.hpp"
#include "mmgest/gesture_scene.hpp"
#include "mmgest/radar_frontend.hpp"

using namespace mmgest;
using namespace mmgest::scene;

namespace {

const Vec3 kAnchor{0.0, 2.4, 0.0};

Vec3 centroid(const std::vector<ScattererTrack>& tracks, double t) {
  Vec3 c{};
  int n = 0;
  for (const auto& tr : tracks) {
    if (!tr.alive(t)) continue;
    c = c + tr.position(t);
    ++n;
  }
  return n ? c * (1.0 / n) : c;
}

}  // namespace

TEST_CASE("knock: two down-up taps, little x-y drift") {
  const auto sc = make_gesture_scene(GestureClass::knock, kAnchor, 1);
  REQUIRE(sc.hand_tracks.size() == 10);
  const auto& tr = sc.hand_tracks.front();
  const double dt = 0.005;
  int rises = 0;
  double prev_vz = 0.0;
  for (double t = dt; t <= sc.duration - dt; t += dt) {
    const double vz = (tr.position(t + dt).z - tr.position(t - dt).z) / (2 * dt);
    if (prev_vz < -1e-3 && vz > 1e-3) ++rises;
    if (std::abs(vz) > 1e-3) prev_vz = vz;
  }
  // only the - to + turns count taps; the final lowering is a + to - turn
  CHECK(rises == 2);
  const Vec3 p0 = tr.position(0.0);
  double drift = 0.0;
  for (double t = 0.0; t <= sc.duration; t += dt) {
    const Vec3 p = tr.position(t);
    drift = std::max(drift, std::hypot(p.x - p0.x, p.y - p0.y));
  }
  CHECK(drift < 0.05);
}

TEST_CASE("left swipe moves more than 30 cm toward -x, monotonically during the stroke") {
  const auto sc = make_gesture_scene(GestureClass::left_swipe, kAnchor, 7);
  REQUIRE(sc.phases.has_value());
  const auto ph = *sc.phases;
  const auto& tr = sc.hand_tracks.front();
  CHECK(tr.position(ph.stroke_end).x - tr.position(ph.stroke_begin).x < -0.3);
  double prev = tr.position(ph.stroke_begin).x;
  for (double t = ph.stroke_begin; t <= ph.stroke_end; t += 0.01) {
    const double x = tr.position(t).x;
    CHECK(x <= prev + 1e-12);
    prev = x;
  }
}

TEST_CASE("left and right swipes have opposite stroke displacement") {
  for (std::uint64_t seed : {1, 2, 3, 11}) {
    const auto l = make_gesture_scene(GestureClass::left_swipe, kAnchor, seed);
    const auto r = make_gesture_scene(GestureClass::right_swipe, kAnchor, seed);
    auto stroke_dx = [](const GestureScene& s) {
      const auto c0 = centroid(s.hand_tracks, s.phases->stroke_begin);
      const auto c1 = centroid(s.hand_tracks, s.phases->stroke_end);
      return c1.x - c0.x;
    };
    CHECK(stroke_dx(l) < 0.0);
    CHECK(stroke_dx(r) > 0.0);
  }
}

TEST_CASE("rotate uses two hands") {
  const auto sc = make_gesture_scene(GestureClass::rotate, kAnchor, 5);
  CHECK(sc.hand_tracks.size() == 20);
}

TEST_CASE("determinism: same inputs give byte-identical serializations") {
  for (int g = 0; g < 6; ++g) {
    const auto label = static_cast<GestureClass>(g);
    const auto a = serialize_scene(make_gesture_scene(label, kAnchor, 99));
    const auto b = serialize_scene(make_gesture_scene(label, kAnchor, 99));
    CHECK(a == b);
    CHECK(a != serialize_scene(make_gesture_scene(label, kAnchor, 100)));
  }
}

TEST_CASE("physical bounds: range within 9.62 m and speed below the Doppler limit") {
  const radar::ChirpConfig cfg;
  const double vmax = cfg.max_unambiguous_velocity();
  for (int g = 0; g < 6; ++g) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      for (const Vec3& anchor : {kAnchor, Vec3{0.0, 1.8, 0.0}}) {
        const auto sc = make_gesture_scene(static_cast<GestureClass>(g), anchor, seed);
        for (double t = 0.0; t <= sc.duration; t += 0.05) {
          for (const auto& s : sample_scene(sc, t)) {
            const double r = s.position.norm();
            CHECK(r > 0.0);
            CHECK(r <= kMaxSceneRange);
            CHECK(std::abs(s.radial_velocity) < vmax);
          }
        }
      }
    }
  }
}

TEST_CASE("clutter_only label and anchors outside the field of view are rejected") {
  CHECK_THROWS_AS(make_gesture_scene(GestureClass::clutter_only, kAnchor, 1), InvalidArgument);
  CHECK_THROWS_AS(make_gesture_scene(GestureClass::knock, {0.0, -1.0, 0.0}, 1), InvalidArgument);
  CHECK_THROWS_AS(make_gesture_scene(GestureClass::knock, {0.0, 12.0, 0.0}, 1), InvalidArgument);
  CHECK_THROWS_AS(make_gesture_scene(static_cast<GestureClass>(42), kAnchor, 1), InvalidArgument);
}

TEST_CASE("label and preset names round-trip") {
  for (int g = 0; g < kGestureClassCount; ++g) {
    const auto label = static_cast<GestureClass>(g);
    CHECK(parse_gesture_class(to_string(label)) == label);
    CHECK(parse_preset(preset_name(label)) == label);
  }
  CHECK(preset_name(GestureClass::left_swipe) == "left-swipe");
  CHECK_THROWS_AS(parse_preset("wave"), InvalidArgument);
  CHECK_THROWS_AS(parse_gesture_class("wave"), InvalidArgument);
}

TEST_CASE("make_clutter") {
  const Box box{{1.0, 0.5, -0.5}, {2.0, 1.5, 0.5}};
  SUBCASE("zero count") { CHECK(make_clutter(0, box, 1).empty()); }
  SUBCASE("static tracks have zero radial velocity") {
    const auto tracks = make_clutter(5, box, 3);
    REQUIRE(tracks.size() == 5);
    for (const auto& tr : tracks) {
      for (double t : {0.0, 0.7, 1.5, 3.0}) CHECK(radial_velocity(tr, t) == 0.0);
      CHECK(tr.rcs > 0.0);
    }
  }
  SUBCASE("positions stay inside a room-sized extent") {
    const Box room{{-2.5, 1.0, -1.0}, {2.5, 6.0, 1.0}};
    for (const auto& tr : make_clutter(100, room, 9)) CHECK(room.contains(tr.position(1.0)));
  }
  SUBCASE("rcs spans at most one decade") {
    double lo = 1e9, hi = 0.0;
    for (const auto& tr : make_clutter(200, box, 4)) {
      lo = std::min(lo, tr.rcs);
      hi = std::max(hi, tr.rcs);
    }
    CHECK(hi / lo <= 10.0 + 1e-9);
  }
  SUBCASE("deterministic per seed") {
    const auto a = make_clutter(3, box, 5), b = make_clutter(3, box, 5);
    for (int i = 0; i < 3; ++i) {
      CHECK(a[i].position(0.0) == b[i].position(0.0));
      CHECK(a[i].rcs == b[i].rcs);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(make_clutter(-1, box, 1), InvalidArgument);
    CHECK_THROWS_AS(make_clutter(3, Box{{1, 1, 0}, {2, 2, 0}}, 1), InvalidArgument);
    CHECK_THROWS_AS(make_clutter(3, Box{{0, 1, 0}, {1, 20, 1}}, 1), InvalidArgument);
  }
}

TEST_CASE("sample_scene") {
  SUBCASE("outward motion at 0.5 m/s") {
    GestureScene sc;
    sc.label = GestureClass::knock;
    sc.hand_tracks.push_back({[](double t) { return Vec3{0.0, 1.0 + 0.5 * t, 0.0}; }, 1.0, 0.0, 3.0});
    const auto s = sample_scene(sc, 1.2);
    REQUIRE(s.size() == 1);
    CHECK(s[0].radial_velocity == doctest::Approx(0.5).epsilon(1e-6));
  }
  SUBCASE("cardinality: 10 hand + 5 clutter") {
    auto sc = make_gesture_scene(GestureClass::knock, kAnchor, 1);
    sc.clutter_tracks = make_clutter(5, Box{{-1, 3, -1}, {1, 5, 1}}, 2);
    CHECK(sample_scene(sc, 1.0).size() == 15);
  }
  SUBCASE("clutter scene has no hands") {
    const auto sc = make_clutter_scene(4);
    CHECK(sc.hand_tracks.empty());
    CHECK(sc.label == GestureClass::clutter_only);
    for (const auto& s : sample_scene(sc, 2.0)) CHECK(s.radial_velocity == 0.0);
  }
  SUBCASE("time outside the capture window") {
    const auto sc = make_gesture_scene(GestureClass::rotate, kAnchor, 1);
    CHECK_THROWS_AS(sample_scene(sc, -0.01), OutOfRange);
    CHECK_THROWS_AS(sample_scene(sc, 3.01), OutOfRange);
    CHECK_NOTHROW(sample_scene(sc, 3.0));
  }
}

TEST_CASE("scene duration covers the 3 s capture and the hand moves") {
  for (int g = 0; g < 6; ++g) {
    const auto sc = make_gesture_scene(static_cast<GestureClass>(g), kAnchor, 3);
    CHECK(sc.duration == doctest::Approx(3.0));
    CHECK_FALSE(sc.hand_tracks.empty());
    double peak = 0.0;
    for (double t = 0.0; t <= 3.0; t += 0.05) {
      for (const auto& s : sample_scene(sc, t)) peak = std::max(peak, std::abs(s.radial_velocity));
    }
    CHECK(peak > 0.1);
  }
}
