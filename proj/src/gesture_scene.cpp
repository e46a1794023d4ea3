#include "mmgest/gesture_scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <random>

#include "mmgest/errors.hpp"
#include "mmgest/seed.hpp"

namespace mmgest::scene {

namespace {

constexpr std::array<std::string_view, kGestureClassCount> kNames = {
    "knock", "left_swipe", "right_swipe", "rotate",
    "interference_tiny", "interference_walk_run", "clutter_only"};

constexpr std::array<std::string_view, kGestureClassCount> kPresets = {
    "knock", "left-swipe", "right-swipe", "rotate", "tiny", "walk-run", "clutter"};

constexpr double kPi = std::numbers::pi;
constexpr double kMaxFovAzimuth = 60.0 * kPi / 180.0;
constexpr std::uint64_t kClutterStream = 0xc1u;

// Quintic smoothstep: zero velocity and acceleration at both ends.
double ease(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

Vec3 lerp(const Vec3& a, const Vec3& b, double s) { return a + (b - a) * s; }

class Sampler {
 public:
  Sampler(std::uint64_t seed, double spread) : rng_(seed), spread_(spread) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double sigma) { return std::normal_distribution<double>(0.0, sigma)(rng_); }
  /// Multiplicative jitter in [1 - spread, 1 + spread].
  double vary() { return uniform(1.0 - spread_, 1.0 + spread_); }
  bool coin(double p) { return uniform(0.0, 1.0) < p; }

 private:
  std::mt19937_64 rng_;
  double spread_;
};

using StrokeFn = std::function<Vec3(double)>;

// Rest -> stroke(0) during raise, stroke(u) during the stroke, stroke(1) -> rest on return.
struct HandPath {
  Vec3 rest;
  PhaseTimes phases;
  StrokeFn stroke;

  Vec3 at(double t) const {
    const auto& p = phases;
    if (t <= p.raise_begin) return rest;
    if (t < p.stroke_begin) {
      return lerp(rest, stroke(0.0), ease((t - p.raise_begin) / (p.stroke_begin - p.raise_begin)));
    }
    if (t <= p.stroke_end) return stroke((t - p.stroke_begin) / (p.stroke_end - p.stroke_begin));
    if (t < p.return_end) {
      return lerp(stroke(1.0), rest, ease((t - p.stroke_end) / (p.return_end - p.stroke_end)));
    }
    return rest;
  }
};

struct StrokeSpec {
  std::vector<std::pair<Vec3, StrokeFn>> hands;  // (rest position, stroke)
  double stroke_duration = 1.0;
};

StrokeSpec knock_stroke(const Vec3& anchor, double scale, double raise_scale, Sampler& s) {
  const double raise = 0.30 * s.vary() * raise_scale;
  const double depth = 0.12 * s.vary() * scale;
  const double lean = 0.3;  // forward travel per unit of downward travel
  const Vec3 top = anchor + Vec3{0.0, 0.0, raise};
  StrokeFn fn = [top, depth, lean](double u) {
    const double down = 0.5 * (1.0 - std::cos(4.0 * kPi * u));  // two taps
    return top + Vec3{0.0, -lean * depth * down, -depth * down};
  };
  return {{{anchor, fn}}, 0.9 * s.vary()};
}

StrokeSpec swipe_stroke(const Vec3& anchor, double direction, double scale, double raise_scale,
                        Sampler& s) {
  const double raise = 0.30 * s.vary() * raise_scale;
  const double width = 0.5 * s.vary() * scale;
  const double arc = 0.15 * s.vary() * scale;
  const Vec3 start = anchor + Vec3{-direction * width / 2.0, 0.0, raise};
  StrokeFn fn = [start, direction, width, arc](double u) {
    const double e = ease(u);
    return start + Vec3{direction * width * e, -arc * std::sin(kPi * e), 0.0};
  };
  return {{{anchor, fn}}, 0.7 * s.vary()};
}

StrokeSpec rotate_stroke(const Vec3& anchor, double scale, double raise_scale, int hands, Sampler& s) {
  const double raise = 0.25 * s.vary() * raise_scale;
  const double radius = 0.10 * s.vary() * scale;
  const double revolutions = 3.0;
  StrokeSpec spec;
  spec.stroke_duration = 1.4 * s.vary();
  for (int h = 0; h < hands; ++h) {
    const double lateral = hands == 1 ? 0.0 : (h == 0 ? 0.08 : -0.08);
    const double phase = h * kPi;  // hands alternate up and down
    const Vec3 rest = anchor + Vec3{lateral, 0.0, 0.0};
    const Vec3 center = rest + Vec3{0.0, 0.0, raise};
    StrokeFn fn = [center, radius, revolutions, phase](double u) {
      const double theta = 2.0 * kPi * revolutions * ease(u) + phase;
      return center + Vec3{0.0, -radius * std::sin(theta), radius * std::cos(theta)};
    };
    spec.hands.emplace_back(rest, fn);
  }
  return spec;
}

StrokeSpec stroke_for(GestureClass label, const Vec3& anchor, double scale, double raise_scale,
                      int rotate_hands, Sampler& s) {
  switch (label) {
    case GestureClass::knock: return knock_stroke(anchor, scale, raise_scale, s);
    case GestureClass::left_swipe: return swipe_stroke(anchor, -1.0, scale, raise_scale, s);
    case GestureClass::right_swipe: return swipe_stroke(anchor, 1.0, scale, raise_scale, s);
    case GestureClass::rotate: return rotate_stroke(anchor, scale, raise_scale, rotate_hands, s);
    default: throw InvalidArgument("no stroke model for label " + std::string(to_string(label)));
  }
}

std::vector<ScattererTrack> hand_cluster(const std::shared_ptr<const HandPath>& path, int count,
                                         double sigma, double duration, Sampler& s) {
  std::vector<ScattererTrack> tracks;
  tracks.reserve(count);
  for (int i = 0; i < count; ++i) {
    const Vec3 offset{s.normal(sigma), s.normal(sigma), s.normal(sigma)};
    const double rcs = 0.1 * s.uniform(0.5, 1.5);
    tracks.push_back({[path, offset](double t) { return path->at(t) + offset; }, rcs, 0.0, duration});
  }
  return tracks;
}

// Walking or running person crossing the scene: torso, swinging arms and legs.
std::vector<ScattererTrack> walker_tracks(double duration, Sampler& s) {
  const bool run = s.coin(0.5);
  const bool lateral = s.coin(0.6);
  double speed = run ? s.uniform(2.0, 3.0) : s.uniform(0.8, 1.4);
  const double stride_hz = run ? 1.4 : 0.9;
  const double arm_swing = run ? 0.30 : 0.25;
  const double leg_swing = run ? 0.30 : 0.22;

  Vec3 start;
  Vec3 heading;
  if (lateral) {
    const double dir = s.coin(0.5) ? 1.0 : -1.0;
    start = {-dir * speed * duration / 2.0 + s.uniform(-0.3, 0.3), s.uniform(2.5, 5.0), 0.0};
    heading = {dir, 0.0, 0.0};
  } else {
    speed = std::min(speed, 1.6);
    const bool approach = s.coin(0.5);
    const double x = s.uniform(-1.0, 1.0);
    start = {x, approach ? 7.0 : 1.5, 0.0};
    heading = {0.0, approach ? -1.0 : 1.0, 0.0};
  }
  const Vec3 side{heading.y, -heading.x, 0.0};
  const double gait_phase = s.uniform(0.0, 2.0 * kPi);

  auto body = [start, heading, speed, stride_hz, gait_phase](double t) {
    const double bob = 0.03 * std::sin(4.0 * kPi * stride_hz * t + gait_phase);
    return start + heading * (speed * t) + Vec3{0.0, 0.0, bob};
  };

  std::vector<ScattererTrack> tracks;
  for (int i = 0; i < 6; ++i) {
    const double across = s.normal(0.12);
    const double along = s.normal(0.08);
    const double height = -0.2 + s.normal(0.25);
    const Vec3 off = side * across + heading * along + Vec3{0.0, 0.0, height};
    tracks.push_back({[body, off](double t) { return body(t) + off; }, s.uniform(0.2, 0.5), 0.0, duration});
  }
  for (int limb = 0; limb < 4; ++limb) {
    const bool arm = limb < 2;
    const double sign = (limb % 2 == 0) ? 1.0 : -1.0;
    const double swing = arm ? arm_swing : leg_swing;
    // Arms swing opposite to the leg on the same side.
    const double phase = gait_phase + (sign > 0 ? 0.0 : kPi) + (arm ? kPi : 0.0);
    const Vec3 mount = side * (arm ? 0.25 * sign : 0.1 * sign) + Vec3{0.0, 0.0, arm ? -0.25 : -0.8};
    tracks.push_back({[body, mount, heading, swing, stride_hz, phase](double t) {
                        return body(t) + mount + heading * (swing * std::sin(2.0 * kPi * stride_hz * t + phase));
                      },
                      arm ? 0.1 : 0.15, 0.0, duration});
  }
  return tracks;
}

void check_anchor(const Vec3& anchor) {
  const double r = anchor.norm();
  if (!(anchor.y > 0.0) || r > kMaxSceneRange || std::abs(std::atan2(anchor.x, anchor.y)) > kMaxFovAzimuth) {
    throw InvalidArgument("anchor outside the radar field of view");
  }
}

void check_bounds(const GestureScene& scene) {
  auto check = [&](const ScattererTrack& tr) {
    for (double t = tr.birth; t <= tr.death + 1e-12; t += 0.01) {
      const double r = tr.position(std::min(t, tr.death)).norm();
      if (!(r > 0.0) || r > kMaxSceneRange) {
        throw InvalidArgument("scene leaves the unambiguous range (r=" + std::to_string(r) + " m)");
      }
    }
  };
  for (const auto& tr : scene.hand_tracks) check(tr);
  for (const auto& tr : scene.clutter_tracks) check(tr);
}

}  // namespace

std::string_view to_string(GestureClass label) { return kNames.at(static_cast<std::size_t>(label)); }

GestureClass parse_gesture_class(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<GestureClass>(i);
  }
  throw InvalidArgument("unknown gesture class '" + std::string(name) + "'");
}

std::string_view preset_name(GestureClass label) { return kPresets.at(static_cast<std::size_t>(label)); }

GestureClass parse_preset(std::string_view name) {
  for (std::size_t i = 0; i < kPresets.size(); ++i) {
    if (kPresets[i] == name) return static_cast<GestureClass>(i);
  }
  throw InvalidArgument("unknown scene preset '" + std::string(name) + "'");
}

GestureScene make_gesture_scene(GestureClass label, const Vec3& anchor, std::uint64_t seed,
                                const SceneOptions& options) {
  if (label == GestureClass::clutter_only || static_cast<int>(label) < 0 ||
      static_cast<int>(label) >= kGestureClassCount) {
    throw InvalidArgument("make_gesture_scene needs a gesture or interference label");
  }
  check_anchor(anchor);

  Sampler s(seed, options.variation);
  GestureScene scene;
  scene.label = label;
  scene.anchor = anchor;
  scene.seed = seed;
  scene.duration = options.duration;

  if (label == GestureClass::interference_walk_run) {
    scene.hand_tracks = walker_tracks(options.duration, s);
  } else {
    StrokeSpec spec;
    if (label == GestureClass::interference_tiny) {
      // Small, barely raised imitation of one of the four gestures.
      const auto base = static_cast<GestureClass>(static_cast<int>(s.uniform(0.0, 4.0)) % 4);
      const double scale = s.uniform(0.15, 0.3);
      spec = stroke_for(base, anchor, scale, 0.25, 1, s);
    } else {
      spec = stroke_for(label, anchor, 1.0, 1.0, 2, s);
    }
    PhaseTimes ph;
    ph.raise_begin = s.uniform(0.1, 0.3);
    ph.stroke_begin = ph.raise_begin + 0.4 * s.vary();
    ph.stroke_end = ph.stroke_begin + spec.stroke_duration;
    ph.return_end = ph.stroke_end + 0.4 * s.vary();
    if (ph.return_end > options.duration) {
      throw InvalidArgument("gesture does not fit in the capture window");
    }
    scene.phases = ph;
    for (auto& [rest, stroke] : spec.hands) {
      auto path = std::make_shared<const HandPath>(HandPath{rest, ph, std::move(stroke)});
      auto cluster = hand_cluster(path, options.scatterers_per_hand, options.jitter_sigma, options.duration, s);
      scene.hand_tracks.insert(scene.hand_tracks.end(), cluster.begin(), cluster.end());
    }
  }

  scene.clutter_tracks = make_clutter(options.clutter_count, options.clutter_extent, derive_seed(seed, kClutterStream));
  for (auto& tr : scene.clutter_tracks) tr.death = options.duration;
  check_bounds(scene);
  return scene;
}

std::vector<ScattererTrack> make_clutter(int n, const Box& extent, std::uint64_t seed) {
  if (n < 0) throw InvalidArgument("clutter count must be non-negative");
  if (!(extent.hi.x > extent.lo.x && extent.hi.y > extent.lo.y && extent.hi.z > extent.lo.z)) {
    throw InvalidArgument("clutter extent has zero volume");
  }
  const double far_x = std::max(std::abs(extent.lo.x), std::abs(extent.hi.x));
  const double far_y = std::max(std::abs(extent.lo.y), std::abs(extent.hi.y));
  const double far_z = std::max(std::abs(extent.lo.z), std::abs(extent.hi.z));
  if (Vec3{far_x, far_y, far_z}.norm() > kMaxSceneRange || extent.lo.y <= 0.0) {
    throw InvalidArgument("clutter extent exceeds the unambiguous range");
  }

  Sampler s(seed, 0.0);
  std::vector<ScattererTrack> tracks;
  tracks.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Vec3 p{s.uniform(extent.lo.x, extent.hi.x), s.uniform(extent.lo.y, extent.hi.y),
                 s.uniform(extent.lo.z, extent.hi.z)};
    const double rcs = 0.3 * std::pow(10.0, s.uniform(0.0, 1.0));
    tracks.push_back({[p](double) { return p; }, rcs, 0.0, kCaptureWindow});
  }
  return tracks;
}

GestureScene make_clutter_scene(std::uint64_t seed, const SceneOptions& options) {
  GestureScene scene;
  scene.label = GestureClass::clutter_only;
  scene.seed = seed;
  scene.duration = options.duration;
  scene.clutter_tracks = make_clutter(options.clutter_count, options.clutter_extent, derive_seed(seed, kClutterStream));
  for (auto& tr : scene.clutter_tracks) tr.death = options.duration;
  return scene;
}

double radial_velocity(const ScattererTrack& track, double t) {
  constexpr double h = 1e-4;
  const double t1 = std::max(track.birth, t - h);
  const double t2 = std::min(track.death, t + h);
  if (!(t2 > t1)) return 0.0;
  return (track.position(t2).norm() - track.position(t1).norm()) / (t2 - t1);
}

std::vector<ScatterSample> sample_scene(const GestureScene& scene, double t) {
  if (!(t >= 0.0 && t <= scene.duration)) {
    throw OutOfRange("sample time " + std::to_string(t) + " s outside the scene duration");
  }
  std::vector<ScatterSample> out;
  out.reserve(scene.hand_tracks.size() + scene.clutter_tracks.size());
  auto add = [&](const ScattererTrack& tr) {
    if (!tr.alive(t)) return;
    out.push_back({tr.position(t), radial_velocity(tr, t), tr.rcs});
  };
  for (const auto& tr : scene.hand_tracks) add(tr);
  for (const auto& tr : scene.clutter_tracks) add(tr);
  return out;
}

std::string serialize_scene(const GestureScene& scene, double dt) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "label=%s seed=%llu duration=%.17g anchor=%.17g,%.17g,%.17g\n",
                std::string(to_string(scene.label)).c_str(), static_cast<unsigned long long>(scene.seed),
                scene.duration, scene.anchor.x, scene.anchor.y, scene.anchor.z);
  out += buf;
  auto dump = [&](const char* kind, const std::vector<ScattererTrack>& tracks) {
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      const auto& tr = tracks[i];
      std::snprintf(buf, sizeof buf, "%s %zu rcs=%.17g life=%.17g,%.17g\n", kind, i, tr.rcs, tr.birth, tr.death);
      out += buf;
      const int steps = static_cast<int>(std::floor((tr.death - tr.birth) / dt + 1e-9));
      for (int k = 0; k <= steps; ++k) {
        const Vec3 p = tr.position(tr.birth + k * dt);
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x, p.y, p.z);
        out += buf;
      }
    }
  };
  dump("hand", scene.hand_tracks);
  dump("clutter", scene.clutter_tracks);
  return out;
}

}  // namespace mmgest::scene
