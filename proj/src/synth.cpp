#include "gaitrec/synth.hpp"

#include <cmath>
#include <numbers>

namespace gaitrec {

namespace {

constexpr std::size_t kCanvasH = 360;
constexpr std::size_t kCanvasW = 300;

struct Body {
  double height;            // crown to ground, canvas pixels
  double head_radius;       // fractions of height below
  double torso_half_width;
  double torso_len;
  double leg_thickness;
  double arm_thickness;
  double arm_len;
  double stride_amplitude;  // max thigh swing, radians
  double arm_swing;         // radians
  double knee_bend;         // shin flexion factor
  double leg_asymmetry;     // second leg's amplitude scale
  double step_phase_lag;    // second leg's extra phase beyond pi; together
                            // with the amplitude asymmetry this makes the two
                            // steps of a cycle distinguishable
  double bob_amplitude;
};

Body sample_body(Rng& rng) {
  auto u = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  Body b;
  b.height = u(300.0, 340.0);
  b.head_radius = u(0.050, 0.085) * b.height;
  b.torso_half_width = u(0.055, 0.115) * b.height;
  b.torso_len = u(0.28, 0.38) * b.height;
  b.leg_thickness = u(0.030, 0.048) * b.height;
  b.arm_thickness = u(0.020, 0.032) * b.height;
  b.arm_len = u(0.26, 0.34) * b.height;
  b.stride_amplitude = u(0.28, 0.55);
  b.arm_swing = u(0.35, 0.85) * b.stride_amplitude;
  b.knee_bend = u(0.25, 0.55);
  b.leg_asymmetry = u(0.80, 0.92);
  b.step_phase_lag = u(0.30, 0.60);
  b.bob_amplitude = u(0.004, 0.016) * b.height;
  return b;
}

struct Canvas {
  std::vector<std::uint8_t> px;
  Canvas() : px(kCanvasH * kCanvasW, 0) {}

  void capsule(double x0, double y0, double x1, double y1, double r) {
    const double minx = std::min(x0, x1) - r, maxx = std::max(x0, x1) + r;
    const double miny = std::min(y0, y1) - r, maxy = std::max(y0, y1) + r;
    const auto cx0 = static_cast<std::ptrdiff_t>(std::floor(minx));
    const auto cx1 = static_cast<std::ptrdiff_t>(std::ceil(maxx));
    const auto cy0 = static_cast<std::ptrdiff_t>(std::floor(miny));
    const auto cy1 = static_cast<std::ptrdiff_t>(std::ceil(maxy));
    const double dx = x1 - x0, dy = y1 - y0;
    const double len2 = dx * dx + dy * dy;
    for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(cy0, 0);
         y <= std::min<std::ptrdiff_t>(cy1, kCanvasH - 1); ++y) {
      for (std::ptrdiff_t x = std::max<std::ptrdiff_t>(cx0, 0);
           x <= std::min<std::ptrdiff_t>(cx1, kCanvasW - 1); ++x) {
        double t = 0.0;
        if (len2 > 0.0)
          t = std::clamp(((x - x0) * dx + (y - y0) * dy) / len2, 0.0, 1.0);
        const double px_ = x0 + t * dx - x, py_ = y0 + t * dy - y;
        if (px_ * px_ + py_ * py_ <= r * r) px[static_cast<std::size_t>(y) * kCanvasW + x] = 1;
      }
    }
  }

  void ellipse(double cx, double cy, double rx, double ry) {
    const auto x0 = static_cast<std::ptrdiff_t>(std::floor(cx - rx));
    const auto x1 = static_cast<std::ptrdiff_t>(std::ceil(cx + rx));
    const auto y0 = static_cast<std::ptrdiff_t>(std::floor(cy - ry));
    const auto y1 = static_cast<std::ptrdiff_t>(std::ceil(cy + ry));
    for (std::ptrdiff_t y = std::max<std::ptrdiff_t>(y0, 0);
         y <= std::min<std::ptrdiff_t>(y1, kCanvasH - 1); ++y) {
      for (std::ptrdiff_t x = std::max<std::ptrdiff_t>(x0, 0);
           x <= std::min<std::ptrdiff_t>(x1, kCanvasW - 1); ++x) {
        const double nx = (x - cx) / rx, ny = (y - cy) / ry;
        if (nx * nx + ny * ny <= 1.0) px[static_cast<std::size_t>(y) * kCanvasW + x] = 1;
      }
    }
  }
};

SilhouetteFrame render_walker(const Body& b, double phase) {
  Canvas canvas;
  const double ground = kCanvasH - 8.0;
  // |cos| bobs twice per cycle, once per step.
  const double bob = b.bob_amplitude * std::abs(std::cos(phase));
  // Everything hangs off the hip; total height is head + torso + legs.
  const double leg_len = b.height - b.torso_len - 2.0 * b.head_radius - 6.0;
  const double hip_y = ground - leg_len - bob;
  const double cx = kCanvasW / 2.0;
  const double shoulder_y = hip_y - b.torso_len;

  // Torso and head.
  canvas.ellipse(cx, (hip_y + shoulder_y) / 2.0, b.torso_half_width,
                 b.torso_len / 2.0 + b.leg_thickness * 0.5);
  canvas.ellipse(cx, shoulder_y - 4.0 - b.head_radius, b.head_radius * 0.9, b.head_radius);

  // Two legs, half a cycle apart. Thigh swings sinusoidally; the shin flexes
  // when the leg is behind the body.
  const double thigh_len = leg_len * 0.52;
  const double shin_len = leg_len * 0.48;
  for (int leg = 0; leg < 2; ++leg) {
    const double amp = b.stride_amplitude * (leg == 0 ? 1.0 : b.leg_asymmetry);
    const double leg_phase = phase + (leg == 0 ? 0.0 : std::numbers::pi + b.step_phase_lag);
    const double a = amp * std::sin(leg_phase);
    const double knee_x = cx + thigh_len * std::sin(a);
    const double knee_y = hip_y + thigh_len * std::cos(a);
    const double flex = b.knee_bend * amp * std::max(0.0, -std::sin(leg_phase));
    const double shin_a = a + flex;
    const double foot_x = knee_x + shin_len * std::sin(shin_a);
    const double foot_y = knee_y + shin_len * std::cos(shin_a);
    canvas.capsule(cx, hip_y, knee_x, knee_y, b.leg_thickness);
    canvas.capsule(knee_x, knee_y, foot_x, foot_y, b.leg_thickness * 0.85);
  }

  // Arms swing opposite the same-side leg.
  for (int arm = 0; arm < 2; ++arm) {
    const double a = b.arm_swing *
                     std::sin(phase + (arm == 0 ? std::numbers::pi : b.step_phase_lag));
    const double hand_x = cx + b.arm_len * std::sin(a);
    const double hand_y = shoulder_y + b.arm_len * std::cos(a);
    canvas.capsule(cx, shoulder_y + 2.0, hand_x, hand_y, b.arm_thickness);
  }

  BinaryGrid grid;
  grid.height = kCanvasH;
  grid.width = kCanvasW;
  grid.pixels = std::move(canvas.px);
  return normalize_frame(grid);
}

}  // namespace

std::vector<GaitSequence> synth_corpus(const SynthConfig& config) {
  require(config.subjects >= 2, "synth_corpus: subjects must be >= 2");
  require(config.period >= 8, "synth_corpus: period must be >= 8");
  require(config.cycles_per_subject >= 1, "synth_corpus: cycles_per_subject must be >= 1");

  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<GaitSequence> corpus;
  corpus.reserve(config.subjects);
  for (std::size_t s = 0; s < config.subjects; ++s) {
    Rng rng(mix_seed(config.seed, s));
    const Body body = sample_body(rng);

    GaitSequence seq;
    char sid[16];
    std::snprintf(sid, sizeof(sid), "s%03zu", s);
    seq.subject_id = sid;
    seq.sequence_id = "walk0";
    seq.frames.reserve(config.cycles_per_subject * config.period);
    std::normal_distribution<double> noise(0.0, config.jitter);
    for (std::size_t c = 0; c < config.cycles_per_subject; ++c) {
      const double phase_jitter = config.jitter > 0.0 ? noise(rng) : 0.0;
      const double amp_jitter = config.jitter > 0.0 ? noise(rng) : 0.0;
      Body cycle_body = body;
      cycle_body.stride_amplitude *= 1.0 + amp_jitter;
      for (std::size_t t = 0; t < config.period; ++t) {
        const double phase =
            two_pi * (static_cast<double>(t) / static_cast<double>(config.period) + phase_jitter);
        seq.frames.push_back(render_walker(cycle_body, phase));
      }
      seq.cycle_boundaries.push_back({c * config.period, (c + 1) * config.period});
    }
    corpus.push_back(std::move(seq));
  }
  return corpus;
}

}  // namespace gaitrec
