#include "selftrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <map>
#include <set>
#include <stdexcept>

#include "selftrack/patch_io.hpp"

namespace selftrack {

void SynthSpec::validate() const {
  if (frames <= 0) throw std::invalid_argument("synth: frames must be positive");
  if (scene_width <= 0.0 || scene_height <= 0.0) throw std::invalid_argument("synth: scene must be non-empty");
  if (patch_channels != 1 && patch_channels != 3) throw std::invalid_argument("synth: patches have 1 or 3 channels");
  if (patch_height <= 0 || patch_width <= 0) throw std::invalid_argument("synth: patch size must be positive");
  if (!(occlusion_coverage > 0.0)) throw std::invalid_argument("synth: occlusion_coverage must be positive");
  if (!(match_decay > 0.0 && match_decay <= 1.0)) throw std::invalid_argument("synth: match_decay must be in (0,1]");
  if (match_gap < 0) throw std::invalid_argument("synth: match_gap must be non-negative");
  if (box_noise < 0.0 || score_noise < 0.0 || illumination < 0.0 || pixel_noise < 0.0 || gait_period < 0.0) {
    throw std::invalid_argument("synth: noise levels must be non-negative");
  }
  std::set<long> ids;
  for (const auto& id : identities) {
    if (id.id <= 0) throw std::invalid_argument("synth: identity ids must be positive");
    if (!ids.insert(id.id).second) throw std::invalid_argument("synth: duplicate identity id " + std::to_string(id.id));
    if (!(id.width > 0.0 && id.height > 0.0)) throw std::invalid_argument("synth: identity boxes must be non-empty");
    const int last = id.last_frame == 0 ? frames : id.last_frame;
    if (id.first_frame < 1 || last > frames || id.first_frame > last) {
      throw std::invalid_argument("synth: identity " + std::to_string(id.id) + " has an invalid frame range");
    }
    if (motion == Motion::Sinusoidal && !(id.period > 0.0)) throw std::invalid_argument("synth: period must be positive");
  }
  for (const auto& w : occlusions) {
    if (!ids.count(w.id)) throw std::invalid_argument("synth: occlusion refers to unknown identity " + std::to_string(w.id));
    if (w.first < 1 || w.last < w.first || w.last > frames) {
      throw std::invalid_argument("synth: occlusion window for identity " + std::to_string(w.id) + " is invalid");
    }
  }
}

namespace {

const std::array<std::array<double, 3>, 8> kColours{{{0.85, 0.15, 0.15},
                                                    {0.15, 0.55, 0.85},
                                                    {0.2, 0.7, 0.25},
                                                    {0.9, 0.8, 0.2},
                                                    {0.55, 0.25, 0.7},
                                                    {0.95, 0.5, 0.1},
                                                    {0.1, 0.1, 0.1},
                                                    {0.9, 0.9, 0.9}}};

}  // namespace

SynthSpec SynthSpec::random(int count, int frames, std::uint64_t seed, Motion motion, int palette) {
  if (count < 0 || palette < 1) throw std::invalid_argument("synth: count and palette must be positive");
  palette = std::min<int>(palette, static_cast<int>(kColours.size()));
  SynthSpec spec;
  spec.frames = frames;
  spec.motion = motion;
  spec.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> colour(0, palette - 1);
  for (int i = 0; i < count; ++i) {
    IdentitySpec id;
    id.id = i + 1;
    id.width = 34.0 + 12.0 * u(rng);
    id.height = id.width * (2.1 + 0.3 * u(rng));
    // start near one side, walk across so that paths cross
    const bool leftwards = u(rng) < 0.5;
    const double lane = (i + 0.5) / std::max(count, 1);
    id.x0 = leftwards ? spec.scene_width * (0.6 + 0.3 * u(rng)) : spec.scene_width * (0.1 + 0.3 * u(rng));
    id.y0 = (spec.scene_height - id.height) * (0.15 + 0.7 * lane) * (0.9 + 0.2 * u(rng));
    const double speed = (0.6 + 1.4 * u(rng)) * (leftwards ? -1.0 : 1.0);
    id.vx = speed * 100.0 / std::max(frames, 1) * 1.5;
    id.vy = (u(rng) - 0.5) * 0.6;
    id.amplitude = motion == Motion::Sinusoidal ? 8.0 + 12.0 * u(rng) : 0.0;
    id.period = 30.0 + 30.0 * u(rng);
    id.phase = 2.0 * std::numbers::pi * u(rng);
    id.head = {0.75 + 0.2 * u(rng), 0.55 + 0.2 * u(rng), 0.45 + 0.2 * u(rng)};
    id.upper = kColours[colour(rng)];
    id.lower = kColours[colour(rng)];
    id.stripe_frequency = u(rng) < 0.5 ? 0.0 : 4.0 + 6.0 * u(rng);
    id.stripe_contrast = id.stripe_frequency > 0.0 ? 0.25 + 0.2 * u(rng) : 0.0;
    spec.identities.push_back(id);
  }
  return spec;
}

SynthSpec SynthSpec::crossing(int count, int frames, std::uint64_t seed, double speed, int palette) {
  if (count < 0 || palette < 1) throw std::invalid_argument("synth: count and palette must be positive");
  if (!(speed > 0.0)) throw std::invalid_argument("synth: crossing speed must be positive");
  palette = std::min<int>(palette, static_cast<int>(kColours.size()));
  SynthSpec spec;
  spec.frames = frames;
  spec.seed = seed;
  spec.occlusion_coverage = 0.5;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> colour(0, palette - 1);
  const int lanes = std::max(1, (count + 1) / 2);
  std::set<std::pair<int, int>> used;
  for (int i = 0; i < count; ++i) {
    IdentitySpec id;
    id.id = i + 1;
    const int lane = i / 2;
    const bool leftwards = i % 2 == 1;
    id.width = 36.0 + 8.0 * u(rng);
    id.height = id.width * (2.1 + 0.3 * u(rng));
    // both walkers of a lane meet somewhere in the middle third of the sequence
    const double meet_frame = frames * (0.35 + 0.3 * u(rng));
    const double meet_x = spec.scene_width * (0.3 + 0.4 * u(rng));
    id.vx = leftwards ? -speed : speed;
    id.x0 = meet_x - id.vx * (meet_frame - 1) - id.width / 2;
    const double lane_y = (spec.scene_height - 100.0) * (lane + 0.5) / lanes;
    // small vertical offset decides who is in front
    id.y0 = lane_y + (leftwards ? 6.0 : 0.0) * (lane % 2 == 0 ? 1.0 : -1.0) + 4.0 * (u(rng) - 0.5);
    id.vy = 0.0;
    id.period = 30.0 + 30.0 * u(rng);
    id.phase = 2.0 * std::numbers::pi * u(rng);
    id.head = {0.75 + 0.2 * u(rng), 0.55 + 0.2 * u(rng), 0.45 + 0.2 * u(rng)};
    // distinct clothing per walker while the palette allows it
    int upper = colour(rng);
    int lower = colour(rng);
    for (int attempt = 0; attempt < 64 && used.count({upper, lower}); ++attempt) {
      upper = colour(rng);
      lower = colour(rng);
    }
    used.insert({upper, lower});
    id.upper = kColours[upper];
    id.lower = kColours[lower];
    id.stripe_frequency = u(rng) < 0.5 ? 0.0 : 4.0 + 6.0 * u(rng);
    id.stripe_contrast = id.stripe_frequency > 0.0 ? 0.25 + 0.2 * u(rng) : 0.0;
    spec.identities.push_back(id);
  }
  return spec;
}

SynthSpec SynthSpec::benchmark(std::uint64_t seed) {
  SynthSpec spec = crossing(5, 100, seed);
  spec.box_noise = 2.0;
  spec.illumination = 0.1;
  spec.pixel_noise = 0.02;
  spec.gait_period = 6.0;
  spec.patch_height = 16;
  spec.patch_width = 16;
  return spec;
}

BBox identity_box(const SynthSpec& spec, const IdentitySpec& id, int frame) {
  const double t = frame - 1;
  double y = id.y0 + id.vy * t;
  if (spec.motion == Motion::Sinusoidal) y += id.amplitude * std::sin(2.0 * std::numbers::pi * t / id.period + id.phase);
  return BBox{id.x0 + id.vx * t, y, id.width, id.height};
}

namespace {

struct Visible {
  const IdentitySpec* spec;
  BBox box;
  double gait;  // leg offset as a fraction of box width
};

double background(int c, double x, double y) {
  const double a = std::sin(x / 37.0 + 1.3 * c) * std::cos(y / 23.0 - 0.7 * c);
  const double b = std::sin((x + 2.0 * y) / 61.0 + c);
  const double tiles = ((static_cast<long>(std::floor(x / 48.0)) + static_cast<long>(std::floor(y / 48.0))) & 1) ? 0.06 : -0.06;
  return 0.45 + 0.12 * a + 0.08 * b + tiles;
}

// Colour of a figure at normalized box coordinates, or a negative value outside its silhouette.
double figure(const Visible& v, int c, double u, double w) {
  const IdentitySpec& s = *v.spec;
  if (w < 0.0 || w > 1.0 || u < 0.0 || u > 1.0) return -1.0;
  if (w < 0.18) {
    const double du = (u - 0.5) / 0.17;
    const double dw = (w - 0.09) / 0.09;
    return du * du + dw * dw <= 1.0 ? s.head[c] : -1.0;
  }
  if (w < 0.56) {
    if (std::abs(u - 0.5) > 0.36) {
      // arms
      return std::abs(u - 0.5) <= 0.46 && w < 0.5 ? 0.85 * s.upper[c] : -1.0;
    }
    double value = s.upper[c];
    if (s.stripe_frequency > 0.0) {
      value *= 1.0 + s.stripe_contrast * std::sin(2.0 * std::numbers::pi * s.stripe_frequency * w);
    }
    return value;
  }
  const double left = 0.3 - v.gait;
  const double right = 0.7 + v.gait;
  if (std::abs(u - left) < 0.12 || std::abs(u - right) < 0.12) return s.lower[c];
  return -1.0;
}

double scene(const std::vector<Visible>& visible, int c, double x, double y) {
  // visible is sorted back to front; the last covering figure wins
  for (auto it = visible.rbegin(); it != visible.rend(); ++it) {
    const double value = figure(*it, c, (x - it->box.left) / it->box.width, (y - it->box.top) / it->box.height);
    if (value >= 0.0) return value;
  }
  return background(c, x, y);
}

ImagePatch render_patch(const SynthSpec& spec, const std::vector<Visible>& visible, const BBox& box, double gain,
                        std::normal_distribution<double>& noise, std::mt19937_64& rng) {
  ImagePatch patch(spec.patch_channels, spec.patch_height, spec.patch_width);
  constexpr double kSub[2] = {0.25, 0.75};
  for (int py = 0; py < spec.patch_height; ++py) {
    for (int px = 0; px < spec.patch_width; ++px) {
      for (int c = 0; c < spec.patch_channels; ++c) {
        double acc = 0.0;
        for (double sy : kSub) {
          for (double sx : kSub) {
            const double x = box.left + (px + sx) / spec.patch_width * box.width;
            const double y = box.top + (py + sy) / spec.patch_height * box.height;
            acc += scene(visible, spec.patch_channels == 1 ? 1 : c, x, y);
          }
        }
        double value = 0.25 * acc * gain;
        if (spec.pixel_noise > 0.0) value += spec.pixel_noise * noise(rng);
        patch.at(c, py, px) = value;
      }
    }
  }
  quantize(patch);
  return patch;
}

}  // namespace

SynthSequence synth_sequence(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed ^ 0x5eed5eedULL);
  std::normal_distribution<double> normal(0.0, 1.0);

  SynthSequence out;
  std::vector<Visible> visible;
  // fraction of each figure not hidden by a nearer one, per (identity, frame)
  std::map<std::pair<long, int>, double> visibility;
  for (int frame = 1; frame <= spec.frames; ++frame) {
    const double gain = std::clamp(1.0 + spec.illumination * normal(rng), 0.3, 1.7);
    visible.clear();
    for (const auto& id : spec.identities) {
      const int last = id.last_frame == 0 ? spec.frames : id.last_frame;
      if (frame < id.first_frame || frame > last) continue;
      const BBox box = identity_box(spec, id, frame);
      out.ground_truth.push_back(MotRecord{frame, id.id, box, 1.0, {-1.0, -1.0, -1.0}});
      const double gait =
          spec.gait_period > 0.0 ? 0.1 * std::sin(std::numbers::pi * (frame - 1) / spec.gait_period + id.phase) : 0.0;
      visible.push_back(Visible{&id, box, gait});
    }
    // nearer figures (lower bottom edge) are drawn last
    std::stable_sort(visible.begin(), visible.end(),
                     [](const Visible& a, const Visible& b) { return a.box.bottom() < b.box.bottom(); });

    for (const auto& id : spec.identities) {
      const int last = id.last_frame == 0 ? spec.frames : id.last_frame;
      if (frame < id.first_frame || frame > last) continue;
      const bool hidden = std::any_of(spec.occlusions.begin(), spec.occlusions.end(), [&](const OcclusionWindow& w) {
        return w.id == id.id && frame >= w.first && frame <= w.last;
      });
      BBox box = identity_box(spec, id, frame);
      double coverage = 0.0;
      for (const auto& v : visible) {
        if (v.spec != &id && v.box.bottom() > box.bottom()) {
          coverage = std::max(coverage, intersection_area(v.box, box) / box.area());
        }
      }
      visibility[{id.id, frame}] = 1.0 - coverage;
      if (hidden || coverage > spec.occlusion_coverage) continue;
      double score = 1.0;
      if (spec.box_noise > 0.0) {
        box.left += spec.box_noise * normal(rng);
        box.top += spec.box_noise * normal(rng);
        box.width *= std::clamp(1.0 + 0.01 * spec.box_noise * normal(rng), 0.7, 1.3);
        box.height *= std::clamp(1.0 + 0.01 * spec.box_noise * normal(rng), 0.7, 1.3);
      }
      if (spec.score_noise > 0.0) score = std::clamp(1.0 - spec.score_noise * std::abs(normal(rng)), 0.01, 1.0);
      Detection det{frame, box, score, render_patch(spec, visible, box, gain, normal, rng)};
      out.detections.push_back(std::move(det));
      out.identity.push_back(id.id);
    }
  }
  if (spec.match_source == MatchSource::BoxIoU) {
    out.matches = match_table_from_boxes(out.detections, spec.match_gap);
    return out;
  }
  std::map<long, const IdentitySpec*> by_id;
  for (const auto& id : spec.identities) by_id[id.id] = &id;
  const auto& dets = out.detections;
  for (std::size_t a = 0; a < dets.size(); ++a) {
    const IdentitySpec& ident = *by_id.at(out.identity[a]);
    for (std::size_t b = a + 1; b < dets.size(); ++b) {
      const int gap = dets[b].frame - dets[a].frame;
      if (gap > spec.match_gap) break;
      if (gap == 0) continue;
      const auto vis = visibility.find({ident.id, dets[b].frame});
      if (vis == visibility.end()) continue;  // figure left the scene
      const BBox from = identity_box(spec, ident, dets[a].frame);
      const BBox to = identity_box(spec, ident, dets[b].frame);
      BBox moved = dets[a].box;
      moved.left += to.left - from.left;
      moved.top += to.top - from.top;
      const double score = iou(moved, dets[b].box) * visibility.at({ident.id, dets[a].frame}) * vis->second *
                           std::pow(spec.match_decay, gap - 1);
      if (score > 0.0) out.matches.set(static_cast<NodeId>(a), static_cast<NodeId>(b), std::min(score, 1.0));
    }
  }
  return out;
}

}  // namespace selftrack
