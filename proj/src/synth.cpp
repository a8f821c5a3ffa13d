#include <algorithm>
#include <cmath>
#include <numbers>

#include "analog/error.hpp"
#include "analog/random.hpp"
#include "analog/raster.hpp"

namespace analog {

namespace {

// Diamond-square on a (2^k + 1)^2 lattice, cropped to the requested size.
std::vector<double> midpoint_displacement(std::size_t rows, std::size_t cols, double amplitude,
                                          double decay, Rng& rng) {
  std::size_t n = 1;
  while (n + 1 < std::max(rows, cols)) n *= 2;
  const std::size_t size = n + 1;
  std::vector<double> h(size * size, 0.0);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return h[r * size + c]; };

  for (std::size_t r : {std::size_t{0}, n})
    for (std::size_t c : {std::size_t{0}, n}) at(r, c) = rng.uniform(-amplitude, amplitude);

  double amp = amplitude;
  for (std::size_t step = n; step > 1; step /= 2) {
    const std::size_t half = step / 2;
    for (std::size_t r = half; r < size; r += step)
      for (std::size_t c = half; c < size; c += step) {
        const double avg = (at(r - half, c - half) + at(r - half, c + half) +
                            at(r + half, c - half) + at(r + half, c + half)) / 4.0;
        at(r, c) = avg + rng.uniform(-amp, amp);
      }
    for (std::size_t r = 0; r < size; r += half) {
      for (std::size_t c = (r / half) % 2 == 0 ? half : 0; c < size; c += step) {
        double sum = 0;
        int cnt = 0;
        if (r >= half) { sum += at(r - half, c); ++cnt; }
        if (r + half < size) { sum += at(r + half, c); ++cnt; }
        if (c >= half) { sum += at(r, c - half); ++cnt; }
        if (c + half < size) { sum += at(r, c + half); ++cnt; }
        at(r, c) = sum / cnt + rng.uniform(-amp, amp);
      }
    }
    amp *= decay;
  }

  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = at(r, c);
  return out;
}

double profile_carve(double dist, double depth, double width, double floor_width) {
  const double half = width / 2.0;
  const double flat = std::min(floor_width / 2.0, half);
  if (dist <= flat) return depth;
  if (dist >= half) return 0.0;
  return depth * (half - dist) / (half - flat);
}

struct ValleyGeometry {
  double ax, ay;     // start, meters (x = col, y = row)
  double ux, uy;     // unit direction
  double length;     // meters
  double phase1, phase2;
};

}  // namespace

DemGrid synth_base_surface(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.rows == 0 || spec.cols == 0) throw Error("synth_terrain: empty grid");
  Rng rng(seed);
  std::vector<double> z(spec.rows * spec.cols, spec.base_elevation);
  if (spec.roughness > 0.0) {
    auto noise =
        midpoint_displacement(spec.rows, spec.cols, spec.roughness, spec.roughness_decay, rng);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += noise[i];
  }
  return DemGrid(spec.rows, spec.cols, spec.cell_size, {}, std::move(z));
}

DemGrid synth_terrain(const SynthSpec& spec, std::uint64_t seed) {
  const double cs = spec.cell_size;
  const double max_r = static_cast<double>(spec.rows - 1);
  const double max_c = static_cast<double>(spec.cols - 1);
  auto inside = [&](double r, double c) { return r >= 0 && c >= 0 && r <= max_r && c <= max_c; };

  // Phases come from a stream separate from the roughness so adding a valley
  // does not reshuffle the base surface.
  Rng phase_rng(seed ^ 0x9E3779B97F4A7C15ull);
  std::vector<ValleyGeometry> geo;
  for (const auto& v : spec.valleys) {
    if (!inside(v.row0, v.col0) || !inside(v.row1, v.col1))
      throw Error("synth_terrain: valley exceeds grid extent");
    const double dx = (v.col1 - v.col0) * cs, dy = (v.row1 - v.row0) * cs;
    const double len = std::hypot(dx, dy);
    if (len <= 0) throw Error("synth_terrain: degenerate valley center line");
    geo.push_back({v.col0 * cs, v.row0 * cs, dx / len, dy / len, len,
                   phase_rng.uniform(0, 2 * std::numbers::pi),
                   phase_rng.uniform(0, 2 * std::numbers::pi)});
  }
  for (const auto& ring : spec.rings) {
    if (!inside(ring.row, ring.col)) throw Error("synth_terrain: ring center outside grid");
    const double reach = (ring.radius + ring.width / 2) / cs;
    if (!inside(ring.row - reach, ring.col - reach) || !inside(ring.row + reach, ring.col + reach))
      throw Error("synth_terrain: ring exceeds grid extent");
  }

  DemGrid base = synth_base_surface(spec, seed);
  std::vector<double> z(base.values().begin(), base.values().end());

  for (std::size_t r = 0; r < spec.rows; ++r)
    for (std::size_t c = 0; c < spec.cols; ++c) {
      const double px = static_cast<double>(c) * cs, py = static_cast<double>(r) * cs;
      double carve = 0.0;
      for (std::size_t k = 0; k < spec.valleys.size(); ++k) {
        const auto& v = spec.valleys[k];
        const auto& g = geo[k];
        const double rx = px - g.ax, ry = py - g.ay;
        const double along = rx * g.ux + ry * g.uy;
        const double t = std::clamp(along / g.length, 0.0, 1.0);
        const double wobble =
            v.jitter * (0.6 * std::sin(2 * std::numbers::pi * t + g.phase1) +
                        0.4 * std::sin(2 * std::numbers::pi * 2.3 * t + g.phase2));
        const double across = g.ux * ry - g.uy * rx - wobble;
        const double beyond = along < 0 ? -along : (along > g.length ? along - g.length : 0.0);
        const double dist = std::hypot(across, beyond);
        const double depth = v.depth * (1.0 - v.taper * (2 * t - 1) * (2 * t - 1));
        carve = std::max(carve, profile_carve(dist, depth, v.width, v.floor_width));
      }
      for (const auto& ring : spec.rings) {
        const double d = std::hypot(px - ring.col * cs, py - ring.row * cs);
        carve = std::max(carve, profile_carve(std::abs(d - ring.radius), ring.depth, ring.width, 0));
      }
      z[r * spec.cols + c] -= carve;
    }
  return DemGrid(spec.rows, spec.cols, cs, {}, std::move(z));
}

}  // namespace analog
