#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "analog/error.hpp"
#include "analog/terrain_graph.hpp"

namespace analog {

// ---------------------------------------------------------------------------
// VRM

namespace {

Eigen::Vector3d unit_normal(const DemGrid& g, std::size_t r, std::size_t c) {
  const double cs = g.cell_size();
  auto valid = [&](std::size_t rr, std::size_t cc) { return rr < g.rows() && cc < g.cols() && !g.is_nodata(rr, cc); };
  auto diff = [&](bool has_lo, std::size_t lo_r, std::size_t lo_c, bool has_hi, std::size_t hi_r,
                  std::size_t hi_c) {
    const double z = g.at(r, c);
    if (has_lo && has_hi) return (g.at(hi_r, hi_c) - g.at(lo_r, lo_c)) / (2 * cs);
    if (has_hi) return (g.at(hi_r, hi_c) - z) / cs;
    if (has_lo) return (z - g.at(lo_r, lo_c)) / cs;
    return 0.0;
  };
  const double dzdx = diff(c > 0 && valid(r, c - 1), r, c - 1, valid(r, c + 1), r, c + 1);
  const double dzdy = diff(r > 0 && valid(r - 1, c), r - 1, c, valid(r + 1, c), r + 1, c);
  return Eigen::Vector3d(-dzdx, -dzdy, 1.0).normalized();
}

}  // namespace

double vrm(const DemGrid& g, std::size_t row, std::size_t col, std::size_t window) {
  if (window < 3 || window % 2 == 0) throw Error("vrm: window must be odd and >= 3");
  const std::size_t h = window / 2;
  if (row < h || col < h || row + h >= g.rows() || col + h >= g.cols())
    throw Error("vrm: window out of bounds");
  for (std::size_t r = row - h; r <= row + h; ++r)
    for (std::size_t c = col - h; c <= col + h; ++c)
      if (g.is_nodata(r, c)) throw Error("vrm: nodata in window");

  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (std::size_t r = row - h; r <= row + h; ++r)
    for (std::size_t c = col - h; c <= col + h; ++c) sum += unit_normal(g, r, c);
  // 1 - |sum| / n cancels to rounding noise (~1e-15) on planar windows.
  constexpr double kRoundingFloor = 1e-12;
  const double n = static_cast<double>(window * window);
  const double d = 1.0 - sum.norm() / n;
  return d < kRoundingFloor ? 0.0 : std::min(d, 1.0);
}

// ---------------------------------------------------------------------------
// ACR

double acr(const DemGrid& g, const BoundingBox& box) {
  if (box.row_max >= g.rows() || box.col_max >= g.cols() || box.row_min > box.row_max ||
      box.col_min > box.col_max)
    throw Error("acr: box outside grid");
  if (box.rows() < 2 || box.cols() < 2) throw Error("acr: patch needs >= 2x2 points");
  const double cs = g.cell_size();
  auto point = [&](std::size_t r, std::size_t c) {
    return Eigen::Vector3d(static_cast<double>(c) * cs, static_cast<double>(r) * cs, g.at(r, c));
  };

  double surface = 0, footprint = 0;
  std::vector<char> used((box.rows()) * (box.cols()), 0);
  auto mark = [&](std::size_t r, std::size_t c) {
    used[(r - box.row_min) * box.cols() + (c - box.col_min)] = 1;
  };
  for (std::size_t r = box.row_min; r < box.row_max; ++r)
    for (std::size_t c = box.col_min; c < box.col_max; ++c) {
      const std::array<std::array<std::size_t, 2>, 4> q = {
          {{r, c}, {r, c + 1}, {r + 1, c + 1}, {r + 1, c}}};
      for (const auto& tri : {std::array<int, 3>{0, 1, 2}, std::array<int, 3>{0, 2, 3}}) {
        bool ok = true;
        for (int k : tri) ok = ok && !g.is_nodata(q[k][0], q[k][1]);
        if (!ok) continue;
        const auto a = point(q[tri[0]][0], q[tri[0]][1]);
        const auto b = point(q[tri[1]][0], q[tri[1]][1]);
        const auto c3 = point(q[tri[2]][0], q[tri[2]][1]);
        surface += 0.5 * (b - a).cross(c3 - a).norm();
        footprint += 0.5 * cs * cs;
        for (int k : tri) mark(q[k][0], q[k][1]);
      }
    }
  if (footprint == 0) throw Error("acr: no valid triangles in patch");

  // Total-least-squares plane through the mesh vertices.
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  std::size_t count = 0;
  for (std::size_t r = box.row_min; r <= box.row_max; ++r)
    for (std::size_t c = box.col_min; c <= box.col_max; ++c)
      if (used[(r - box.row_min) * box.cols() + (c - box.col_min)]) {
        mean += point(r, c);
        ++count;
      }
  mean /= static_cast<double>(count);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t r = box.row_min; r <= box.row_max; ++r)
    for (std::size_t c = box.col_min; c <= box.col_max; ++c)
      if (used[(r - box.row_min) * box.cols() + (c - box.col_min)]) {
        const Eigen::Vector3d d = point(r, c) - mean;
        cov += d * d.transpose();
      }
  double nz = 1.0;
  if (cov(2, 2) != 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    nz = std::abs(eig.eigenvectors().col(0).z());
  }
  if (nz < 1e-12) throw Error("acr: degenerate (vertical) best-fit plane");
  // The plane region above the footprint has area footprint / |n_z|.
  return surface / (footprint / nz);
}

// ---------------------------------------------------------------------------
// Slope

double slope_between(const NodeSample& a, const NodeSample& b) {
  const double dis = std::hypot(a.x - b.x, a.y - b.y);
  if (!(dis > 0)) throw Error("slope_between: coincident horizontal positions");
  return std::atan(std::abs(a.z - b.z) / dis) * 180.0 / std::numbers::pi;
}

// ---------------------------------------------------------------------------
// Contour neighbourhood measures

namespace {

std::vector<Segment> contour_segments(const ContourSet& contours) {
  std::vector<Segment> out;
  for (const auto& line : contours.lines) {
    const auto& p = line.points;
    for (std::size_t i = 1; i < p.size(); ++i) out.push_back({p[i - 1], p[i]});
    if (line.closed && p.size() > 2) out.push_back({p.back(), p.front()});
  }
  return out;
}

}  // namespace

SegmentIndex::SegmentIndex(const ContourSet& contours, double cell)
    : SegmentIndex(contour_segments(contours), cell) {}

SegmentIndex::SegmentIndex(std::vector<Segment> segments, double cell)
    : segments_(std::move(segments)) {
  build(cell);
}

void SegmentIndex::build(double cell) {
  if (!(cell > 0)) throw Error("SegmentIndex: cell must be positive");
  cell_ = cell;
  if (segments_.empty()) return;
  double minx = segments_[0].a.x, maxx = minx, miny = segments_[0].a.y, maxy = miny;
  for (const auto& s : segments_) {
    for (const auto& p : {s.a, s.b}) {
      minx = std::min(minx, p.x);
      maxx = std::max(maxx, p.x);
      miny = std::min(miny, p.y);
      maxy = std::max(maxy, p.y);
    }
    reach_ = std::max(reach_, 0.5 * std::hypot(s.b.x - s.a.x, s.b.y - s.a.y));
  }
  x0_ = minx;
  y0_ = miny;
  nx_ = static_cast<std::size_t>(std::floor((maxx - minx) / cell_)) + 1;
  ny_ = static_cast<std::size_t>(std::floor((maxy - miny) / cell_)) + 1;
  buckets_.assign(nx_ * ny_, {});
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    const double mx = (s.a.x + s.b.x) / 2, my = (s.a.y + s.b.y) / 2;
    const auto ix = std::min(nx_ - 1, static_cast<std::size_t>(std::floor((mx - x0_) / cell_)));
    const auto iy = std::min(ny_ - 1, static_cast<std::size_t>(std::floor((my - y0_) / cell_)));
    buckets_[iy * nx_ + ix].push_back(i);
  }
}

double clipped_length(const Segment& s, Point2 c, double r) {
  const double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
  const double fx = s.a.x - c.x, fy = s.a.y - c.y;
  const double a = dx * dx + dy * dy;
  if (a == 0) return 0.0;
  const double b = 2 * (fx * dx + fy * dy);
  const double cc = fx * fx + fy * fy - r * r;
  const double disc = b * b - 4 * a * cc;
  if (disc <= 0) return 0.0;
  const double sq = std::sqrt(disc);
  const double t0 = std::max(0.0, (-b - sq) / (2 * a));
  const double t1 = std::min(1.0, (-b + sq) / (2 * a));
  return t1 > t0 ? (t1 - t0) * std::sqrt(a) : 0.0;
}

double contour_density(Point2 node, const SegmentIndex& index, double r) {
  if (!(r > 0)) throw Error("contour_density: radius must be positive");
  double total = 0;
  index.for_each_near(node, r, [&](const Segment& s) { total += clipped_length(s, node, r); });
  return total / (std::numbers::pi * r * r);
}

double contour_density(Point2 node, const ContourSet& contours, double r) {
  return contour_density(node, SegmentIndex(contours, std::max(r, 1e-9)), r);
}

double direction_entropy(Point2 node, const SegmentIndex& index, double r, std::size_t bins) {
  if (bins < 2) throw Error("direction_entropy: bins must be >= 2");
  if (!(r > 0)) throw Error("direction_entropy: radius must be positive");
  std::vector<double> mass(bins, 0.0);
  double total = 0;
  const double width = std::numbers::pi / static_cast<double>(bins);
  index.for_each_near(node, r, [&](const Segment& s) {
    const double len = clipped_length(s, node, r);
    if (len <= 0) return;
    double az = std::atan2(s.b.y - s.a.y, s.b.x - s.a.x);
    if (az < 0) az += std::numbers::pi;
    if (az >= std::numbers::pi) az -= std::numbers::pi;
    const auto bin = std::min(bins - 1, static_cast<std::size_t>(az / width));
    mass[bin] += len;
    total += len;
  });
  if (total <= 0) return 0.0;
  double h = 0;
  for (double m : mass)
    if (m > 0) {
      const double p = m / total;
      h -= p * std::log(p);
    }
  return std::max(0.0, h);
}

double direction_entropy(Point2 node, const ContourSet& contours, double r, std::size_t bins) {
  return direction_entropy(node, SegmentIndex(contours, std::max(r, 1e-9)), r, bins);
}

}  // namespace analog
