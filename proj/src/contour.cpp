#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "analog/error.hpp"
#include "analog/terrain_graph.hpp"

namespace analog {

double ContourSet::total_length() const {
  double total = 0;
  for (const auto& line : lines) {
    const auto& p = line.points;
    for (std::size_t i = 1; i < p.size(); ++i) total += std::hypot(p[i].x - p[i - 1].x, p[i].y - p[i - 1].y);
    if (line.closed && p.size() > 2) total += std::hypot(p.front().x - p.back().x, p.front().y - p.back().y);
  }
  return total;
}

namespace {

enum Side { kTop = 0, kRight = 1, kBottom = 2, kLeft = 3 };

struct RawSegment {
  std::size_t edge[2];
  Point2 pt[2];
};

}  // namespace

ContourSet extract_contours(const DemGrid& g, double interval) {
  if (!(interval > 0)) throw Error("extract_contours: interval must be positive");
  if (g.rows() < 2 || g.cols() < 2) throw Error("extract_contours: grid needs >= 2x2 cells");

  ContourSet out;
  out.interval = interval;
  const auto range = g.value_range();
  if (!range) return out;
  const double lo = (*range)[0], hi = (*range)[1];
  out.base = std::floor(lo / interval) * interval;
  if (hi == lo) return out;

  const std::size_t rows = g.rows(), cols = g.cols();
  const double cs = g.cell_size();
  auto hedge = [&](std::size_t r, std::size_t c) { return 2 * (r * cols + c); };
  auto vedge = [&](std::size_t r, std::size_t c) { return 2 * (r * cols + c) + 1; };

  std::vector<RawSegment> segs;
  for (std::size_t k = 0;; ++k) {
    const double level = out.base + static_cast<double>(k) * interval;
    if (level > hi) break;
    if (level <= lo) continue;
    segs.clear();

    for (std::size_t r = 0; r + 1 < rows; ++r)
      for (std::size_t c = 0; c + 1 < cols; ++c) {
        if (g.is_nodata(r, c) || g.is_nodata(r, c + 1) || g.is_nodata(r + 1, c) ||
            g.is_nodata(r + 1, c + 1))
          continue;
        const double tl = g.at(r, c), tr = g.at(r, c + 1), br = g.at(r + 1, c + 1),
                     bl = g.at(r + 1, c);
        const int idx = (tl >= level ? 8 : 0) | (tr >= level ? 4 : 0) | (br >= level ? 2 : 0) |
                        (bl >= level ? 1 : 0);
        if (idx == 0 || idx == 15) continue;

        auto cross = [&](Side s) -> std::pair<std::size_t, Point2> {
          const double x0 = static_cast<double>(c) * cs, y0 = static_cast<double>(r) * cs;
          auto lerp = [&](double va, double vb) { return (level - va) / (vb - va); };
          switch (s) {
            case kTop: return {hedge(r, c), {x0 + lerp(tl, tr) * cs, y0}};
            case kRight: return {vedge(r, c + 1), {x0 + cs, y0 + lerp(tr, br) * cs}};
            case kBottom: return {hedge(r + 1, c), {x0 + lerp(bl, br) * cs, y0 + cs}};
            default: return {vedge(r, c), {x0, y0 + lerp(tl, bl) * cs}};
          }
        };
        auto emit = [&](Side a, Side b) {
          const auto [ea, pa] = cross(a);
          const auto [eb, pb] = cross(b);
          segs.push_back({{ea, eb}, {pa, pb}});
        };

        const bool center_up = (tl + tr + br + bl) / 4.0 >= level;
        switch (idx) {
          case 1: case 14: emit(kLeft, kBottom); break;
          case 2: case 13: emit(kBottom, kRight); break;
          case 3: case 12: emit(kLeft, kRight); break;
          case 4: case 11: emit(kTop, kRight); break;
          case 6: case 9: emit(kTop, kBottom); break;
          case 7: case 8: emit(kTop, kLeft); break;
          case 5:
            if (center_up) { emit(kTop, kLeft); emit(kBottom, kRight); }
            else { emit(kTop, kRight); emit(kLeft, kBottom); }
            break;
          case 10:
            if (center_up) { emit(kTop, kRight); emit(kLeft, kBottom); }
            else { emit(kTop, kLeft); emit(kBottom, kRight); }
            break;
          default: break;
        }
      }

    // Stitch segments sharing an edge crossing into polylines.
    std::unordered_map<std::size_t, std::vector<std::size_t>> by_edge;
    for (std::size_t i = 0; i < segs.size(); ++i)
      for (auto e : segs[i].edge) by_edge[e].push_back(i);
    std::vector<bool> used(segs.size(), false);

    auto walk = [&](std::size_t start, int start_end) {
      ContourLine line;
      line.level = level;
      std::size_t cur = start;
      int entry = start_end;  // endpoint we entered through
      line.points.push_back(segs[cur].pt[entry]);
      while (true) {
        used[cur] = true;
        const int exit = 1 - entry;
        line.points.push_back(segs[cur].pt[exit]);
        const std::size_t e = segs[cur].edge[exit];
        std::size_t next = segs.size();
        for (std::size_t cand : by_edge[e])
          if (!used[cand]) { next = cand; break; }
        if (next == segs.size()) {
          // Closed when the chain returns to the starting crossing.
          if (e == segs[start].edge[start_end] && line.points.size() > 3) {
            line.points.pop_back();
            line.closed = true;
          }
          break;
        }
        entry = segs[next].edge[0] == e ? 0 : 1;
        cur = next;
      }
      out.lines.push_back(std::move(line));
    };

    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (used[i]) continue;
      for (int end = 0; end < 2; ++end)
        if (by_edge[segs[i].edge[end]].size() == 1) {
          walk(i, end);
          break;
        }
    }
    for (std::size_t i = 0; i < segs.size(); ++i)
      if (!used[i]) walk(i, 0);
  }
  return out;
}

std::vector<NodeSample> sample_nodes(const ContourSet& contours, double spacing) {
  if (!(spacing > 0)) throw Error("sample_nodes: spacing must be positive");
  std::vector<NodeSample> out;
  for (const auto& line : contours.lines) {
    auto pts = line.points;
    if (pts.empty()) continue;
    if (line.closed) pts.push_back(pts.front());
    double total = 0;
    for (std::size_t i = 1; i < pts.size(); ++i)
      total += std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
    const double tol = 1e-9 * std::max(1.0, total);

    std::size_t seg = 0;
    double seg_start = 0;
    for (std::size_t k = 0;; ++k) {
      const double s = static_cast<double>(k) * spacing;
      if (line.closed ? s >= total - tol && k > 0 : s > total + tol) break;
      while (seg + 1 < pts.size() - 1) {
        const double len = std::hypot(pts[seg + 1].x - pts[seg].x, pts[seg + 1].y - pts[seg].y);
        if (seg_start + len >= s) break;
        seg_start += len;
        ++seg;
      }
      if (pts.size() == 1) {
        out.push_back({pts[0].x, pts[0].y, line.level});
        break;
      }
      const auto& a = pts[seg];
      const auto& b = pts[seg + 1];
      const double len = std::hypot(b.x - a.x, b.y - a.y);
      const double f = len > 0 ? std::clamp((s - seg_start) / len, 0.0, 1.0) : 0.0;
      out.push_back({a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), line.level});
    }
  }
  return out;
}

}  // namespace analog
