#include <algorithm>
#include <cmath>
#include <numeric>

#include "analog/error.hpp"
#include "analog/terrain_graph.hpp"

namespace analog {

namespace {

using Real = long double;

struct P {
  Real x, y;
};

Real orient(const P& a, const P& b, const P& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// > 0 when d lies strictly inside the circumcircle of counter-clockwise abc.
Real incircle(const P& a, const P& b, const P& c, const P& d) {
  const Real adx = a.x - d.x, ady = a.y - d.y;
  const Real bdx = b.x - d.x, bdy = b.y - d.y;
  const Real cdx = c.x - d.x, cdy = c.y - d.y;
  const Real ad = adx * adx + ady * ady;
  const Real bd = bdx * bdx + bdy * bdy;
  const Real cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

struct Tri {
  std::size_t v[3];
};

}  // namespace

Triangulation delaunay(std::span<const Point2> points) {
  const std::size_t n = points.size();
  if (n < 3) throw Error("delaunay: need at least 3 points");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].x != points[b].x) return points[a].x < points[b].x;
    return points[a].y < points[b].y;
  });
  std::vector<std::size_t> uniq;
  for (std::size_t i : order)
    if (uniq.empty() || !(points[uniq.back()] == points[i])) uniq.push_back(i);

  std::vector<P> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = {points[i].x, points[i].y};

  Triangulation out;
  auto add_edge = [&](std::size_t a, std::size_t b) { out.edges.emplace_back(std::min(a, b), std::max(a, b)); };

  // Collinear input: a path in sorted order.
  const Real span = std::max<Real>(
      {pts[uniq.back()].x - pts[uniq.front()].x,
       std::abs(pts[uniq.back()].y - pts[uniq.front()].y), Real(1e-300)});
  bool collinear = true;
  for (std::size_t k = 2; k < uniq.size() && collinear; ++k)
    if (std::abs(orient(pts[uniq[0]], pts[uniq[1]], pts[uniq[k]])) > 1e-12L * span * span)
      collinear = false;
  if (collinear) {
    for (std::size_t k = 1; k < uniq.size(); ++k) add_edge(uniq[k - 1], uniq[k]);
    std::sort(out.edges.begin(), out.edges.end());
    return out;
  }

  // The triangulation is closed by ghost triangles (a, b, G) on hull edges,
  // G a vertex at infinity to the left of a->b. Insertion in lexicographic
  // order keeps every new point outside the current hull.
  const std::size_t ghost = n;
  auto conflicts = [&](const Tri& t, std::size_t p) {
    for (int k = 0; k < 3; ++k)
      if (t.v[k] == ghost) {
        const P& a = pts[t.v[(k + 1) % 3]];
        const P& b = pts[t.v[(k + 2) % 3]];
        const Real o = orient(a, b, pts[p]);
        if (o != 0) return o > 0;
        const Real dot = (pts[p].x - a.x) * (b.x - a.x) + (pts[p].y - a.y) * (b.y - a.y);
        const Real len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
        return dot > 0 && dot < len2;
      }
    return incircle(pts[t.v[0]], pts[t.v[1]], pts[t.v[2]], pts[p]) > 0;
  };

  // Seed: the collinear prefix fanned to the first point off its line.
  std::size_t first_off = 2;
  while (std::abs(orient(pts[uniq[0]], pts[uniq[1]], pts[uniq[first_off]])) <= 1e-12L * span * span)
    ++first_off;
  std::vector<Tri> tris;
  const std::size_t apex = uniq[first_off];
  for (std::size_t k = 0; k + 1 < first_off; ++k) {
    std::size_t a = uniq[k], b = uniq[k + 1];
    if (orient(pts[a], pts[b], pts[apex]) < 0) std::swap(a, b);
    tris.push_back({{a, b, apex}});
  }
  {
    std::vector<std::array<std::size_t, 2>> directed;
    for (const auto& t : tris)
      for (int e = 0; e < 3; ++e) directed.push_back({t.v[e], t.v[(e + 1) % 3]});
    std::sort(directed.begin(), directed.end());
    std::vector<Tri> ghosts;
    for (const auto& [a, b] : directed)
      if (!std::binary_search(directed.begin(), directed.end(), std::array<std::size_t, 2>{b, a}))
        ghosts.push_back({{b, a, ghost}});
    tris.insert(tris.end(), ghosts.begin(), ghosts.end());
  }

  std::vector<std::array<std::size_t, 2>> boundary;
  std::vector<char> bad;
  for (std::size_t idx = first_off + 1; idx < uniq.size(); ++idx) {
    const std::size_t p = uniq[idx];
    bad.assign(tris.size(), 0);
    for (std::size_t t = 0; t < tris.size(); ++t) bad[t] = conflicts(tris[t], p);
    // Cavity boundary: edges of bad triangles not shared with another bad one.
    boundary.clear();
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (!bad[t]) continue;
      for (int e = 0; e < 3; ++e) {
        const std::size_t a = tris[t].v[e], b = tris[t].v[(e + 1) % 3];
        bool shared = false;
        for (std::size_t u = 0; u < tris.size() && !shared; ++u) {
          if (u == t || !bad[u]) continue;
          for (int f = 0; f < 3; ++f)
            if (tris[u].v[f] == b && tris[u].v[(f + 1) % 3] == a) shared = true;
        }
        if (!shared) boundary.push_back({a, b});
      }
    }
    std::vector<Tri> next;
    next.reserve(tris.size() + 2);
    for (std::size_t t = 0; t < tris.size(); ++t)
      if (!bad[t]) next.push_back(tris[t]);
    for (const auto& [a, b] : boundary) next.push_back({{a, b, p}});
    tris = std::move(next);
  }

  for (const auto& t : tris) {
    if (t.v[0] == ghost || t.v[1] == ghost || t.v[2] == ghost) continue;
    out.triangles.push_back({t.v[0], t.v[1], t.v[2]});
    for (int e = 0; e < 3; ++e) add_edge(t.v[e], t.v[(e + 1) % 3]);
  }

  std::sort(out.edges.begin(), out.edges.end());
  out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
  return out;
}

}  // namespace analog
