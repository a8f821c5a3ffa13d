#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance gate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "analog/metrics.hpp"
#include "analog/random.hpp"
#include "analog/raster.hpp"
#include "analog/ssc.hpp"

namespace oracle {

/// Three-point derivative written out per element; endpoints copy their
/// neighbour.
inline std::vector<double> derivative_by_hand(const std::vector<double>& q) {
  const std::size_t n = q.size();
  std::vector<double> d(n);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = ((q[i] - q[i - 1]) + (q[i + 1] - q[i - 1]) / 2.0) / 2.0;
  d[0] = d[1];
  d[n - 1] = d[n - 2];
  return d;
}

/// Minimum over every monotone path from (0,0) to (n-1,m-1).
inline double exhaustive_dtw(const std::vector<double>& a, const std::vector<double>& b) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    acc += std::abs(a[i] - b[j]);
    if (i + 1 == a.size() && j + 1 == b.size()) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < a.size()) walk(i + 1, j, acc);
    if (j + 1 < b.size()) walk(i, j + 1, acc);
    if (i + 1 < a.size() && j + 1 < b.size()) walk(i + 1, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

/// 8-connected component count by union-find.
inline std::size_t union_find_components(const analog::BinaryMask& m) {
  const std::size_t n = m.rows() * m.cols();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (!m.get(r, c)) continue;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(m.rows()) || cc >= static_cast<long>(m.cols())) continue;
          if (m.get(rr, cc)) parent[find(r * m.cols() + c)] = find(rr * m.cols() + cc);
        }
    }
  std::size_t count = 0;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (m.get(r, c) && find(r * m.cols() + c) == r * m.cols() + c) ++count;
  return count;
}

/// 64 x 64 mask of random discs, strokes and salt noise, so components vary
/// in width.
inline analog::BinaryMask blob_mask(std::uint64_t seed) {
  analog::Rng rng(seed);
  analog::BinaryMask m(64, 64);
  const int shapes = 6 + static_cast<int>(rng.below(10));
  for (int s = 0; s < shapes; ++s) {
    const double r0 = rng.uniform(0, 64), c0 = rng.uniform(0, 64);
    if (rng.bernoulli(0.5)) {
      const double rad = rng.uniform(1, 7);
      for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c)
          if (std::hypot(r - r0, c - c0) <= rad) m.set(r, c);
    } else {
      const double ang = rng.uniform(0, 3.14159), len = rng.uniform(5, 40), w = rng.uniform(0.5, 4);
      for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) {
          const double dr = r - r0, dc = c - c0;
          const double along = dr * std::sin(ang) + dc * std::cos(ang);
          const double across = dr * std::cos(ang) - dc * std::sin(ang);
          if (along >= 0 && along <= len && std::abs(across) <= w) m.set(r, c);
        }
    }
  }
  for (int k = 0; k < 60; ++k) m.set(rng.below(64), rng.below(64));
  return m;
}

/// Metrics from raw counts; F1 as the harmonic mean of precision and recall.
inline analog::Metrics metrics(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  analog::Metrics m;
  const double t = static_cast<double>(tp + fp + fn + tn);
  m.accuracy = static_cast<double>(tp + tn) / t;
  m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

/// F1 from counts directly, 2 tp / (2 tp + fp + fn).
inline double f1_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  return 2 * tp + fp + fn ? 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn) : 0.0;
}

/// Grid sampled from f(row, col).
template <class F>
analog::DemGrid grid_from(std::size_t rows, std::size_t cols, double cs, F&& f) {
  std::vector<double> v(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) v[r * cols + c] = f(static_cast<double>(r), static_cast<double>(c));
  return analog::DemGrid(rows, cols, cs, {}, std::move(v));
}

}  // namespace oracle
