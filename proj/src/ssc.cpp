#include "analog/ssc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "analog/error.hpp"
#include "analog/parallel.hpp"

namespace analog {

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

// ---------------------------------------------------------------------------
// LEDB

BinaryMask ledb_binarize(const DemGrid& g, std::size_t blk, double c) {
  if (blk < 3 || blk % 2 == 0) throw Error("ledb_binarize: blk must be odd and >= 3");
  if (!(c > 0)) throw Error("ledb_binarize: c must be positive");

  const std::size_t rows = g.rows(), cols = g.cols();
  const std::size_t w = cols + 1;
  // Summed-area tables of value and valid-cell count, one row/col of padding.
  std::vector<double> sum((rows + 1) * w, 0.0);
  std::vector<std::size_t> cnt((rows + 1) * w, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    double row_sum = 0;
    std::size_t row_cnt = 0;
    for (std::size_t col = 0; col < cols; ++col) {
      if (!g.is_nodata(r, col)) {
        row_sum += g.at(r, col);
        ++row_cnt;
      }
      sum[(r + 1) * w + col + 1] = sum[r * w + col + 1] + row_sum;
      cnt[(r + 1) * w + col + 1] = cnt[r * w + col + 1] + row_cnt;
    }
  }

  const std::size_t half = blk / 2;
  BinaryMask mask(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t r0 = r >= half ? r - half : 0;
    const std::size_t r1 = std::min(rows - 1, r + half) + 1;
    for (std::size_t col = 0; col < cols; ++col) {
      if (g.is_nodata(r, col)) continue;
      const std::size_t c0 = col >= half ? col - half : 0;
      const std::size_t c1 = std::min(cols - 1, col + half) + 1;
      const double s = sum[r1 * w + c1] - sum[r0 * w + c1] - sum[r1 * w + c0] + sum[r0 * w + c0];
      const std::size_t n = cnt[r1 * w + c1] - cnt[r0 * w + c1] - cnt[r1 * w + c0] + cnt[r0 * w + c0];
      const double mean = s / static_cast<double>(n);
      if (g.at(r, col) < mean - c) mask.set(r, col);
    }
  }
  return mask;
}

// ---------------------------------------------------------------------------
// Zhang-Suen

namespace {

// P2..P9: N, NE, E, SE, S, SW, W, NW.
std::array<int, 8> neighbours(const BinaryMask& m, std::size_t r, std::size_t c) {
  static constexpr int dr[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
  static constexpr int dc[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  std::array<int, 8> p{};
  for (int k = 0; k < 8; ++k) {
    const auto rr = static_cast<std::ptrdiff_t>(r) + dr[k];
    const auto cc = static_cast<std::ptrdiff_t>(c) + dc[k];
    if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(m.rows()) ||
        cc >= static_cast<std::ptrdiff_t>(m.cols()))
      continue;
    p[k] = m.get(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) ? 1 : 0;
  }
  return p;
}

bool deletable(const BinaryMask& m, std::size_t r, std::size_t c, int pass) {
  const auto p = neighbours(m, r, c);
  int b = 0, a = 0;
  for (int k = 0; k < 8; ++k) {
    b += p[k];
    if (p[k] == 0 && p[(k + 1) % 8] == 1) ++a;
  }
  if (b < 2 || b > 6 || a != 1) return false;
  const int n = p[0], e = p[2], s = p[4], w = p[6];
  if (pass == 0) return n * e * s == 0 && e * s * w == 0;
  return n * e * w == 0 && n * s * w == 0;
}

}  // namespace

BinaryMask zhang_suen_thin(const BinaryMask& mask) {
  BinaryMask m = mask;
  std::vector<Pixel> flagged;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      flagged.clear();
      for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
          if (m.get(r, c) && deletable(m, r, c, pass)) flagged.push_back({r, c});
      for (const auto& px : flagged) {
        if (!deletable(m, px.row, px.col, pass)) continue;
        m.set(px.row, px.col, false);
        changed = true;
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Components

std::vector<Skeleton> connected_components(const BinaryMask& mask) {
  const std::size_t rows = mask.rows(), cols = mask.cols();
  std::vector<unsigned char> seen(rows * cols, 0);
  std::vector<Skeleton> out;
  std::vector<Pixel> stack;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      if (!mask.get(r, c) || seen[r * cols + c]) continue;
      Skeleton sk;
      sk.component_id = out.size();
      stack.push_back({r, c});
      seen[r * cols + c] = 1;
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        sk.pixels.push_back(p);
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            if (!dr && !dc) continue;
            const auto rr = static_cast<std::ptrdiff_t>(p.row) + dr;
            const auto cc = static_cast<std::ptrdiff_t>(p.col) + dc;
            if (rr < 0 || cc < 0 || rr >= static_cast<std::ptrdiff_t>(rows) ||
                cc >= static_cast<std::ptrdiff_t>(cols))
              continue;
            const auto idx = static_cast<std::size_t>(rr) * cols + static_cast<std::size_t>(cc);
            if (!mask.get(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)) || seen[idx])
              continue;
            seen[idx] = 1;
            stack.push_back({static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)});
          }
      }
      std::sort(sk.pixels.begin(), sk.pixels.end());
      out.push_back(std::move(sk));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Line fit

LineFit fit_skeleton_line(const Skeleton& skel) {
  const auto& px = skel.pixels;
  if (px.size() < 2) throw Error("fit_skeleton_line: need at least 2 pixels");
  const double n = static_cast<double>(px.size());
  double mx = 0, my = 0;
  for (const auto& p : px) {
    mx += static_cast<double>(p.col);
    my += static_cast<double>(p.row);
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& p : px) {
    const double dx = static_cast<double>(p.col) - mx, dy = static_cast<double>(p.row) - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  // Principal axis of the 2x2 scatter matrix.
  const double theta = 0.5 * std::atan2(2 * sxy, sxx - syy);
  double ux = std::cos(theta), uy = std::sin(theta);
  if (ux < -1e-12 || (std::abs(ux) <= 1e-12 && uy < 0)) {
    ux = -ux;
    uy = -uy;
  }

  LineFit fit;
  fit.center_col = mx;
  fit.center_row = my;
  fit.dir_col = ux;
  fit.dir_row = uy;
  double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin, sq = 0;
  for (const auto& p : px) {
    const double dx = static_cast<double>(p.col) - mx, dy = static_cast<double>(p.row) - my;
    const double t = dx * ux + dy * uy;
    const double d = dx * uy - dy * ux;
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
    sq += d * d;
  }
  fit.t_min = tmin;
  fit.t_max = tmax;
  fit.length = tmax - tmin;
  fit.mse = sq / n;
  if (std::abs(ux) <= 1e-12) {
    fit.slope = std::numeric_limits<double>::infinity();
    fit.intercept = std::numeric_limits<double>::quiet_NaN();
  } else {
    fit.slope = uy / ux;
    fit.intercept = my - fit.slope * mx;
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Selection

std::vector<ValleyCandidate> select_and_clip(const DemGrid& tile, std::string_view tile_id,
                                             const std::vector<Skeleton>& skeletons,
                                             const SscConfig& cfg) {
  if (cfg.s_l > cfg.s_u) throw Error("select_and_clip: s_l must not exceed s_u");
  std::vector<ValleyCandidate> out;
  for (const auto& sk : skeletons) {
    if (sk.pixels.size() < 2) continue;
    const LineFit fit = fit_skeleton_line(sk);
    if (!(fit.mse <= cfg.err && cfg.s_l <= fit.length && fit.length <= cfg.s_u)) continue;

    BoundingBox box{sk.pixels.front().row, sk.pixels.front().row, sk.pixels.front().col,
                    sk.pixels.front().col};
    for (const auto& p : sk.pixels) {
      box.row_min = std::min(box.row_min, p.row);
      box.row_max = std::max(box.row_max, p.row);
      box.col_min = std::min(box.col_min, p.col);
      box.col_max = std::max(box.col_max, p.col);
    }
    box.row_min = box.row_min >= cfg.margin ? box.row_min - cfg.margin : 0;
    box.col_min = box.col_min >= cfg.margin ? box.col_min - cfg.margin : 0;
    box.row_max = std::min(tile.rows() - 1, box.row_max + cfg.margin);
    box.col_max = std::min(tile.cols() - 1, box.col_max + cfg.margin);

    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_c%05zu", sk.component_id);
    ValleyCandidate cand;
    cand.id = std::string(tile_id) + suffix;
    cand.raster = crop(tile, box);
    cand.fit = fit;
    cand.source_tile = std::string(tile_id);
    cand.box = box;
    out.push_back(std::move(cand));
  }
  return out;
}

double footprint_iou(const ValleyCandidate& a, const ValleyCandidate& b) {
  auto rect = [](const DemGrid& g) {
    const double cs = g.cell_size();
    return std::array<double, 4>{g.origin().x, g.origin().x + static_cast<double>(g.cols()) * cs,
                                 g.origin().y - static_cast<double>(g.rows()) * cs, g.origin().y};
  };
  const auto ra = rect(a.raster), rb = rect(b.raster);
  const double ix = std::max(0.0, std::min(ra[1], rb[1]) - std::max(ra[0], rb[0]));
  const double iy = std::max(0.0, std::min(ra[3], rb[3]) - std::max(ra[2], rb[2]));
  const double inter = ix * iy;
  const double area_a = (ra[1] - ra[0]) * (ra[3] - ra[2]);
  const double area_b = (rb[1] - rb[0]) * (rb[3] - rb[2]);
  const double uni = area_a + area_b - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::vector<ValleyCandidate> dedup_candidates(std::vector<ValleyCandidate> cands, double iou) {
  std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
    if (a.fit.mse != b.fit.mse) return a.fit.mse < b.fit.mse;
    return a.id < b.id;
  });
  std::vector<ValleyCandidate> kept;
  for (auto& c : cands) {
    const bool dup = std::any_of(kept.begin(), kept.end(),
                                 [&](const auto& k) { return footprint_iou(c, k) > iou; });
    if (!dup) kept.push_back(std::move(c));
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return kept;
}

std::vector<ValleyCandidate> run_ssc(const std::vector<std::pair<std::string, DemGrid>>& tiles,
                                     const SscConfig& cfg, unsigned workers) {
  std::vector<std::vector<ValleyCandidate>> per_tile(tiles.size());
  parallel_for(
      tiles.size(),
      [&](std::size_t i) {
        const auto& [id, grid] = tiles[i];
        const BinaryMask mask = ledb_binarize(grid, cfg.blk, cfg.c);
        const auto skeletons = connected_components(zhang_suen_thin(mask));
        per_tile[i] = select_and_clip(grid, id, skeletons, cfg);
      },
      workers);
  std::vector<ValleyCandidate> all;
  for (auto& v : per_tile)
    for (auto& c : v) all.push_back(std::move(c));
  return dedup_candidates(std::move(all), cfg.dedup_iou);
}

// ---------------------------------------------------------------------------
// Manifest

void write_candidate_manifest(const std::vector<ValleyCandidate>& cands,
                              const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "id,source_tile,row_min,row_max,col_min,col_max,slope,intercept,length,mse,"
         "center_row,center_col,dir_row,dir_col,t_min,t_max\n";
  char buf[512];
  for (const auto& c : cands) {
    const auto& f = c.fit;
    std::snprintf(buf, sizeof buf,
                  "%zu,%zu,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  c.box.row_min, c.box.row_max, c.box.col_min, c.box.col_max, f.slope,
                  f.intercept, f.length, f.mse, f.center_row, f.center_col, f.dir_row, f.dir_col,
                  f.t_min, f.t_max);
    out << c.id << ',' << c.source_tile << ',' << buf << '\n';
  }
}

std::vector<ValleyCandidate> read_candidate_manifest(const std::filesystem::path& path,
                                                     const std::filesystem::path& raster_dir) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<ValleyCandidate> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 16) throw ParseError("candidate manifest: expected 16 fields", line_no);
    try {
      ValleyCandidate c;
      c.id = f[0];
      c.source_tile = f[1];
      c.box = {std::stoull(f[2]), std::stoull(f[3]), std::stoull(f[4]), std::stoull(f[5])};
      auto d = [&](int i) { return std::stod(f[i]); };
      c.fit = {d(6), d(7), d(8), d(9), d(10), d(11), d(12), d(13), d(14), d(15)};
      c.raster = load_binary_grid(raster_dir / (c.id + ".tgrd"));
      out.push_back(std::move(c));
    } catch (const std::logic_error&) {
      throw ParseError("candidate manifest: non-numeric field", line_no);
    }
  }
  return out;
}

}  // namespace analog
