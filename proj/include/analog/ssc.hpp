#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "analog/raster.hpp"

namespace analog {

/// Row-major boolean raster with the same shape as its source grid.
class BinaryMask {
public:
  BinaryMask() = default;
  BinaryMask(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool get(std::size_t r, std::size_t c) const noexcept { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v = true) noexcept { bits_[r * cols_ + c] = v; }
  std::size_t count() const noexcept;

  bool operator==(const BinaryMask&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<unsigned char> bits_;
};

struct Pixel {
  std::size_t row = 0;
  std::size_t col = 0;
  auto operator<=>(const Pixel&) const = default;
};

/// One 8-connected component of a thinned mask, pixels in raster order.
struct Skeleton {
  std::size_t component_id = 0;
  std::vector<Pixel> pixels;
};

/// Total-least-squares line through skeleton pixels, in tile pixel space
/// (x = col, y = row).
///
/// `slope`/`intercept` describe y = slope * x + intercept; for a vertical
/// axis slope is +inf and intercept is NaN. The axis itself is carried as
/// centroid + unit direction, with pixel projections spanning
/// [t_min, t_max] along it.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double length = 0.0;  // t_max - t_min, pixels
  double mse = 0.0;     // mean squared perpendicular distance, pixels^2
  double center_row = 0.0;
  double center_col = 0.0;
  double dir_row = 0.0;
  double dir_col = 1.0;
  double t_min = 0.0;
  double t_max = 0.0;
};

struct ValleyCandidate {
  std::string id;
  DemGrid raster;
  LineFit fit;  // tile coordinates
  std::string source_tile;
  BoundingBox box;  // tile coordinates
};

struct SscConfig {
  std::size_t blk = 33;      // LEDB window, pixels (odd)
  double c = 50.0;           // elevation deficit, meters
  double err = 2.0;          // max line-fit mse, pixels^2
  double s_l = 167.0;        // min skeleton length, pixels
  double s_u = 1333.0;       // max skeleton length, pixels
  std::size_t margin = 20;   // clip margin, pixels
  double dedup_iou = 0.8;
};

/// Marks cells lying more than `c` meters below the mean of the blk x blk
/// window around them (window truncated at edges, nodata excluded).
BinaryMask ledb_binarize(const DemGrid& grid, std::size_t blk, double c);

/// Zhang-Suen thinning. Each sub-pass flags pixels by the classic rules on
/// the state at the start of the sub-pass, then removes them in raster order
/// re-checking the rules on the current state, so two-pixel-thick runs and
/// 2x2 blocks are thinned without splitting or erasing a component.
BinaryMask zhang_suen_thin(const BinaryMask& mask);

/// Maximal 8-connected components, ordered by their first pixel in raster
/// order.
std::vector<Skeleton> connected_components(const BinaryMask& mask);

LineFit fit_skeleton_line(const Skeleton& skel);

/// Keeps skeletons whose fit satisfies mse <= err and s_l <= length <= s_u,
/// clipping the bounding box (expanded by cfg.margin, clamped to the tile).
std::vector<ValleyCandidate> select_and_clip(const DemGrid& tile, std::string_view tile_id,
                                             const std::vector<Skeleton>& skeletons,
                                             const SscConfig& cfg);

/// Intersection-over-union of two candidates' map footprints.
double footprint_iou(const ValleyCandidate& a, const ValleyCandidate& b);

/// Drops candidates whose footprint overlaps an already kept one by more
/// than `iou`, preferring lower mse (then lower id).
std::vector<ValleyCandidate> dedup_candidates(std::vector<ValleyCandidate> candidates,
                                              double iou);

/// Full screening over a tile set: LEDB, thinning, components, selection,
/// cross-tile dedup. Tiles are processed on `workers` threads.
std::vector<ValleyCandidate> run_ssc(const std::vector<std::pair<std::string, DemGrid>>& tiles,
                                     const SscConfig& cfg, unsigned workers = 0);

// Candidate manifest CSV:
// id,source_tile,row_min,row_max,col_min,col_max,slope,intercept,length,mse,
// center_row,center_col,dir_row,dir_col,t_min,t_max
void write_candidate_manifest(const std::vector<ValleyCandidate>& cands,
                              const std::filesystem::path& path);

/// Reads a manifest; rasters are loaded from `raster_dir/<id>.tgrd`.
std::vector<ValleyCandidate> read_candidate_manifest(const std::filesystem::path& path,
                                                     const std::filesystem::path& raster_dir);

}  // namespace analog
