#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace analog {

/// Upper-left corner of a grid in map units. Cell size is expressed in the
/// same units, so shifting the origin by a pixel offset stays consistent.
struct GeoOrigin {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const GeoOrigin&) const = default;
};

/// Inclusive pixel-index rectangle.
struct BoundingBox {
  std::size_t row_min = 0;
  std::size_t row_max = 0;
  std::size_t col_min = 0;
  std::size_t col_max = 0;

  std::size_t rows() const noexcept { return row_max - row_min + 1; }
  std::size_t cols() const noexcept { return col_max - col_min + 1; }
  std::size_t area() const noexcept { return rows() * cols(); }

  bool operator==(const BoundingBox&) const = default;
};

/// Georeferenced elevation raster (meters, row-major, north row first).
///
/// Immutable after construction. Cells equal to `nodata_value()` are
/// missing; every other cell is finite.
class DemGrid {
public:
  static constexpr double kDefaultNodata = -9999.0;

  DemGrid() = default;
  DemGrid(std::size_t rows, std::size_t cols, double cell_size, GeoOrigin origin,
          std::vector<double> elevations, double nodata_value = kDefaultNodata);

  /// Grid filled with a single value.
  static DemGrid filled(std::size_t rows, std::size_t cols, double cell_size, double value,
                        GeoOrigin origin = {}, double nodata_value = kDefaultNodata);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return elevations_.size(); }
  double cell_size() const noexcept { return cell_size_; }
  const GeoOrigin& origin() const noexcept { return origin_; }
  double nodata_value() const noexcept { return nodata_; }

  double at(std::size_t r, std::size_t c) const noexcept { return elevations_[r * cols_ + c]; }
  bool is_nodata(std::size_t r, std::size_t c) const noexcept { return at(r, c) == nodata_; }
  bool has_nodata() const noexcept;
  std::span<const double> values() const noexcept { return elevations_; }

  BoundingBox extent() const noexcept { return {0, rows_ - 1, 0, cols_ - 1}; }

  /// Bilinear sample at fractional (row, col); nullopt outside the grid or
  /// when any contributing cell is nodata.
  std::optional<double> sample(double row, double col) const noexcept;

  /// Min and max over valid cells; nullopt when every cell is nodata.
  std::optional<std::array<double, 2>> value_range() const noexcept;

  bool operator==(const DemGrid&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  double cell_size_ = 1.0;
  GeoOrigin origin_{};
  std::vector<double> elevations_;
  double nodata_ = kDefaultNodata;
};

// ---- ESRI ASCII grid ------------------------------------------------------

DemGrid load_ascii_grid(const std::filesystem::path& path);
DemGrid parse_ascii_grid(const std::string& text);
void write_ascii_grid(const DemGrid& grid, const std::filesystem::path& path);
std::string format_ascii_grid(const DemGrid& grid);

// ---- flat binary ("TGRD") -------------------------------------------------
//
// little-endian:
//   char[4] "TGRD" | u16 version | u32 rows | u32 cols | u32 cell_size_mm |
//   u32 reserved (0) | f64 origin_x | f64 origin_y | f32 nodata |
//   f32 payload[rows * cols] (row-major)

inline constexpr std::uint16_t kBinaryGridVersion = 1;

void write_binary_grid(const DemGrid& grid, const std::filesystem::path& path);
DemGrid load_binary_grid(const std::filesystem::path& path);

/// Dispatch on extension: ".asc"/".txt" -> ASCII, anything else -> TGRD.
DemGrid load_grid(const std::filesystem::path& path);

// ---- flat binary matrix ("TMAT") ------------------------------------------
//
//   char[4] "TMAT" | u16 version | u32 rows | u32 cols | f64 payload (row-major)

struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

void write_binary_matrix(const DenseMatrix& m, const std::filesystem::path& path);
DenseMatrix load_binary_matrix(const std::filesystem::path& path);

// ---- geometry ops ----------------------------------------------------------

/// 2x2 arrangement; index [row][col], north-west first. Missing quadrants
/// are padded with nodata.
using TileQuad = std::array<std::array<std::optional<DemGrid>, 2>, 2>;

/// Mosaic four equally sized neighbours. Seams that overlap by whole pixels
/// (origins offset by less than the grid extent) are deduplicated.
DemGrid mosaic_tiles(const TileQuad& grids);

DemGrid crop(const DemGrid& grid, const BoundingBox& box);

// ---- synthetic terrain -----------------------------------------------------

/// Straight V (or trapezoid when floor_width > 0) valley carved along a
/// center line given in fractional pixel coordinates.
struct PlantedValley {
  double row0 = 0, col0 = 0;
  double row1 = 0, col1 = 0;
  double depth = 100.0;        // meters at the deepest point
  double width = 1000.0;       // full top width, meters
  double floor_width = 0.0;    // flat floor, meters
  double jitter = 0.0;         // lateral wobble amplitude, meters
  double taper = 0.0;          // 0: uniform depth; 1: depth -> 0 at both ends
};

/// Annular trough (ring-shaped valley) around a center point.
struct PlantedRing {
  double row = 0, col = 0;
  double radius = 1000.0;  // meters, to the trough floor
  double depth = 100.0;
  double width = 500.0;
};

struct SynthSpec {
  std::size_t rows = 256;
  std::size_t cols = 256;
  double cell_size = 30.0;
  double base_elevation = 0.0;
  double roughness = 0.0;        // midpoint-displacement amplitude, meters
  double roughness_decay = 0.5;  // amplitude ratio per octave
  std::vector<PlantedValley> valleys;
  std::vector<PlantedRing> rings;
};

/// Pure function of (spec, seed).
DemGrid synth_terrain(const SynthSpec& spec, std::uint64_t seed);

/// The roughness-only surface synth_terrain carves into.
DemGrid synth_base_surface(const SynthSpec& spec, std::uint64_t seed);

}  // namespace analog
