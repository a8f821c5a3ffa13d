#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "analog/raster.hpp"

namespace analog {

// Local planar frame for a grid: x = col * cell_size, y = row * cell_size
// (meters, y grows southward).

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

struct ContourLine {
  double level = 0.0;
  bool closed = false;        // last point connects back to the first
  std::vector<Point2> points;
};

struct ContourSet {
  double interval = 0.0;
  double base = 0.0;
  std::vector<ContourLine> lines;

  double total_length() const;
};

/// Marching squares at base + k * interval (base = floor(min / interval) *
/// interval), linear interpolation on cell edges, saddles resolved by the
/// cell-center mean. Cells touching nodata are skipped.
ContourSet extract_contours(const DemGrid& grid, double interval);

struct NodeSample {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Points every `spacing` meters of arc length along each line, start
/// included; closed lines do not repeat their start.
std::vector<NodeSample> sample_nodes(const ContourSet& contours, double spacing);

using Edge = std::pair<std::size_t, std::size_t>;

struct Triangulation {
  std::vector<std::array<std::size_t, 3>> triangles;  // counter-clockwise
  std::vector<Edge> edges;                            // (i < j), sorted
};

/// Bowyer-Watson over points inserted in lexicographic (x, y) order with a
/// strict in-circle test, so cocircular ties resolve by insertion order.
/// Hull edges are always present. Collinear input degrades to a path in
/// sorted order; exact duplicate points get no edges.
Triangulation delaunay(std::span<const Point2> points);

// ---- geomorphometric measures ------------------------------------------------

/// Vector ruggedness over a window x window neighbourhood centred on a cell.
double vrm(const DemGrid& grid, std::size_t row, std::size_t col, std::size_t window = 3);

/// Surface area over area projected on the best-fit plane, for the patch
/// spanned by `box` (grid points as mesh vertices). Triangles touching
/// nodata are left out.
double acr(const DemGrid& grid, const BoundingBox& box);

/// Degrees in [0, 90).
double slope_between(const NodeSample& a, const NodeSample& b);

struct Segment {
  Point2 a;
  Point2 b;
};

/// Bucketed contour segments for radius queries.
class SegmentIndex {
public:
  SegmentIndex(const ContourSet& contours, double cell);
  explicit SegmentIndex(std::vector<Segment> segments, double cell);

  /// Calls fn(segment) once for every segment that may meet the disk (a
  /// superset; callers clip).
  template <class Fn>
  void for_each_near(Point2 c, double r, Fn&& fn) const;

  const std::vector<Segment>& segments() const noexcept { return segments_; }

private:
  void build(double cell);

  std::vector<Segment> segments_;
  double cell_ = 1.0;
  double reach_ = 0.0;
  double x0_ = 0.0, y0_ = 0.0;
  std::size_t nx_ = 0, ny_ = 0;
  std::vector<std::vector<std::size_t>> buckets_;
};

/// Length of segment a-b inside the disk (c, r).
double clipped_length(const Segment& s, Point2 c, double r);

/// Contour length inside the disk divided by pi r^2.
double contour_density(Point2 node, const SegmentIndex& index, double r = 500.0);
double contour_density(Point2 node, const ContourSet& contours, double r = 500.0);

/// Shannon entropy (nats) of clipped-length-weighted segment azimuths in
/// `bins` bins over [0, pi).
double direction_entropy(Point2 node, const SegmentIndex& index, double r = 500.0,
                         std::size_t bins = 36);
double direction_entropy(Point2 node, const ContourSet& contours, double r = 500.0,
                         std::size_t bins = 36);

// ---- graph -------------------------------------------------------------------

inline constexpr std::size_t kFeatureCount = 5;
enum FeatureChannel : std::size_t { kVrm = 0, kAcr = 1, kSlope = 2, kCd = 3, kDse = 4 };
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {"VRM", "ACR", "Slope",
                                                                         "CD", "DSE"};

struct TerrainGraph {
  std::vector<NodeSample> nodes;
  Eigen::MatrixXd raw_features;  // n x 5
  Eigen::MatrixXd features;      // per-channel standardized
  std::vector<Edge> edges;
  Eigen::SparseMatrix<double> adjacency;
  Eigen::SparseMatrix<double> laplacian;  // I - D^-1/2 A D^-1/2

  std::size_t size() const noexcept { return nodes.size(); }
};

struct GraphConfig {
  double contour_interval = 100.0;  // meters
  double node_spacing = 250.0;      // meters
  double radius = 500.0;            // CD / DSE disk, meters
  std::size_t bins = 36;
  std::size_t vrm_window = 3;
  std::size_t acr_patch = 5;        // points per side
};

/// Zero mean, unit (population) variance per column; constant columns -> 0.
Eigen::MatrixXd standardize_features(const Eigen::MatrixXd& raw);

/// I - D^-1/2 A D^-1/2 with D^-1/2 = 0 for isolated nodes.
Eigen::SparseMatrix<double> normalized_laplacian(std::size_t n, const std::vector<Edge>& edges);

/// Assembles adjacency, Laplacian and standardized features.
TerrainGraph assemble_graph(std::vector<NodeSample> nodes, Eigen::MatrixXd raw_features,
                            std::vector<Edge> edges);

TerrainGraph build_graph(const DemGrid& grid, const GraphConfig& cfg = {});

/// Structured text:
///   terrain-graph 1
///   nodes <n>
///   <id> <x> <y> <z> <5 raw> <5 standardized>      (n lines)
///   edges <m>
///   <i> <j>                                        (m lines)
std::string format_graph(const TerrainGraph& g);
TerrainGraph parse_graph(const std::string& text);
void write_graph(const TerrainGraph& g, const std::filesystem::path& path);
TerrainGraph load_graph(const std::filesystem::path& path);

// ---- template definitions ------------------------------------------------------

template <class Fn>
void SegmentIndex::for_each_near(Point2 c, double r, Fn&& fn) const {
  if (segments_.empty()) return;
  auto cell_of = [&](double v, double origin, std::size_t n) -> std::ptrdiff_t {
    const auto i = static_cast<std::ptrdiff_t>(std::floor((v - origin) / cell_));
    return std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1);
  };
  // Segments are bucketed by midpoint, so widen the query by the longest
  // half-segment.
  const double reach = r + reach_;
  const auto ix0 = cell_of(c.x - reach, x0_, nx_), ix1 = cell_of(c.x + reach, x0_, nx_);
  const auto iy0 = cell_of(c.y - reach, y0_, ny_), iy1 = cell_of(c.y + reach, y0_, ny_);
  for (auto iy = iy0; iy <= iy1; ++iy)
    for (auto ix = ix0; ix <= ix1; ++ix)
      for (std::size_t s : buckets_[static_cast<std::size_t>(iy) * nx_ + static_cast<std::size_t>(ix)])
        fn(segments_[s]);
}

}  // namespace analog
