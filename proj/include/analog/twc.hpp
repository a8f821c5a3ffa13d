#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "analog/raster.hpp"
#include "analog/ssc.hpp"

namespace analog {

/// Cross-section profiles taken perpendicular to a valley axis, ordered
/// along it. Stored flat: slice i occupies [i*width, (i+1)*width).
class SliceSequence {
public:
  SliceSequence() = default;
  SliceSequence(std::size_t width, double along_spacing, std::vector<double> values);

  std::size_t size() const noexcept { return width_ ? values_.size() / width_ : 0; }
  std::size_t width() const noexcept { return width_; }
  double along_spacing() const noexcept { return along_spacing_; }
  std::span<const double> slice(std::size_t i) const noexcept {
    return {values_.data() + i * width_, width_};
  }
  std::span<const double> values() const noexcept { return values_; }

  SliceSequence reversed() const;
  /// Adds `offset` to every element.
  SliceSequence shifted(double offset) const;

  bool operator==(const SliceSequence&) const = default;

private:
  std::size_t width_ = 0;
  double along_spacing_ = 0.0;
  std::vector<double> values_;
};

struct SliceOptions {
  std::size_t width = 38;
  double along_spacing_m = 0.0;  // 0: one slice per cell along the axis
  double cross_spacing_m = 0.0;  // 0: cell size
};

/// Bilinear profiles along normals of the candidate's fitted axis. Slices
/// leaving the raster or touching nodata are dropped.
SliceSequence slice_decompose(const ValleyCandidate& cand, const SliceOptions& opts = {});

/// Wraps an axis-aligned reference raster as a candidate whose axis runs
/// along its longer dimension through the center.
ValleyCandidate reference_candidate(const DemGrid& grid, std::string id = "reference");

/// Reference slices spanning the full cross extent with `width` points.
SliceSequence reference_slices(const DemGrid& grid, std::size_t width = 38,
                               double along_spacing_m = 0.0);

/// Rows = slices, cols = slice points, cell size = along spacing.
DemGrid slices_to_grid(const SliceSequence& seq);

/// Three-point derivative estimate along the sequence axis, element-wise;
/// endpoints copy their neighbour.
SliceSequence slice_derivative(const SliceSequence& seq);

/// Unconstrained DTW over derivative sequences (steps (1,0),(0,1),(1,1),
/// Euclidean slice distance, no window, no penalty).
double ddtw_cost(const SliceSequence& a, const SliceSequence& b);

/// DTW between already-differentiated sequences.
double dtw_cost(const SliceSequence& da, const SliceSequence& db);

struct BidirectionalCost {
  double forward = 0.0;
  double reverse = 0.0;
  double cost() const noexcept { return forward < reverse ? forward : reverse; }
};

BidirectionalCost bidirectional_ddtw(const SliceSequence& a, const SliceSequence& b);

struct TwcScore {
  std::string id;
  std::size_t index = 0;  // position in the input list
  double forward = 0.0;
  double reverse = 0.0;
  double cost = 0.0;
  std::size_t rank = 0;  // 1-based
};

/// Ranks sequences by ascending bidirectional DDTW against `ref` (ties by
/// id) and keeps the first `keep`.
std::vector<TwcScore> twc_filter(std::span<const std::string> ids,
                                 std::span<const SliceSequence> seqs, const SliceSequence& ref,
                                 std::size_t keep = 5000, unsigned workers = 0);

/// id,forward_cost,reverse_cost,min_cost,rank
void write_twc_scores(const std::vector<TwcScore>& scores, const std::filesystem::path& path);
std::vector<TwcScore> read_twc_scores(const std::filesystem::path& path);

}  // namespace analog
