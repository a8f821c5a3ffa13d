#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "analog/twc.hpp"

namespace analog {

/// m x n turning angles (radians, in (-pi, pi]); one row per slice.
using ShapeMatrix = Eigen::MatrixXd;

/// k_pc x n matrix; row j is a reference component scaled by the candidate's
/// mean coefficient on it.
using LoadingMatrix = Eigen::MatrixXd;

struct ResampledProfile {
  std::vector<double> values;
  double deviation = 0.0;  // mean |y - y_hat| / (y_max - y_min)
};

/// `n` equidistant samples of a piecewise-linear profile.
std::vector<double> resample_linear(std::span<const double> profile, std::size_t n);

/// Resamples to `target_n` points and reports the MAE deviation of the
/// linear reconstruction at the original points, relative to the span.
ResampledProfile mae_resample(std::span<const double> profile, std::size_t target_n);

/// Smallest n such that every reference slice resamples within `bound`.
/// Zero-span slices reconstruct exactly at any n.
std::size_t choose_target_resolution(const SliceSequence& ref, double bound = 0.015);

/// Every slice resampled (up or down) to `n` points.
SliceSequence resample_slices(const SliceSequence& seq, std::size_t n);

/// p - 2 turning angles of a profile drawn with unit horizontal steps and
/// elevations scaled so its span equals p - 1 (flat profiles give zeros).
std::vector<double> shape_function(std::span<const double> profile);

ShapeMatrix shape_matrix(const SliceSequence& seq);

struct EigenshapeBasis {
  std::size_t k_pc = 0;
  Eigen::VectorXd singular_values;      // leading k_pc, descending
  Eigen::MatrixXd components;           // k_pc x n, right singular vectors as rows
  Eigen::VectorXd all_singular_values;  // full spectrum, descending
};

/// Truncates at the smallest k whose cumulative sigma^2 share reaches
/// `variance_keep`.
EigenshapeBasis svd_truncate(const ShapeMatrix& m, double variance_keep = 0.80);

/// Truncates at a fixed k.
EigenshapeBasis svd_truncate_fixed(const ShapeMatrix& m, std::size_t k);

/// Rank-k reconstruction U_k S_k V_k^T.
Eigen::MatrixXd low_rank_reconstruction(const ShapeMatrix& m, std::size_t k);

LoadingMatrix loading_matrix(const ShapeMatrix& cand_shape, const EigenshapeBasis& basis);

/// Cosine of the flattened matrices; 0 when either has zero norm.
double loading_cosine(const LoadingMatrix& a, const LoadingMatrix& b);

struct MtmScore {
  std::string id;
  std::size_t index = 0;
  double similarity = 0.0;
  bool degenerate = false;  // zero-norm loading matrix
  std::size_t rank = 0;
};

/// Descending cosine similarity to `ref_loading` (ties by id; zero-norm
/// loadings last), keeping the first `keep`.
std::vector<MtmScore> cosine_rank(std::span<const std::string> ids,
                                  std::span<const LoadingMatrix> loadings,
                                  const LoadingMatrix& ref_loading, std::size_t keep = 1000);

/// Reference-side state shared across candidates.
struct MtmReference {
  std::size_t resolution = 0;
  EigenshapeBasis basis;
  LoadingMatrix loading;
};

MtmReference prepare_mtm_reference(const SliceSequence& ref_slices, double bound = 0.015,
                                   double variance_keep = 0.80);

LoadingMatrix candidate_loading(const SliceSequence& cand_slices, const MtmReference& ref);

/// id,cosine_similarity,rank
void write_mtm_scores(const std::vector<MtmScore>& scores, const std::filesystem::path& path);

}  // namespace analog
