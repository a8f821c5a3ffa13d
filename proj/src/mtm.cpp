#include "analog/mtm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "analog/error.hpp"

namespace analog {

namespace {

double interp(std::span<const double> y, double pos) {
  const std::size_t last = y.size() - 1;
  if (pos <= 0) return y[0];
  if (pos >= static_cast<double>(last)) return y[last];
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double f = pos - static_cast<double>(i);
  return f == 0.0 ? y[i] : y[i] * (1 - f) + y[i + 1] * f;
}

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  while (a <= -pi) a += 2 * pi;
  while (a > pi) a -= 2 * pi;
  return a;
}

double reconstruction_deviation(std::span<const double> y, std::span<const double> resampled,
                                double span) {
  const std::size_t big_n = y.size(), n = resampled.size();
  const double scale = static_cast<double>(n - 1) / static_cast<double>(big_n - 1);
  double err = 0;
  for (std::size_t i = 0; i < big_n; ++i)
    err += std::abs(y[i] - interp(resampled, static_cast<double>(i) * scale));
  return err / (static_cast<double>(big_n) * span);
}

}  // namespace

std::vector<double> resample_linear(std::span<const double> y, std::size_t n) {
  if (y.size() < 2 || n < 2) throw Error("resample_linear: need >= 2 points in and out");
  const double scale = static_cast<double>(y.size() - 1) / static_cast<double>(n - 1);
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = interp(y, static_cast<double>(j) * scale);
  out.back() = y.back();
  return out;
}

ResampledProfile mae_resample(std::span<const double> y, std::size_t target_n) {
  if (y.size() < 2) throw Error("mae_resample: profile needs >= 2 points");
  if (target_n < 2) throw Error("mae_resample: target_n must be >= 2");
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double span = *hi - *lo;
  if (!(span > 0)) throw Error("mae_resample: zero-span profile, deviation undefined");
  ResampledProfile out;
  out.values = resample_linear(y, target_n);
  out.deviation = reconstruction_deviation(y, out.values, span);
  return out;
}

std::size_t choose_target_resolution(const SliceSequence& ref, double bound) {
  if (ref.size() == 0) throw Error("choose_target_resolution: no slices");
  const std::size_t big_n = ref.width();
  for (std::size_t n = 2; n < big_n; ++n) {
    bool ok = true;
    for (std::size_t i = 0; i < ref.size() && ok; ++i) {
      const auto s = ref.slice(i);
      const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
      if (!(*hi - *lo > 0)) continue;
      ok = mae_resample(s, n).deviation <= bound;
    }
    if (ok) return n;
  }
  return big_n;
}

SliceSequence resample_slices(const SliceSequence& seq, std::size_t n) {
  std::vector<double> out;
  out.reserve(seq.size() * n);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto r = resample_linear(seq.slice(i), n);
    out.insert(out.end(), r.begin(), r.end());
  }
  return SliceSequence(n, seq.along_spacing(), std::move(out));
}

std::vector<double> shape_function(std::span<const double> y) {
  if (y.size() < 3) throw Error("shape_function: need >= 3 points");
  std::vector<double> out(y.size() - 2);
  // Unit horizontal step; elevations in units of span / (p - 1), so the
  // profile spans a unit square and angles ignore resolution and relief.
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double span = *hi - *lo;
  if (span == 0.0) return out;
  const double scale = static_cast<double>(y.size() - 1) / span;
  double prev = std::atan2((y[1] - y[0]) * scale, 1.0);
  for (std::size_t i = 1; i + 1 < y.size(); ++i) {
    const double dir = std::atan2((y[i + 1] - y[i]) * scale, 1.0);
    out[i - 1] = wrap_angle(dir - prev);
    prev = dir;
  }
  return out;
}

ShapeMatrix shape_matrix(const SliceSequence& seq) {
  if (seq.width() < 3) throw Error("shape_matrix: slices need >= 3 points");
  ShapeMatrix m(static_cast<Eigen::Index>(seq.size()), static_cast<Eigen::Index>(seq.width() - 2));
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto row = shape_function(seq.slice(i));
    for (std::size_t j = 0; j < row.size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
  }
  return m;
}

namespace {

EigenshapeBasis basis_from_svd(const Eigen::BDCSVD<Eigen::MatrixXd>& svd, std::size_t k) {
  EigenshapeBasis b;
  b.k_pc = k;
  b.all_singular_values = svd.singularValues();
  const auto kk = static_cast<Eigen::Index>(k);
  b.singular_values = svd.singularValues().head(kk);
  b.components = svd.matrixV().leftCols(kk).transpose();
  return b;
}

}  // namespace

EigenshapeBasis svd_truncate(const ShapeMatrix& m, double variance_keep) {
  if (m.size() == 0 || m.squaredNorm() == 0.0) throw Error("svd_truncate: zero matrix");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sq = svd.singularValues().array().square();
  const double total = sq.sum();
  double acc = 0;
  std::size_t k = 0;
  while (k < static_cast<std::size_t>(sq.size())) {
    acc += sq(static_cast<Eigen::Index>(k));
    ++k;
    if (acc / total >= variance_keep) break;
  }
  return basis_from_svd(svd, k);
}

EigenshapeBasis svd_truncate_fixed(const ShapeMatrix& m, std::size_t k) {
  if (m.size() == 0 || m.squaredNorm() == 0.0) throw Error("svd_truncate: zero matrix");
  if (k < 1 || k > static_cast<std::size_t>(std::min(m.rows(), m.cols())))
    throw Error("svd_truncate: k out of range");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return basis_from_svd(svd, k);
}

Eigen::MatrixXd low_rank_reconstruction(const ShapeMatrix& m, std::size_t k) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto kk = static_cast<Eigen::Index>(k);
  return svd.matrixU().leftCols(kk) * svd.singularValues().head(kk).asDiagonal() *
         svd.matrixV().leftCols(kk).transpose();
}

LoadingMatrix loading_matrix(const ShapeMatrix& cand, const EigenshapeBasis& basis) {
  if (cand.cols() != basis.components.cols())
    throw Error("loading_matrix: candidate has " + std::to_string(cand.cols()) +
                " angles per slice, components have " + std::to_string(basis.components.cols()));
  if (cand.rows() == 0) throw Error("loading_matrix: empty shape matrix");
  // Mean projection coefficient per component, over the candidate's slices.
  const Eigen::VectorXd coef = (cand * basis.components.transpose()).colwise().mean().transpose();
  return coef.asDiagonal() * basis.components;
}

double loading_cosine(const LoadingMatrix& a, const LoadingMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error("loading_cosine: dimension mismatch");
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.cwiseProduct(b).sum() / (na * nb), -1.0, 1.0);
}

std::vector<MtmScore> cosine_rank(std::span<const std::string> ids,
                                  std::span<const LoadingMatrix> loadings,
                                  const LoadingMatrix& ref_loading, std::size_t keep) {
  if (keep < 1) throw Error("cosine_rank: keep must be >= 1");
  if (ids.size() != loadings.size()) throw Error("cosine_rank: ids/loadings length mismatch");
  std::vector<MtmScore> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out[i].id = ids[i];
    out[i].index = i;
    out[i].degenerate = loadings[i].norm() == 0.0 || ref_loading.norm() == 0.0;
    out[i].similarity = loading_cosine(loadings[i], ref_loading);
  }
  std::sort(out.begin(), out.end(), [](const MtmScore& a, const MtmScore& b) {
    if (a.degenerate != b.degenerate) return !a.degenerate;
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  });
  if (out.size() > keep) out.resize(keep);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

MtmReference prepare_mtm_reference(const SliceSequence& ref_slices, double bound,
                                   double variance_keep) {
  MtmReference ref;
  ref.resolution = std::max<std::size_t>(3, choose_target_resolution(ref_slices, bound));
  const ShapeMatrix m = shape_matrix(resample_slices(ref_slices, ref.resolution));
  ref.basis = svd_truncate(m, variance_keep);
  ref.loading = loading_matrix(m, ref.basis);
  return ref;
}

LoadingMatrix candidate_loading(const SliceSequence& cand_slices, const MtmReference& ref) {
  return loading_matrix(shape_matrix(resample_slices(cand_slices, ref.resolution)), ref.basis);
}

void write_mtm_scores(const std::vector<MtmScore>& scores, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "id,cosine_similarity,rank\n";
  char buf[64];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, "%.17g,%zu", s.similarity, s.rank);
    out << s.id << ',' << buf << '\n';
  }
}

}  // namespace analog
