#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "analog/error.hpp"
#include "analog/mtm.hpp"
#include "analog/random.hpp"
#include "analog/raster.hpp"
#include "test_util.hpp"

using namespace analog;

namespace {

// Independent linear interpolation + MAE, written from the definition.
double brute_deviation(const std::vector<double>& y, std::size_t n) {
  const std::size_t big = y.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(n - 1);
    xs[j] = x;
    const double pos = x * static_cast<double>(big - 1);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(pos), big - 2);
    ys[j] = y[i] + (y[i + 1] - y[i]) * (pos - static_cast<double>(i));
  }
  double err = 0;
  for (std::size_t i = 0; i < big; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(big - 1);
    std::size_t j = 0;
    while (j + 2 < n && xs[j + 1] <= x) ++j;
    const double yh = ys[j] + (ys[j + 1] - ys[j]) * (x - xs[j]) / (xs[j + 1] - xs[j]);
    err += std::abs(y[i] - yh);
  }
  const double span = *std::max_element(y.begin(), y.end()) - *std::min_element(y.begin(), y.end());
  return err / static_cast<double>(big) / span;
}

// Synthetic trench: taper along the axis plus a rounded V across it.
SliceSequence trench_slices(std::size_t count, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    const double depth = 3000 + 2000 * std::sin(std::numbers::pi * t);
    const double skew = rng.uniform(-0.2, 0.2);
    for (std::size_t k = 0; k < width; ++k) {
      const double x = 2.0 * static_cast<double>(k) / static_cast<double>(width - 1) - 1.0;
      v.push_back(-depth * std::exp(-std::pow((x - skew) / 0.35, 2)) + 150 * std::sin(7 * x + t));
    }
  }
  return SliceSequence(width, 100.0, v);
}

}  // namespace

TEST_CASE("mae_resample: linear ramp reconstructs exactly") {
  std::vector<double> y(50);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 3.0 * static_cast<double>(i) - 20.0;
  for (std::size_t n : {2u, 3u, 17u, 50u, 90u}) CHECK(mae_resample(y, n).deviation < 1e-14);
}

TEST_CASE("mae_resample: sine 64 -> 16 matches the brute-force oracle") {
  std::vector<double> y(64);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sin(static_cast<double>(i) * 0.3);
  const auto r = mae_resample(y, 16);
  CHECK(r.values.size() == 16);
  CHECK(std::abs(r.deviation - brute_deviation(y, 16)) < 1e-12);
  CHECK(r.deviation > 0.0);
}

TEST_CASE("mae_resample: constant profile is a zero-span error") {
  const std::vector<double> y(10, 4.0);
  CHECK_THROWS_AS(mae_resample(y, 5), Error);
}

TEST_CASE("choose_target_resolution: linear, bound zero, and minimality by scan") {
  std::vector<double> lin;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 20; ++k) lin.push_back(k * (i + 1.0));
  CHECK(choose_target_resolution(SliceSequence(20, 1.0, lin), 0.015) == 2);

  const auto tr = trench_slices(12, 38, 1);
  CHECK(choose_target_resolution(tr, 0.0) == 38);

  for (double bound : {0.005, 0.015, 0.03}) {
    const std::size_t n = choose_target_resolution(tr, bound);
    for (std::size_t i = 0; i < tr.size(); ++i) CHECK(mae_resample(tr.slice(i), n).deviation <= bound);
    for (std::size_t m = 2; m < n; ++m) {
      bool all = true;
      for (std::size_t i = 0; i < tr.size(); ++i)
        all = all && mae_resample(tr.slice(i), m).deviation <= bound;
      CHECK_FALSE(all);
    }
  }
}

TEST_CASE("shape_function: straight lines, V profile, offsets and reversal") {
  const std::vector<double> line{1, 3, 5, 7, 9, 11};
  for (double a : shape_function(line)) CHECK(a == 0.0);

  const std::vector<double> v{2, 1, 0, 1, 2};
  const auto s = shape_function(v);
  REQUIRE(s.size() == 3);
  CHECK(s[0] == 0.0);
  CHECK(s[1] == doctest::Approx(2 * std::atan(2.0)));  // rises scaled by 4 / 2
  CHECK(s[2] == 0.0);

  Rng rng(4);
  std::vector<double> y(30);
  for (auto& x : y) x = std::round(rng.uniform(-50, 50) * 8) / 8;
  std::vector<double> shifted = y, rev(y.rbegin(), y.rend());
  for (auto& x : shifted) x += 1024.0;
  const auto a = shape_function(y), b = shape_function(shifted), r = shape_function(rev);
  CHECK(a == b);
  // Reversal mirrors the index order; turning direction is preserved.
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(r[i] == doctest::Approx(a[a.size() - 1 - i]).epsilon(1e-15));
  // Relief scaling does not change the shape.
  std::vector<double> tall = y;
  for (auto& x : tall) x *= 64.0;
  CHECK(shape_function(tall) == a);
  for (double x : a) {
    CHECK(x > -std::numbers::pi);
    CHECK(x <= std::numbers::pi);
  }
  CHECK(shape_function(std::vector<double>(181, 0.0)).size() == 179);
  CHECK_THROWS_AS(shape_function(std::vector<double>{1, 2}), Error);
}

TEST_CASE("shape_matrix: identical slices, planar terrain, dimensions") {
  std::vector<double> v;
  for (int i = 0; i < 4; ++i)
    for (double x : {0.0, 3.0, 1.0, 7.0, 2.0}) v.push_back(x);
  const ShapeMatrix m = shape_matrix(SliceSequence(5, 1.0, v));
  CHECK(m.rows() == 4);
  CHECK(m.cols() == 3);
  for (int i = 1; i < 4; ++i) CHECK(m.row(i) == m.row(0));

  std::vector<double> plane;
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 9; ++k) plane.push_back(2.0 * i + 0.5 * k);
  CHECK(shape_matrix(SliceSequence(9, 1.0, plane)).isZero(0));

  const auto tr = resample_slices(trench_slices(25, 38, 2), 181);
  const ShapeMatrix t = shape_matrix(tr);
  CHECK(t.rows() == 25);
  CHECK(t.cols() == 179);
}

TEST_CASE("svd_truncate: rank-1 matrix") {
  const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(6, 1, 6);
  const Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(4, -1, 2);
  const Eigen::MatrixXd m = u * w.transpose();
  const auto b = svd_truncate(m, 0.8);
  CHECK(b.k_pc == 1);
  CHECK((low_rank_reconstruction(m, 1) - m).norm() < 1e-12);
  CHECK_THROWS_AS(svd_truncate(Eigen::MatrixXd::Zero(3, 3)), Error);
}

TEST_CASE("svd_truncate: truncation error equals the discarded spectrum (Gram oracle)") {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd m(12, 8);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.transpose() * m);
    Eigen::VectorXd lam = es.eigenvalues().reverse().cwiseMax(0.0);  // sigma^2, descending
    const auto b = svd_truncate(m, 0.8);
    // Smallest k reaching 80% of the energy, from the oracle spectrum.
    double acc = 0;
    std::size_t k_oracle = 0;
    while (acc / lam.sum() < 0.8) acc += lam(static_cast<Eigen::Index>(k_oracle++));
    CHECK(b.k_pc == k_oracle);
    for (std::size_t k = 1; k <= 8; ++k) {
      const double err = (m - low_rank_reconstruction(m, k)).norm();
      const double expect = std::sqrt(lam.tail(static_cast<Eigen::Index>(8 - k)).sum());
      CHECK(std::abs(err - expect) < 1e-9);
    }
    for (Eigen::Index i = 0; i < b.singular_values.size(); ++i)
      CHECK(b.singular_values(i) == doctest::Approx(std::sqrt(lam(i))).epsilon(1e-10));
  }
}

TEST_CASE("loading_matrix: self projection, orthogonal candidate, 19 x 179 structure") {
  const auto tr = resample_slices(trench_slices(40, 38, 3), 181);
  const ShapeMatrix m = shape_matrix(tr);
  const auto basis = svd_truncate_fixed(m, 19);
  const LoadingMatrix ref = loading_matrix(m, basis);
  CHECK(ref.rows() == 19);
  CHECK(ref.cols() == 179);
  CHECK(loading_matrix(m, basis) == ref);
  CHECK(loading_cosine(ref, ref) == doctest::Approx(1.0));

  // Candidate rows orthogonal to every component.
  Eigen::MatrixXd q = Eigen::MatrixXd::Random(179, 179);
  Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(179, 179) - basis.components.transpose() * basis.components;
  const Eigen::MatrixXd orth = (proj * q.leftCols(5)).transpose();
  CHECK(loading_matrix(orth, basis).norm() < 1e-12);

  CHECK_THROWS_AS(loading_matrix(Eigen::MatrixXd::Ones(3, 10), basis), Error);
}

TEST_CASE("cosine_rank: identity first, negation last, hand-computed order") {
  LoadingMatrix ref(2, 2);
  ref << 1, 0, 0, 1;
  LoadingMatrix a(2, 2), b(2, 2), c(2, 2);
  a << 1, 0, 0, 1;
  b << -1, 0, 0, -1;
  c << 1, 1, 0, 0;  // cos = 1 / (sqrt2 * sqrt2) = 0.5
  const std::vector<std::string> ids{"b", "c", "a"};
  const std::vector<LoadingMatrix> ls{b, c, a};
  const auto out = cosine_rank(ids, ls, ref, 10);
  REQUIRE(out.size() == 3);
  CHECK(out[0].id == "a");
  CHECK(out[0].similarity == doctest::Approx(1.0));
  CHECK(out[1].id == "c");
  CHECK(out[1].similarity == doctest::Approx(0.5));
  CHECK(out[2].id == "b");
  CHECK(out[2].similarity == doctest::Approx(-1.0));

  // Positive scaling keeps the order; zero loading ranks last.
  const std::vector<std::string> ids2{"z", "a", "c", "b"};
  const std::vector<LoadingMatrix> ls2{LoadingMatrix::Zero(2, 2), 7.0 * a, 0.1 * c, 3.0 * b};
  const auto out2 = cosine_rank(ids2, ls2, ref, 10);
  CHECK(out2[0].id == "a");
  CHECK(out2[1].id == "c");
  CHECK(out2[2].id == "b");
  CHECK(out2[3].id == "z");
  CHECK(out2[3].degenerate);
  CHECK(out2[3].similarity == 0.0);
  CHECK(cosine_rank(ids2, ls2, ref, 2).size() == 2);
}

TEST_CASE("prepare_mtm_reference: bound holds at the chosen resolution") {
  const auto tr = trench_slices(30, 38, 5);
  const auto ref = prepare_mtm_reference(tr);
  for (std::size_t i = 0; i < tr.size(); ++i)
    CHECK(mae_resample(tr.slice(i), ref.resolution).deviation <= 0.015);
  CHECK(ref.loading.rows() == static_cast<Eigen::Index>(ref.basis.k_pc));
  const auto self = candidate_loading(tr, ref);
  CHECK(loading_cosine(self, ref.loading) == doctest::Approx(1.0));
}
