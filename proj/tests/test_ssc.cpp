#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "analog/error.hpp"
#include "analog/random.hpp"
#include "analog/ssc.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace analog;
using oracle::blob_mask;
using oracle::union_find_components;

namespace {

// Direct summation over the truncated window, skipping nodata.
BinaryMask ledb_oracle(const DemGrid& g, std::size_t blk, double c) {
  const auto h = static_cast<long>(blk / 2);
  BinaryMask m(g.rows(), g.cols());
  for (long r = 0; r < static_cast<long>(g.rows()); ++r)
    for (long q = 0; q < static_cast<long>(g.cols()); ++q) {
      if (g.is_nodata(r, q)) continue;
      double sum = 0;
      long n = 0;
      for (long rr = r - h; rr <= r + h; ++rr)
        for (long cc = q - h; cc <= q + h; ++cc) {
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(g.rows()) || cc >= static_cast<long>(g.cols())) continue;
          if (g.is_nodata(rr, cc)) continue;
          sum += g.at(rr, cc);
          ++n;
        }
      if (g.at(r, q) < sum / static_cast<double>(n) - c) m.set(r, q);
    }
  return m;
}

bool subset(const BinaryMask& a, const BinaryMask& b) {
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c)
      if (a.get(r, c) && !b.get(r, c)) return false;
  return true;
}

Skeleton skeleton_of(std::vector<Pixel> px) {
  Skeleton s;
  s.pixels = std::move(px);
  return s;
}

}  // namespace

TEST_CASE("ledb: constant grid gives an empty mask") {
  const auto g = DemGrid::filled(20, 20, 30.0, 123.0);
  CHECK(ledb_binarize(g, 5, 1.0).count() == 0);
}

TEST_CASE("ledb: single pit in a 5x5 plateau") {
  std::vector<double> v(25, 100.0);
  v[12] = 0.0;
  const DemGrid g(5, 5, 30.0, {}, v);
  const BinaryMask m = ledb_binarize(g, 5, 50.0);
  CHECK(m.count() == 1);
  CHECK(m.get(2, 2));
  CHECK(m == ledb_oracle(g, 5, 50.0));
}

TEST_CASE("ledb: tilted plane matches the direct window-mean oracle") {
  std::vector<double> v(30 * 40);
  for (std::size_t r = 0; r < 30; ++r)
    for (std::size_t c = 0; c < 40; ++c) v[r * 40 + c] = static_cast<double>(c);
  const DemGrid g(30, 40, 30.0, {}, v);
  const BinaryMask m = ledb_binarize(g, 3, 1.0);
  CHECK(m.count() == 0);
  CHECK(m == ledb_oracle(g, 3, 1.0));
}

TEST_CASE("ledb: random grids with nodata match the oracle and ignore constant offsets") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    std::vector<double> v(37 * 29);
    for (auto& x : v) x = std::round(rng.uniform(0, 400));
    for (int k = 0; k < 30; ++k) v[rng.below(v.size())] = DemGrid::kDefaultNodata;
    const DemGrid g(37, 29, 30.0, {}, v);
    for (std::size_t blk : {3u, 7u, 33u}) {
      const BinaryMask m = ledb_binarize(g, blk, 50.0);
      CHECK(m == ledb_oracle(g, blk, 50.0));
      std::vector<double> w = v;
      for (auto& x : w)
        if (x != DemGrid::kDefaultNodata) x += 1024.0;
      CHECK(ledb_binarize(DemGrid(37, 29, 30.0, {}, w), blk, 50.0) == m);
    }
  }
}

TEST_CASE("ledb: even or tiny window is rejected") {
  const auto g = DemGrid::filled(5, 5, 30.0, 0.0);
  CHECK_THROWS_AS(ledb_binarize(g, 4, 1.0), Error);
  CHECK_THROWS_AS(ledb_binarize(g, 1, 1.0), Error);
}

TEST_CASE("thinning: empty mask and thin line are fixed points") {
  BinaryMask empty(10, 10);
  CHECK(zhang_suen_thin(empty) == empty);
  BinaryMask line(10, 20);
  for (std::size_t c = 2; c < 18; ++c) line.set(5, c);
  CHECK(zhang_suen_thin(line) == line);
  BinaryMask diag(12, 12);
  for (std::size_t i = 1; i < 11; ++i) diag.set(i, i);
  CHECK(zhang_suen_thin(diag) == diag);
}

TEST_CASE("thinning: 3x10 bar becomes a one-pixel horizontal line") {
  BinaryMask m(7, 14);
  for (std::size_t r = 2; r <= 4; ++r)
    for (std::size_t c = 2; c <= 11; ++c) m.set(r, c);
  const BinaryMask t = zhang_suen_thin(m);
  std::size_t row = 99, n = 0;
  bool one_row = true;
  for (std::size_t r = 0; r < 7; ++r)
    for (std::size_t c = 0; c < 14; ++c)
      if (t.get(r, c)) {
        if (row == 99) row = r;
        one_row = one_row && r == row;
        ++n;
      }
  CHECK(one_row);
  CHECK(n >= 8);
}

TEST_CASE("thinning: idempotent, subset, component-preserving on random masks") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const BinaryMask m = blob_mask(seed);
    const BinaryMask t = zhang_suen_thin(m);
    CHECK(subset(t, m));
    CHECK(zhang_suen_thin(t) == t);
    CHECK(union_find_components(t) == union_find_components(m));
  }
}

TEST_CASE("components: diagonal neighbours join, gaps split") {
  BinaryMask a(4, 4);
  a.set(0, 0);
  a.set(1, 1);
  CHECK(connected_components(a).size() == 1);
  BinaryMask b(4, 4);
  b.set(0, 0);
  b.set(0, 2);
  const auto comps = connected_components(b);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0].pixels.front() == Pixel{0, 0});
  CHECK(comps[1].pixels.front() == Pixel{0, 2});
}

TEST_CASE("components: random masks match union-find and partition the pixels") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    Rng rng(seed);
    BinaryMask m(64, 64);
    for (std::size_t r = 0; r < 64; ++r)
      for (std::size_t c = 0; c < 64; ++c)
        if (rng.bernoulli(0.3)) m.set(r, c);
    const auto comps = connected_components(m);
    CHECK(comps.size() == union_find_components(m));
    std::size_t total = 0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      total += comps[i].pixels.size();
      if (i) CHECK(comps[i - 1].pixels.front() < comps[i].pixels.front());
    }
    CHECK(total == m.count());
  }
}

TEST_CASE("line fit: diagonal, vertical and too-short skeletons") {
  const LineFit d = fit_skeleton_line(skeleton_of({{0, 0}, {1, 1}, {2, 2}}));
  CHECK(d.mse < 1e-12);
  CHECK(d.length == doctest::Approx(2 * std::sqrt(2.0)));
  CHECK(std::abs(d.slope) == doctest::Approx(1.0));

  const LineFit v = fit_skeleton_line(skeleton_of({{0, 3}, {1, 3}, {2, 3}, {3, 3}, {4, 3}}));
  CHECK(v.mse < 1e-12);
  CHECK(v.length == doctest::Approx(4.0));
  CHECK(std::isinf(v.slope));

  CHECK_THROWS_AS(fit_skeleton_line(skeleton_of({{0, 0}})), Error);
}

TEST_CASE("line fit: L-shaped skeleton matches the covariance eigen oracle") {
  std::vector<Pixel> px;
  for (std::size_t c = 0; c < 5; ++c) px.push_back({4, c});
  for (std::size_t r = 0; r < 4; ++r) px.push_back({r, 0});
  REQUIRE(px.size() == 9);
  const LineFit f = fit_skeleton_line(skeleton_of(px));

  Eigen::MatrixXd pts(9, 2);
  for (int i = 0; i < 9; ++i) pts.row(i) << static_cast<double>(px[i].col), static_cast<double>(px[i].row);
  const Eigen::RowVector2d mean = pts.colwise().mean();
  const Eigen::MatrixXd centered = pts.rowwise() - mean;
  const Eigen::Matrix2d cov = centered.transpose() * centered / 9.0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  CHECK(f.mse == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-12));
  const Eigen::Vector2d dir = es.eigenvectors().col(1);
  const Eigen::VectorXd proj = centered * dir;
  CHECK(f.length == doctest::Approx(proj.maxCoeff() - proj.minCoeff()).epsilon(1e-12));
}

TEST_CASE("line fit: any angle, by brute-force angle scan") {
  Rng rng(5);
  for (int k = 0; k < 10; ++k) {
    std::vector<Pixel> px;
    for (int i = 0; i < 12; ++i) px.push_back({rng.below(30), rng.below(30)});
    std::sort(px.begin(), px.end());
    px.erase(std::unique(px.begin(), px.end()), px.end());
    const LineFit f = fit_skeleton_line(skeleton_of(px));
    double cr = 0, cc = 0;
    for (auto p : px) {
      cr += static_cast<double>(p.row);
      cc += static_cast<double>(p.col);
    }
    cr /= static_cast<double>(px.size());
    cc /= static_cast<double>(px.size());
    double best = 1e18;
    for (int a = 0; a < 200000; ++a) {
      const double th = 3.141592653589793 * a / 200000.0;
      double s = 0;
      for (auto p : px) {
        const double d = (static_cast<double>(p.row) - cr) * std::cos(th) - (static_cast<double>(p.col) - cc) * std::sin(th);
        s += d * d;
      }
      best = std::min(best, s / static_cast<double>(px.size()));
    }
    CHECK(f.mse <= best + 1e-9);
    CHECK(f.mse == doctest::Approx(best).epsilon(1e-6));
  }
}

TEST_CASE("select_and_clip: thresholds are applied literally") {
  const DemGrid tile = DemGrid::filled(60, 300, 30.0, 0.0);
  std::vector<Skeleton> sk(3);
  for (std::size_t c = 40; c <= 240; ++c) sk[0].pixels.push_back({30, c});  // len 200
  for (std::size_t c = 40; c <= 140; ++c) sk[1].pixels.push_back({10, c});  // len 100
  for (std::size_t c = 40; c <= 240; ++c) sk[2].pixels.push_back({50 - (c % 2) * 3, c});  // mse ~2.25
  sk[0].component_id = 0;
  sk[1].component_id = 1;
  sk[2].component_id = 2;
  SscConfig cfg;
  const auto out = select_and_clip(tile, "t", sk, cfg);
  REQUIRE(out.size() == 1);
  CHECK(out[0].fit.length == doctest::Approx(200.0));
  CHECK(out[0].fit.mse <= cfg.err);
  CHECK(out[0].box.row_min == 10);
  CHECK(out[0].box.row_max == 50);
  CHECK(out[0].box.col_min == 20);
  CHECK(out[0].box.col_max == 260);
  CHECK(out[0].raster.rows() == out[0].box.rows());
  CHECK(out[0].raster.cols() == out[0].box.cols());
  CHECK(out[0].source_tile == "t");
}

TEST_CASE("ssc: straight valley is kept, ring depression is not") {
  SynthSpec s;
  s.rows = s.cols = 300;
  s.cell_size = 30.0;
  s.roughness = 5.0;
  s.valleys.push_back({60, 30, 60, 270, 250.0, 900.0});
  s.rings.push_back({190, 150, 2100.0, 250.0, 600.0});
  const DemGrid g = synth_terrain(s, 4);
  const auto cands = run_ssc({{"tile", g}}, SscConfig{}, 1);
  REQUIRE(cands.size() == 1);
  CHECK(cands[0].fit.center_row == doctest::Approx(60.0).epsilon(0.05));
  CHECK(cands[0].box.row_max < 150);
}

TEST_CASE("dedup: overlapping detections keep the lower-mse candidate") {
  auto make = [](std::string id, BoundingBox b, double mse) {
    ValleyCandidate c;
    c.id = std::move(id);
    c.box = b;
    c.fit.mse = mse;
    c.source_tile = "t";
    const GeoOrigin o{static_cast<double>(b.col_min) * 30.0, -static_cast<double>(b.row_min) * 30.0};
    c.raster = DemGrid::filled(b.rows(), b.cols(), 30.0, 0.0, o);
    return c;
  };
  std::vector<ValleyCandidate> cs{make("a", {0, 9, 0, 99}, 1.0), make("b", {0, 9, 1, 100}, 0.5),
                                  make("c", {50, 59, 0, 99}, 1.5)};
  const auto out = dedup_candidates(cs, 0.8);
  REQUIRE(out.size() == 2);
  CHECK(out[0].id == "b");
  CHECK(out[1].id == "c");
}

TEST_CASE("candidate manifest round trip") {
  const auto dir = testutil::scratch_dir("ssc_manifest");
  SynthSpec s;
  s.rows = s.cols = 260;
  s.valleys.push_back({130, 20, 140, 240, 200.0, 900.0});
  const auto cands = run_ssc({{"t0", synth_terrain(s, 2)}}, SscConfig{}, 1);
  REQUIRE_FALSE(cands.empty());
  std::filesystem::create_directories(dir / "r");
  for (const auto& c : cands) write_binary_grid(c.raster, dir / "r" / (c.id + ".tgrd"));
  write_candidate_manifest(cands, dir / "m.csv");
  const auto back = read_candidate_manifest(dir / "m.csv", dir / "r");
  REQUIRE(back.size() == cands.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].id == cands[i].id);
    CHECK(back[i].box == cands[i].box);
    CHECK(back[i].fit.mse == cands[i].fit.mse);
    CHECK(back[i].fit.dir_col == cands[i].fit.dir_col);
    REQUIRE(back[i].raster.size() == cands[i].raster.size());
    CHECK(back[i].raster.origin() == cands[i].raster.origin());
    double worst = 0;
    for (std::size_t r = 0; r < back[i].raster.rows(); ++r)
      for (std::size_t c = 0; c < back[i].raster.cols(); ++c)
        worst = std::max(worst, std::abs(back[i].raster.at(r, c) - cands[i].raster.at(r, c)) /
                                    std::max(1.0, std::abs(cands[i].raster.at(r, c))));
    CHECK(worst < 1e-7);  // f32 payload
  }
}
