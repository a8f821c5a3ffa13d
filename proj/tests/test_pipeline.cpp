#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "analog/error.hpp"
#include "analog/pipeline.hpp"
#include "analog/random.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace analog;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Score = sigmoid(-sum |e_a - e_b|): strictly decreasing in embedding distance.
MsgNet distance_model(const ModelDims& dims) {
  MsgNet m = MsgNet::init(dims, 1);
  const auto h = static_cast<Eigen::Index>(dims.hidden);
  m.mlp.w1.setZero();
  m.mlp.w1.topLeftCorner(h, h).setIdentity();
  m.mlp.w2.setZero();
  m.mlp.w2.col(0).setOnes();
  m.mlp.w3.setZero();
  m.mlp.w3(0, 0) = -1.0;
  return m;
}

DemGrid trench(std::uint64_t seed, double depth, double width, double taper, double roughness) {
  SynthSpec spec;
  spec.rows = 120;
  spec.cols = 38;
  spec.cell_size = 100.0;
  spec.base_elevation = 1000.0;
  spec.roughness = roughness;
  spec.valleys.push_back({0.0, 18.5, 119.0, 18.5, depth, width, 0.0, 0.0, taper});
  return synth_terrain(spec, seed);
}

// V trench whose thalweg drifts across the strip along the axis, so its
// cross-section shape varies from slice to slice.
DemGrid drifting_trench(std::size_t rows, double depth, double drift, double cycles) {
  const std::size_t cols = 38;
  std::vector<double> v(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const double t = static_cast<double>(r) / static_cast<double>(rows - 1);
    const double vx = drift * std::sin(2 * std::numbers::pi * cycles * t);
    for (std::size_t c = 0; c < cols; ++c) {
      const double x = 2.0 * static_cast<double>(c) / static_cast<double>(cols - 1) - 1.0;
      const double d = x < vx ? (x + 1) / (vx + 1) : (1 - x) / (1 - vx);
      v[r * cols + c] = 1000 - depth * std::clamp(1.3 * d, 0.0, 1.0);
    }
  }
  return DemGrid(rows, cols, 100.0, {}, std::move(v));
}

}  // namespace

// ---- metrics -----------------------------------------------------------------

TEST_CASE("metrics: hand-computed confusion matrix") {
  const auto m = metrics({3, 1, 1, 5});
  CHECK(m.accuracy == doctest::Approx(0.8));
  CHECK(m.precision == doctest::Approx(0.75));
  CHECK(m.recall == doctest::Approx(0.75));
  CHECK(m.f1 == doctest::Approx(0.75));
  const auto z = metrics({0, 0, 4, 6});
  CHECK(z.precision == 0.0);
  CHECK(z.f1 == 0.0);
  CHECK_THROWS_AS(metrics({0, 0, 0, 0}), Error);
}

TEST_CASE("metrics: F1 from the published precision and recall") {
  CHECK(std::abs(f1_from(0.7665, 0.9805) - 0.8604) < 0.005);
  CHECK(std::abs(100 * f1_from(0.7665, 0.9805) - 86.04) < 0.05);
  CHECK(f1_from(0.0, 0.0) == 0.0);
}

TEST_CASE("metrics: random confusion matrices against an oracle") {
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    const std::size_t tp = rng.below(50), fp = rng.below(50), fn = rng.below(50), tn = rng.below(50) + 1;
    const auto m = metrics({tp, fp, fn, tn});
    const auto o = oracle::metrics(tp, fp, fn, tn);
    CHECK(m.accuracy == o.accuracy);
    CHECK(m.precision == o.precision);
    CHECK(m.recall == o.recall);
    CHECK(m.f1 == o.f1);
    CHECK(m.f1 == doctest::Approx(oracle::f1_counts(tp, fp, fn)).epsilon(1e-15));
  }
}

TEST_CASE("confusion: threshold is inclusive") {
  const std::vector<double> s{0.5, 0.49, 0.9, 0.1};
  const std::vector<int> l{1, 1, 0, 0};
  const auto c = confusion(s, l);
  CHECK(c.tp == 1);
  CHECK(c.fn == 1);
  CHECK(c.fp == 1);
  CHECK(c.tn == 1);
  CHECK_THROWS_AS(confusion(s, std::vector<int>{1}), Error);
}

// ---- retrieval ---------------------------------------------------------------

TEST_CASE("argmax_score: stub scores, ties, singleton, empty") {
  const std::vector<double> s{0.1, 0.9, 0.4};
  CHECK(argmax_score(s) == 1);
  const std::vector<double> tie{0.7, 0.2, 0.7};
  const std::vector<std::string> ids{"zeta", "b", "alpha"};
  CHECK(argmax_score(tie, ids) == 2);
  CHECK(argmax_score(tie) == 0);
  CHECK(argmax_score(std::vector<double>{0.3}) == 0);
  CHECK_THROWS_AS(argmax_score(std::vector<double>{}), Error);
}

// ---- histogram ---------------------------------------------------------------

TEST_CASE("similarity_histogram: reference example and empty input") {
  const std::vector<double> s{0.05, 0.05, 0.95};
  const auto h = similarity_histogram(s, 0.1);
  REQUIRE(h.counts.size() == 10);
  CHECK(h.counts[0] == 2);
  CHECK(h.counts[9] == 1);
  CHECK(h.total == 3);
  CHECK(h.stats_defined);
  CHECK(h.mean == doctest::Approx(0.35));
  CHECK(h.median == doctest::Approx(0.05));

  const auto e = similarity_histogram(std::vector<double>{}, 0.1);
  CHECK(e.total == 0);
  CHECK_FALSE(e.stats_defined);
  CHECK(similarity_histogram(std::vector<double>{1.0}, 0.25).counts.back() == 1);
  CHECK_THROWS_AS(similarity_histogram(s, 0.0), Error);
}

TEST_CASE("similarity_histogram: recount oracle on random scores") {
  Rng rng(8);
  std::vector<double> s(1000);
  for (auto& x : s) x = rng.uniform();
  s[0] = 1.0;
  s[1] = 0.0;
  const auto h = similarity_histogram(s, 0.05);
  std::size_t sum = 0;
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double lo = h.edges[b];
    const double hi = b + 1 < h.edges.size() ? h.edges[b + 1] : 1.0;
    std::size_t n = 0;
    for (double x : s)
      if (x >= lo && (x < hi || (b + 1 == h.counts.size() && x <= 1.0))) ++n;
    CHECK(h.counts[b] == n);
    sum += h.counts[b];
  }
  CHECK(sum == 1000);

  const auto dir = testutil::scratch_dir("hist");
  write_histogram_csv(h, dir / "h.csv");
  write_histogram_svg(h, dir / "h.svg");
  CHECK(slurp(dir / "h.svg").find("<svg") != std::string::npos);
}

// ---- pair datasets -----------------------------------------------------------

TEST_CASE("parse_pair_dataset: rows, bad label, balance") {
  const auto two = parse_pair_dataset("graph_a,graph_b,label\na,b,1\nc,d,0\n");
  REQUIRE(two.size() == 2);
  CHECK(two[1].graph_a == "c");
  CHECK(two[1].label == 0);

  try {
    parse_pair_dataset("graph_a,graph_b,label\na,b,1\nc,d,2\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_pair_dataset("x,y,z\n"), ParseError);

  std::string text = "graph_a,graph_b,label\n";
  for (int i = 0; i < 305; ++i) text += "g" + std::to_string(i) + ",h," + (i < 154 ? "1" : "0") + "\n";
  const auto pairs = parse_pair_dataset(text);
  CHECK(balance_report(pairs) == "154 positive, 151 negative");
}

TEST_CASE("make_pair_dataset: resolves names and reports missing graphs") {
  const auto g = build_graph(synth_terrain([] {
    SynthSpec s;
    s.rows = 30;
    s.cols = 30;
    s.cell_size = 100;
    s.valleys.push_back({0, 15, 29, 15, 600, 2000});
    return s;
  }(), 1));
  const std::map<std::string, TerrainGraph> graphs{{"a", g}, {"b", g}};
  const std::vector<LabeledPair> pairs{{"a", "b", 1}, {"b", "a", 0}, {"a", "a", 1}};
  const auto ds = make_pair_dataset(pairs, graphs);
  CHECK(ds.graphs.size() == 2);
  CHECK(ds.pairs.size() == 3);
  CHECK(ds.pairs[1].a == 1);
  CHECK(ds.pairs[1].b == 0);
  const std::vector<LabeledPair> bad{{"a", "zz", 1}};
  CHECK_THROWS_AS(make_pair_dataset(bad, graphs), Error);

  const auto dir = testutil::scratch_dir("pairs");
  write_graph(g, dir / "a.graph");
  CHECK(load_graphs_for(std::vector<LabeledPair>{{"a", "a", 1}}, dir).size() == 1);
  CHECK_THROWS_AS(load_graphs_for(bad, dir), Error);
}

// ---- ablation ----------------------------------------------------------------

TEST_CASE("ablation: channel lookup, zeroing, empty variant list") {
  CHECK(feature_index("VRM") == kVrm);
  CHECK(feature_index("DSE") == kDse);
  CHECK_THROWS_AS(feature_index("Aspect"), Error);

  Rng rng(2);
  PairDataset ds;
  for (int k = 0; k < 2; ++k) {
    std::vector<NodeSample> nodes{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    Eigen::MatrixXd f = Eigen::MatrixXd::Random(4, 5);
    ds.graphs.push_back(assemble_graph(nodes, f, {{0, 1}, {1, 3}, {2, 3}, {0, 2}}));
    ds.names.push_back("g" + std::to_string(k));
  }
  for (int i = 0; i < 5; ++i) ds.pairs.push_back({0, 0, 1});
  const std::vector<std::size_t> drop{kCd, kDse};
  const auto z = zero_channels(ds, drop);
  for (const auto& g : z.graphs) {
    CHECK(g.features.col(kCd).isZero(0));
    CHECK(g.features.col(kDse).isZero(0));
    CHECK(g.features.col(kVrm) != Eigen::VectorXd::Zero(4));
  }

  TrainConfig cfg;
  cfg.dims = {5, 8, 8, 4};
  cfg.max_epochs = 2;
  cfg.patience = 1;
  const auto rows = ablation_run(ds, cfg, {});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].name == "full");
  CHECK_THROWS_AS(ablation_run(ds, cfg, {{"Bogus"}}), Error);

  const auto all = ablation_run(ds, cfg, {{"VRM", "ACR", "Slope", "CD", "DSE"}});
  REQUIRE(all.size() == 2);
  CHECK(all[1].name == "w/o VRM+ACR+Slope+CD+DSE");
  CHECK(all[1].report.val.mean.accuracy == 1.0);  // majority class (all positive)
  const auto dir = testutil::scratch_dir("ablate");
  write_ablation_csv(all, dir / "a.csv");
  CHECK(slurp(dir / "a.csv").find("full") != std::string::npos);
}

// ---- configuration -----------------------------------------------------------

TEST_CASE("config: defaults, unknown keys, validation, hash") {
  const auto d = parse_config("{}");
  CHECK(d.twc_keep == 5000);
  CHECK(d.mtm_keep == 1000);
  CHECK(d.ssc.blk == 33);
  CHECK(d.train.lr == 1e-4);
  CHECK(d.reference_graph.contour_interval == 200.0);

  CHECK_THROWS_AS(parse_config("{\"twc_kep\": 10}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"ssc\": {\"bulk\": 3}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"twc_keep\": 10, \"mtm_keep\": 20}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"ssc\": {\"blk\": 32}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"seed\": \"one\"}"), ConfigError);

  const auto c = parse_config("{\"seed\": 7, \"twc_keep\": 50, \"mtm_keep\": 10}");
  CHECK(c.seed == 7);
  CHECK(config_hash(c) == config_hash(parse_config(dump_config(c))));
  CHECK(config_hash(c) != config_hash(d));
  CHECK(config_hash(c).size() == 16);
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

// ---- funnel ------------------------------------------------------------------

TEST_CASE("run_funnel: exact copy ranks first, funnel is monotone, manifests are stable") {
  const DemGrid ref = drifting_trench(120, 900, 0.5, 1.5);
  std::vector<ValleyCandidate> cands;
  cands.push_back(reference_candidate(drifting_trench(140, 500, 0.3, 1.0), "b00"));
  cands.push_back(reference_candidate(trench(2, 300, 2500, 0.0, 40), "c00"));
  cands.push_back(reference_candidate(trench(3, 900, 1200, 0.0, 60), "c01"));
  cands.push_back(reference_candidate(ref, "copy"));
  for (int i = 0; i < 6; ++i)
    cands.push_back(reference_candidate(trench(10 + i, 200 + 150 * i, 1500 + 300 * i, 0.2 * (i % 3), 30),
                                        "c" + std::to_string(10 + i)));

  PipelineConfig cfg;
  cfg.twc_keep = 6;
  cfg.mtm_keep = 4;
  cfg.workers = 1;
  cfg.reference_graph = cfg.candidate_graph;
  const auto model = distance_model({5, 8, 8, 4});

  const auto dir1 = testutil::scratch_dir("funnel1"), dir2 = testutil::scratch_dir("funnel2");
  const auto r1 = run_funnel(cands, ref, model, cfg, dir1);
  CHECK(r1.sizes.ssc == cands.size());
  CHECK(r1.sizes.twc <= cfg.twc_keep);
  CHECK(r1.sizes.mtm <= cfg.mtm_keep);
  CHECK(r1.sizes.ssc >= r1.sizes.twc);
  CHECK(r1.sizes.twc >= r1.sizes.mtm);
  CHECK(r1.sizes.mtm == r1.sizes.final);
  REQUIRE_FALSE(r1.ranking.empty());
  CHECK(r1.ranking[0].id == "copy");
  CHECK(r1.ranking[0].rank == 1);
  for (std::size_t i = 1; i < r1.ranking.size(); ++i) CHECK(r1.ranking[i - 1].score >= r1.ranking[i].score);

  run_funnel(cands, ref, model, cfg, dir2);
  for (const char* f : {"twc.csv", "mtm.csv", "final.csv", "reference_components.tmat"}) {
    CHECK(std::filesystem::exists(dir1 / f));
    CHECK(slurp(dir1 / f) == slurp(dir2 / f));
  }

  CHECK_THROWS_AS(run_funnel({}, ref, model, cfg), EmptyStageError);
}
