#include "analog/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "analog/parallel.hpp"

namespace analog {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

TerrainGraph candidate_graph(const SliceSequence& slices, const GraphConfig& cfg) {
  return build_graph(slices_to_grid(slices), cfg);
}

void write_final_scores(const std::vector<FinalScore>& scores, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "id,score,rank,graph_failed\n";
  char buf[64];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, "%.17g,%zu,%d", s.score, s.rank, s.graph_failed ? 1 : 0);
    out << s.id << ',' << buf << '\n';
  }
}

PipelineResult run_funnel(const std::vector<ValleyCandidate>& candidates, const DemGrid& ref_grid,
                          const MsgNet& model, const PipelineConfig& cfg,
                          const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  PipelineResult res;
  res.sizes.ssc = candidates.size();
  if (candidates.empty()) throw EmptyStageError("ssc");

  // TWC
  auto t0 = Clock::now();
  const SliceSequence ref_slices =
      reference_slices(ref_grid, cfg.slices.width, cfg.slices.along_spacing_m);
  if (ref_slices.size() == 0) throw Error("reference grid yields no slices");
  std::vector<SliceSequence> all_slices(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    try {
      all_slices[i] = slice_decompose(candidates[i], cfg.slices);
    } catch (const Error&) {
      // No usable slices: the candidate drops out at this stage.
    }
  }, cfg.workers);
  std::vector<std::string> ids;
  std::vector<SliceSequence> seqs;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (all_slices[i].size() >= 3) {
      ids.push_back(candidates[i].id);
      seqs.push_back(std::move(all_slices[i]));
    }
  if (ids.empty()) throw EmptyStageError("twc");
  const auto twc = twc_filter(ids, seqs, ref_slices, cfg.twc_keep, cfg.workers);
  res.sizes.twc = twc.size();
  res.seconds["twc"] = seconds_since(t0);
  if (twc.empty()) throw EmptyStageError("twc");

  // MTM
  t0 = Clock::now();
  const MtmReference mref = prepare_mtm_reference(ref_slices, cfg.mtm_bound, cfg.mtm_variance);
  std::vector<std::string> twc_ids(twc.size());
  std::vector<LoadingMatrix> loadings(twc.size());
  parallel_for(twc.size(), [&](std::size_t i) {
    twc_ids[i] = twc[i].id;
    loadings[i] = candidate_loading(seqs[twc[i].index], mref);
  }, cfg.workers);
  const auto mtm = cosine_rank(twc_ids, loadings, mref.loading, cfg.mtm_keep);
  res.sizes.mtm = mtm.size();
  res.seconds["mtm"] = seconds_since(t0);
  if (mtm.empty()) throw EmptyStageError("mtm");

  // MSG-Net
  t0 = Clock::now();
  const TerrainGraph ref_graph = candidate_graph(ref_slices, cfg.reference_graph);
  const Eigen::VectorXd ref_emb = gcn_forward(ref_graph, model.gcn, Mode::kEval);
  std::vector<FinalScore> fin(mtm.size());
  parallel_for(mtm.size(), [&](std::size_t i) {
    fin[i].id = mtm[i].id;
    const SliceSequence& s = seqs[twc[mtm[i].index].index];
    try {
      const TerrainGraph g = candidate_graph(s, cfg.candidate_graph);
      fin[i].score = siamese_score_embeddings(gcn_forward(g, model.gcn, Mode::kEval), ref_emb, model);
    } catch (const Error&) {
      fin[i].graph_failed = true;
      fin[i].score = 0.0;
    }
  }, cfg.workers);
  std::sort(fin.begin(), fin.end(), [](const FinalScore& a, const FinalScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  for (std::size_t i = 0; i < fin.size(); ++i) fin[i].rank = i + 1;
  res.sizes.final = fin.size();
  res.seconds["msgnet"] = seconds_since(t0);
  res.ranking = std::move(fin);

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    write_twc_scores(twc, *out_dir / "twc.csv");
    write_mtm_scores(mtm, *out_dir / "mtm.csv");
    DenseMatrix comps;
    comps.rows = static_cast<std::size_t>(mref.basis.components.rows());
    comps.cols = static_cast<std::size_t>(mref.basis.components.cols());
    comps.values.resize(comps.rows * comps.cols);
    for (std::size_t r = 0; r < comps.rows; ++r)
      for (std::size_t c = 0; c < comps.cols; ++c)
        comps.values[r * comps.cols + c] =
            mref.basis.components(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    write_binary_matrix(comps, *out_dir / "reference_components.tmat");
    write_final_scores(res.ranking, *out_dir / "final.csv");
  }
  return res;
}

namespace {

void write_summary(const PipelineResult& res, const PipelineConfig& cfg,
                   const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["config_hash"] = config_hash(cfg);
  doc["seed"] = cfg.seed;
  doc["stage_sizes"] = {{"ssc", res.sizes.ssc},
                        {"twc", res.sizes.twc},
                        {"mtm", res.sizes.mtm},
                        {"final", res.sizes.final}};
  nlohmann::ordered_json t = nlohmann::ordered_json::object();
  for (const auto& [k, v] : res.seconds) t[k] = v;
  doc["seconds"] = t;
  if (!res.ranking.empty())
    doc["best"] = {{"id", res.ranking.front().id}, {"score", res.ranking.front().score}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace

PipelineResult run_pipeline(const std::vector<std::pair<std::string, DemGrid>>& tiles,
                            const DemGrid& ref_grid, const MsgNet& model,
                            const PipelineConfig& cfg,
                            const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  const auto t0 = Clock::now();
  const auto cands = run_ssc(tiles, cfg.ssc, cfg.workers);
  const double ssc_seconds = seconds_since(t0);
  if (out_dir) {
    const auto dir = *out_dir / "candidates";
    std::filesystem::create_directories(dir);
    write_candidate_manifest(cands, *out_dir / "ssc.csv");
    for (const auto& c : cands) write_binary_grid(c.raster, dir / (c.id + ".tgrd"));
  }
  if (cands.empty()) throw EmptyStageError("ssc");
  PipelineResult res = run_funnel(cands, ref_grid, model, cfg, out_dir);
  res.seconds["ssc"] = ssc_seconds;
  if (out_dir) write_summary(res, cfg, *out_dir / "summary.json");
  return res;
}

// ---------------------------------------------------------------------------
// Retrieval

std::size_t argmax_score(std::span<const double> scores, std::span<const std::string> ids) {
  if (scores.empty()) throw Error("argmax_score: empty candidate set");
  if (!ids.empty() && ids.size() != scores.size()) throw Error("argmax_score: ids/scores mismatch");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best] || (scores[i] == scores[best] && !ids.empty() && ids[i] < ids[best]))
      best = i;
  }
  return best;
}

std::size_t retrieve(std::span<const TerrainGraph> candidates, std::span<const std::string> ids,
                     const TerrainGraph& ref, const MsgNet& model) {
  if (candidates.empty()) throw Error("retrieve: empty candidate set");
  const Eigen::VectorXd ref_emb = gcn_forward(ref, model.gcn, Mode::kEval);
  std::vector<double> scores(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    scores[i] = siamese_score_embeddings(gcn_forward(candidates[i], model.gcn, Mode::kEval), ref_emb, model);
  });
  return argmax_score(scores, ids);
}

// ---------------------------------------------------------------------------
// Histogram

Histogram similarity_histogram(std::span<const double> scores, double bin_width) {
  if (!(bin_width > 0) || !std::isfinite(bin_width)) throw Error("similarity_histogram: bin width must be > 0");
  Histogram h;
  h.bin_width = bin_width;
  const auto bins = static_cast<std::size_t>(std::max(1.0, std::ceil(1.0 / bin_width - 1e-9)));
  for (std::size_t i = 0; i < bins; ++i) h.edges.push_back(static_cast<double>(i) * bin_width);
  h.counts.assign(bins, 0);
  if (scores.empty()) return h;
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw Error("similarity_histogram: score outside [0, 1]");
    // Largest i with edges[i] <= s, against the same edges that are reported.
    auto i = static_cast<std::size_t>(std::min(static_cast<double>(bins - 1), std::floor(s / bin_width)));
    while (i + 1 < bins && h.edges[i + 1] <= s) ++i;
    while (i > 0 && h.edges[i] > s) --i;
    ++h.counts[i];
  }
  h.total = scores.size();
  h.stats_defined = true;
  h.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  h.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return h;
}

void write_histogram_csv(const Histogram& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "bin_start,bin_end,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    out << h.edges[i] << ',' << std::min(1.0, h.edges[i] + h.bin_width) << ',' << h.counts[i] << '\n';
  if (h.stats_defined)
    out << "# mean " << h.mean << "\n# median " << h.median << '\n';
  else
    out << "# mean undefined\n# median undefined\n";
}

void write_histogram_svg(const Histogram& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  const double w = 640, ht = 360, pad = 40;
  const std::size_t peak = h.counts.empty() ? 0 : *std::max_element(h.counts.begin(), h.counts.end());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << ht << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double bar_w = (w - 2 * pad) / static_cast<double>(std::max<std::size_t>(1, h.counts.size()));
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double bh = peak ? (ht - 2 * pad) * static_cast<double>(h.counts[i]) / static_cast<double>(peak) : 0.0;
    out << "<rect x=\"" << pad + bar_w * static_cast<double>(i) << "\" y=\"" << ht - pad - bh
        << "\" width=\"" << bar_w * 0.9 << "\" height=\"" << bh << "\" fill=\"steelblue\"/>\n";
  }
  out << "<line x1=\"" << pad << "\" y1=\"" << ht - pad << "\" x2=\"" << w - pad << "\" y2=\"" << ht - pad
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << pad << "\" y=\"" << ht - 10 << "\" font-size=\"12\">0</text>\n";
  out << "<text x=\"" << w - pad << "\" y=\"" << ht - 10 << "\" font-size=\"12\">1</text>\n";
  if (h.stats_defined)
    out << "<text x=\"" << pad << "\" y=\"20\" font-size=\"12\">n=" << h.total << " mean=" << h.mean
        << " median=" << h.median << "</text>\n";
  out << "</svg>\n";
}

// ---------------------------------------------------------------------------
// Pair datasets

std::vector<LabeledPair> parse_pair_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<LabeledPair> out;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!header) {
      header = true;
      if (f.size() != 3 || f[0] != "graph_a" || f[1] != "graph_b" || f[2] != "label")
        throw ParseError("pair dataset: expected header graph_a,graph_b,label", line_no);
      continue;
    }
    if (f.size() != 3) throw ParseError("pair dataset: expected 3 fields", line_no);
    if (f[2] != "0" && f[2] != "1")
      throw ParseError("pair dataset: label '" + f[2] + "' is not 0 or 1", line_no);
    if (f[0].empty() || f[1].empty()) throw ParseError("pair dataset: empty graph name", line_no);
    out.push_back({f[0], f[1], f[2] == "1" ? 1 : 0});
  }
  if (!header) throw ParseError("pair dataset: missing header");
  return out;
}

std::vector<LabeledPair> load_pair_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pair_dataset(ss.str());
}

std::string balance_report(std::span<const LabeledPair> pairs) {
  const auto pos = static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const LabeledPair& p) { return p.label == 1; }));
  return std::to_string(pos) + " positive, " + std::to_string(pairs.size() - pos) + " negative";
}

PairDataset make_pair_dataset(std::span<const LabeledPair> pairs,
                              const std::map<std::string, TerrainGraph>& graphs) {
  PairDataset ds;
  std::map<std::string, std::size_t> slot;
  auto resolve = [&](const std::string& name, std::size_t row) {
    auto it = slot.find(name);
    if (it != slot.end()) return it->second;
    auto g = graphs.find(name);
    if (g == graphs.end())
      throw Error("pair " + std::to_string(row + 1) + " references missing graph '" + name + "'");
    ds.names.push_back(name);
    ds.graphs.push_back(g->second);
    return slot[name] = ds.graphs.size() - 1;
  };
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::size_t a = resolve(pairs[i].graph_a, i);
    const std::size_t b = resolve(pairs[i].graph_b, i);
    ds.pairs.push_back({a, b, pairs[i].label});
  }
  return ds;
}

std::map<std::string, TerrainGraph> load_graphs_for(std::span<const LabeledPair> pairs,
                                                    const std::filesystem::path& dir) {
  std::map<std::string, TerrainGraph> out;
  for (const auto& p : pairs)
    for (const auto* name : {&p.graph_a, &p.graph_b})
      if (!out.count(*name)) {
        const auto path = dir / (*name + ".graph");
        if (!std::filesystem::exists(path)) throw Error("missing graph file " + path.string());
        out.emplace(*name, load_graph(path));
      }
  return out;
}

// ---------------------------------------------------------------------------
// Ablation

std::size_t feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureCount; ++i)
    if (name == kFeatureNames[i]) return i;
  throw Error("unknown feature name '" + std::string(name) + "' (expected VRM, ACR, Slope, CD or DSE)");
}

PairDataset zero_channels(const PairDataset& ds, std::span<const std::size_t> channels) {
  PairDataset out = ds;
  for (auto& g : out.graphs)
    for (std::size_t c : channels) {
      if (c >= kFeatureCount) throw Error("zero_channels: channel out of range");
      g.features.col(static_cast<Eigen::Index>(c)).setZero();
    }
  return out;
}

std::vector<AblationRow> ablation_run(const PairDataset& ds, const TrainConfig& cfg,
                                      const std::vector<std::vector<std::string>>& variants) {
  std::vector<std::vector<std::size_t>> drops;
  for (const auto& v : variants) {
    std::set<std::size_t> ids;
    for (const auto& name : v) ids.insert(feature_index(name));
    drops.emplace_back(ids.begin(), ids.end());
  }
  std::vector<AblationRow> rows;
  rows.push_back({"full", {}, kfold_evaluate(ds, cfg)});
  for (const auto& d : drops) {
    std::string name = "w/o ";
    for (std::size_t i = 0; i < d.size(); ++i) name += (i ? "+" : "") + std::string(kFeatureNames[d[i]]);
    rows.push_back({name, d, kfold_evaluate(zero_channels(ds, d), cfg)});
  }
  return rows;
}

void write_ablation_csv(std::span<const AblationRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "variant,accuracy,accuracy_std,precision,precision_std,recall,recall_std,f1,f1_std\n";
  char buf[256];
  for (const auto& r : rows) {
    const auto& m = r.report.val.mean;
    const auto& s = r.report.val.std;
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f", m.accuracy, s.accuracy,
                  m.precision, s.precision, m.recall, s.recall, m.f1, s.f1);
    out << r.name << ',' << buf << '\n';
  }
}

}  // namespace analog
