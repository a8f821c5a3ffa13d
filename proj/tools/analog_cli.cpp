#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "analog/msgnet.hpp"
#include "analog/pipeline.hpp"
#include "analog/raster.hpp"
#include "analog/ssc.hpp"
#include "analog/terrain_graph.hpp"
#include "analog/twc.hpp"

using namespace analog;
namespace fs = std::filesystem;

namespace {

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitEmptyStage = 3;

std::vector<double> split_numbers(const std::string& s, std::size_t min_n, std::size_t max_n,
                                  const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ConfigError(what + ": '" + cell + "' is not a number");
    }
  }
  if (out.size() < min_n || out.size() > max_n)
    throw ConfigError(what + ": expected " + std::to_string(min_n) + ".." + std::to_string(max_n) + " values");
  return out;
}

std::string stem_id(const fs::path& p) { return p.stem().string(); }

PipelineConfig config_or_default(const std::string& path) {
  return path.empty() ? PipelineConfig{} : load_config(path);
}

std::map<std::string, double> read_score_column(const fs::path& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) throw Error("column '" + column + "' not found in " + path.string());
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::map<std::string, double> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() <= col) throw ParseError("short row in " + path.string(), line_no);
    out[f[0]] = std::stod(f[col]);
  }
  return out;
}

PairDataset load_dataset(const std::string& pairs_path, const std::string& graph_dir) {
  const auto pairs = load_pair_dataset(pairs_path);
  std::cout << "pairs: " << balance_report(pairs) << '\n';
  return make_pair_dataset(pairs, load_graphs_for(pairs, graph_dir));
}

void print_metrics(const std::string& label, const Metrics& m) {
  std::printf("%-10s acc %.4f  prec %.4f  rec %.4f  f1 %.4f\n", label.c_str(), m.accuracy,
              m.precision, m.recall, m.f1);
}

void print_summary(const std::string& label, const MetricSummary& s) {
  std::printf("%-10s acc %.4f±%.4f  prec %.4f±%.4f  rec %.4f±%.4f  f1 %.4f±%.4f\n", label.c_str(),
              s.mean.accuracy, s.std.accuracy, s.mean.precision, s.std.precision, s.mean.recall,
              s.std.recall, s.mean.f1, s.std.f1);
}

struct TrainOverrides {
  double lr = 0;
  std::size_t epochs = 0;
  std::size_t patience = 0;
  bool patience_set = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t folds = 0;

  void add(CLI::App* app) {
    app->add_option("--lr", lr, "learning rate");
    app->add_option("--epochs", epochs, "max epochs");
    app->add_option_function<std::size_t>("--patience", [this](std::size_t v) { patience = v; patience_set = true; },
                                           "early-stopping patience");
    app->add_option_function<std::uint64_t>("--seed", [this](std::uint64_t v) { seed = v; seed_set = true; },
                                            "training seed");
    app->add_option("--folds", folds, "cross-validation folds");
  }
  void apply(TrainConfig& t) const {
    if (lr > 0) t.lr = lr;
    if (epochs > 0) t.max_epochs = epochs;
    if (patience_set) t.patience = patience;
    if (seed_set) t.seed = seed;
    if (folds > 0) t.folds = folds;
    try {
      t.validate();
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse-to-fine terrain analogue retrieval"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Convert ASCII grids to the binary grid format");
  std::vector<std::string> ingest_inputs;
  std::string ingest_out;
  bool ingest_mosaic = false;
  std::string ingest_crop;
  ingest->add_option("inputs", ingest_inputs, "input grids (.asc/.txt/.tgrd)")->required();
  ingest->add_option("-o,--out", ingest_out, "output directory, or file with --mosaic")->required();
  ingest->add_flag("--mosaic", ingest_mosaic, "mosaic four tiles given as NW NE SW SE ('-' = missing)");
  ingest->add_option("--crop", ingest_crop, "row_min,row_max,col_min,col_max (inclusive)");

  // ssc
  auto* ssc = app.add_subcommand("ssc", "Extract valley candidates from tiles");
  std::string ssc_config, ssc_out;
  std::vector<std::string> ssc_tiles;
  ssc->add_option("tiles", ssc_tiles, "tile grids")->required();
  ssc->add_option("-c,--config", ssc_config, "config file");
  ssc->add_option("-o,--out", ssc_out, "output directory")->required();

  // twc
  auto* twc = app.add_subcommand("twc", "Rank candidates by bidirectional DDTW");
  std::string twc_config, twc_cands, twc_ref, twc_out;
  std::size_t twc_keep = 0;
  twc->add_option("-c,--config", twc_config, "config file");
  twc->add_option("--candidates", twc_cands, "directory written by 'ssc'")->required();
  twc->add_option("-r,--reference", twc_ref, "reference grid")->required();
  twc->add_option("-k,--keep", twc_keep, "survivors to keep");
  twc->add_option("-o,--out", twc_out, "score CSV")->required();

  // mtm
  auto* mtm = app.add_subcommand("mtm", "Rank TWC survivors by eigenshape loading similarity");
  std::string mtm_config, mtm_cands, mtm_twc, mtm_ref, mtm_out;
  std::size_t mtm_keep = 0;
  mtm->add_option("-c,--config", mtm_config, "config file");
  mtm->add_option("--candidates", mtm_cands, "directory written by 'ssc'")->required();
  mtm->add_option("--twc", mtm_twc, "TWC score CSV")->required();
  mtm->add_option("-r,--reference", mtm_ref, "reference grid")->required();
  mtm->add_option("-k,--keep", mtm_keep, "survivors to keep");
  mtm->add_option("-o,--out", mtm_out, "score CSV")->required();

  // graph
  auto* graph = app.add_subcommand("graph", "Build terrain graphs");
  std::string graph_config, graph_input, graph_out, graph_cands, graph_ids;
  bool graph_reference = false;
  graph->add_option("-c,--config", graph_config, "config file");
  graph->add_option("-i,--input", graph_input, "grid to build one graph from");
  graph->add_flag("--reference", graph_reference, "treat --input as a reference: graph its slice strip with the reference settings");
  graph->add_option("--candidates", graph_cands, "directory written by 'ssc'");
  graph->add_option("--ids", graph_ids, "score CSV selecting candidates (default: all)");
  graph->add_option("-o,--out", graph_out, "graph file (--input) or directory (--candidates)")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the siamese graph network");
  std::string train_config, train_pairs, train_graphs, train_ckpt, train_history;
  TrainOverrides train_over;
  train_cmd->add_option("-c,--config", train_config, "config file");
  train_cmd->add_option("--pairs", train_pairs, "pair CSV (graph_a,graph_b,label)")->required();
  train_cmd->add_option("--graphs", train_graphs, "directory of <name>.graph files")->required();
  train_cmd->add_option("--checkpoint", train_ckpt, "output checkpoint")->required();
  train_cmd->add_option("--history", train_history, "epoch history CSV");
  train_over.add(train_cmd);

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint, or run k-fold cross-validation");
  std::string eval_config, eval_pairs, eval_graphs, eval_ckpt;
  TrainOverrides eval_over;
  eval->add_option("-c,--config", eval_config, "config file");
  eval->add_option("--pairs", eval_pairs, "pair CSV")->required();
  eval->add_option("--graphs", eval_graphs, "directory of <name>.graph files")->required();
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint to score (omit for k-fold)");
  eval_over.add(eval);

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Feature ablation with k-fold evaluation");
  std::string ablate_config, ablate_pairs, ablate_graphs, ablate_out;
  std::vector<std::string> ablate_drop;
  TrainOverrides ablate_over;
  ablate->add_option("-c,--config", ablate_config, "config file");
  ablate->add_option("--pairs", ablate_pairs, "pair CSV")->required();
  ablate->add_option("--graphs", ablate_graphs, "directory of <name>.graph files")->required();
  ablate->add_option("--drop", ablate_drop, "channels to zero per variant, e.g. CD or CD+DSE");
  ablate->add_option("-o,--out", ablate_out, "metrics CSV");
  ablate_over.add(ablate);

  // retrieve
  auto* retr = app.add_subcommand("retrieve", "Pick the candidate graph most similar to a reference");
  std::string retr_ckpt, retr_ref, retr_act;
  std::vector<std::string> retr_cands;
  retr->add_option("--checkpoint", retr_ckpt, "model checkpoint")->required();
  retr->add_option("-r,--reference", retr_ref, "reference graph")->required();
  retr->add_option("candidates", retr_cands, "candidate graphs")->required();
  retr->add_option("--activations", retr_act, "write reference activation intensities CSV");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run SSC -> TWC -> MTM -> MSG-Net end to end");
  std::string pipe_config, pipe_out, pipe_ckpt, pipe_ref;
  std::vector<std::string> pipe_tiles;
  pipe->add_option("-c,--config", pipe_config, "config file")->required();
  pipe->add_option("-o,--out", pipe_out, "output directory (overrides paths.out_dir)");
  pipe->add_option("--checkpoint", pipe_ckpt, "overrides paths.checkpoint");
  pipe->add_option("-r,--reference", pipe_ref, "overrides paths.reference");
  pipe->add_option("--tiles", pipe_tiles, "overrides paths.tiles");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic terrain grid");
  SynthSpec spec;
  std::uint64_t synth_seed = 1;
  std::vector<std::string> synth_valleys, synth_rings;
  std::string synth_out;
  synth->add_option("--rows", spec.rows, "rows");
  synth->add_option("--cols", spec.cols, "columns");
  synth->add_option("--cell", spec.cell_size, "cell size, meters");
  synth->add_option("--base", spec.base_elevation, "base elevation, meters");
  synth->add_option("--roughness", spec.roughness, "midpoint-displacement amplitude, meters");
  synth->add_option("--decay", spec.roughness_decay, "amplitude ratio per octave");
  synth->add_option("--valley", synth_valleys,
                    "row0,col0,row1,col1,depth,width[,floor_width,jitter,taper]");
  synth->add_option("--ring", synth_rings, "row,col,radius,depth,width");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("-o,--out", synth_out, "output grid (.asc or .tgrd)")->required();

  // hist
  auto* hist = app.add_subcommand("hist", "Histogram of similarity scores");
  std::string hist_in, hist_col = "score", hist_out, hist_svg;
  double hist_width = 0.05;
  hist->add_option("-i,--input", hist_in, "score CSV")->required();
  hist->add_option("--column", hist_col, "score column");
  hist->add_option("-w,--width", hist_width, "bin width");
  hist->add_option("-o,--out", hist_out, "histogram CSV");
  hist->add_option("--svg", hist_svg, "SVG rendering");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*ingest) {
      if (ingest_mosaic) {
        if (ingest_inputs.size() != 4) throw ConfigError("--mosaic needs exactly four inputs");
        TileQuad quad;
        for (std::size_t i = 0; i < 4; ++i)
          if (ingest_inputs[i] != "-") quad[i / 2][i % 2] = load_grid(ingest_inputs[i]);
        DemGrid g = mosaic_tiles(quad);
        if (!ingest_crop.empty()) {
          const auto v = split_numbers(ingest_crop, 4, 4, "--crop");
          g = crop(g, {static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]),
                       static_cast<std::size_t>(v[2]), static_cast<std::size_t>(v[3])});
        }
        write_binary_grid(g, ingest_out);
        std::cout << "wrote " << ingest_out << " (" << g.rows() << "x" << g.cols() << ")\n";
      } else {
        fs::create_directories(ingest_out);
        for (const auto& in : ingest_inputs) {
          DemGrid g = load_grid(in);
          if (!ingest_crop.empty()) {
            const auto v = split_numbers(ingest_crop, 4, 4, "--crop");
            g = crop(g, {static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]),
                         static_cast<std::size_t>(v[2]), static_cast<std::size_t>(v[3])});
          }
          const fs::path out = fs::path(ingest_out) / (stem_id(in) + ".tgrd");
          write_binary_grid(g, out);
          std::cout << "wrote " << out.string() << " (" << g.rows() << "x" << g.cols() << ")\n";
        }
      }
    } else if (*ssc) {
      const auto cfg = config_or_default(ssc_config);
      std::vector<std::pair<std::string, DemGrid>> tiles;
      for (const auto& t : ssc_tiles) tiles.emplace_back(stem_id(t), load_grid(t));
      const auto cands = run_ssc(tiles, cfg.ssc, cfg.workers);
      fs::create_directories(fs::path(ssc_out) / "candidates");
      write_candidate_manifest(cands, fs::path(ssc_out) / "ssc.csv");
      for (const auto& c : cands)
        write_binary_grid(c.raster, fs::path(ssc_out) / "candidates" / (c.id + ".tgrd"));
      std::cout << cands.size() << " candidates\n";
      if (cands.empty()) throw EmptyStageError("ssc");
    } else if (*twc) {
      auto cfg = config_or_default(twc_config);
      if (twc_keep) cfg.twc_keep = twc_keep;
      const auto cands = read_candidate_manifest(fs::path(twc_cands) / "ssc.csv", fs::path(twc_cands) / "candidates");
      const DemGrid ref = load_grid(twc_ref);
      const auto ref_slices = reference_slices(ref, cfg.slices.width, cfg.slices.along_spacing_m);
      std::vector<std::string> ids;
      std::vector<SliceSequence> seqs;
      for (const auto& c : cands) {
        try {
          auto seq = slice_decompose(c, cfg.slices);
          if (seq.size() < 3) throw Error("fewer than 3 slices");
          seqs.push_back(std::move(seq));
          ids.push_back(c.id);
        } catch (const Error& e) {
          std::cerr << c.id << ": " << e.what() << '\n';
        }
      }
      const auto scores = twc_filter(ids, seqs, ref_slices, cfg.twc_keep, cfg.workers);
      write_twc_scores(scores, twc_out);
      std::cout << scores.size() << " of " << cands.size() << " candidates kept\n";
      if (scores.empty()) throw EmptyStageError("twc");
    } else if (*mtm) {
      auto cfg = config_or_default(mtm_config);
      if (mtm_keep) cfg.mtm_keep = mtm_keep;
      const auto cands = read_candidate_manifest(fs::path(mtm_cands) / "ssc.csv", fs::path(mtm_cands) / "candidates");
      const auto twc_scores = read_twc_scores(mtm_twc);
      std::map<std::string, const ValleyCandidate*> by_id;
      for (const auto& c : cands) by_id[c.id] = &c;
      const DemGrid ref = load_grid(mtm_ref);
      const auto mref = prepare_mtm_reference(
          reference_slices(ref, cfg.slices.width, cfg.slices.along_spacing_m), cfg.mtm_bound, cfg.mtm_variance);
      std::vector<std::string> ids;
      std::vector<LoadingMatrix> loadings;
      for (const auto& s : twc_scores) {
        auto it = by_id.find(s.id);
        if (it == by_id.end()) throw Error("TWC scores name unknown candidate " + s.id);
        ids.push_back(s.id);
        loadings.push_back(candidate_loading(slice_decompose(*it->second, cfg.slices), mref));
      }
      const auto scores = cosine_rank(ids, loadings, mref.loading, cfg.mtm_keep);
      write_mtm_scores(scores, mtm_out);
      std::cout << scores.size() << " of " << ids.size() << " candidates kept (k_pc " << mref.basis.k_pc
                << ", resolution " << mref.resolution << ")\n";
      if (scores.empty()) throw EmptyStageError("mtm");
    } else if (*graph) {
      const auto cfg = config_or_default(graph_config);
      if (!graph_input.empty()) {
        const DemGrid g = load_grid(graph_input);
        const auto tg =
            graph_reference
                ? candidate_graph(reference_slices(g, cfg.slices.width, cfg.slices.along_spacing_m),
                                  cfg.reference_graph)
                : build_graph(g, cfg.candidate_graph);
        write_graph(tg, graph_out);
        std::cout << "graph: " << tg.size() << " nodes, " << tg.edges.size() << " edges\n";
      } else if (!graph_cands.empty()) {
        auto cands = read_candidate_manifest(fs::path(graph_cands) / "ssc.csv", fs::path(graph_cands) / "candidates");
        if (!graph_ids.empty()) {
          const auto keep = read_score_column(graph_ids, "rank");
          std::erase_if(cands, [&](const ValleyCandidate& c) { return !keep.count(c.id); });
        }
        fs::create_directories(graph_out);
        std::size_t built = 0;
        for (const auto& c : cands) {
          try {
            write_graph(candidate_graph(slice_decompose(c, cfg.slices), cfg.candidate_graph),
                        fs::path(graph_out) / (c.id + ".graph"));
            ++built;
          } catch (const Error& e) {
            std::cerr << c.id << ": " << e.what() << '\n';
          }
        }
        std::cout << built << " of " << cands.size() << " graphs built\n";
      } else {
        throw ConfigError("graph: give --input or --candidates");
      }
    } else if (*train_cmd) {
      auto cfg = config_or_default(train_config);
      train_over.apply(cfg.train);
      const PairDataset ds = load_dataset(train_pairs, train_graphs);
      TrainResult r = train(ds, cfg.train);
      save_checkpoint(r.model, train_ckpt);
      if (!train_history.empty()) write_history(r.history, train_history);
      std::cout << "epochs " << r.history.size() << ", best epoch " << r.best_epoch << ", val loss "
                << r.history[r.best_epoch - 1].val_loss << '\n';
    } else if (*eval) {
      auto cfg = config_or_default(eval_config);
      eval_over.apply(cfg.train);
      const PairDataset ds = load_dataset(eval_pairs, eval_graphs);
      if (!eval_ckpt.empty()) {
        const MsgNet model = load_checkpoint(eval_ckpt);
        std::vector<std::size_t> ids(ds.pairs.size());
        std::iota(ids.begin(), ids.end(), 0);
        const auto scores = predict(model, ds, ids);
        std::vector<int> labels;
        for (const auto& p : ds.pairs) labels.push_back(p.label);
        print_metrics("eval", metrics(confusion(scores, labels)));
        std::printf("bce %.6f\n", bce_loss(scores, labels));
      } else {
        const auto rep = kfold_evaluate(ds, cfg.train);
        for (std::size_t f = 0; f < rep.folds.size(); ++f)
          print_metrics("fold " + std::to_string(f + 1), rep.folds[f].val);
        print_summary("train", rep.train);
        print_summary("val", rep.val);
      }
    } else if (*ablate) {
      auto cfg = config_or_default(ablate_config);
      ablate_over.apply(cfg.train);
      const PairDataset ds = load_dataset(ablate_pairs, ablate_graphs);
      std::vector<std::vector<std::string>> variants;
      for (const auto& d : ablate_drop) {
        std::vector<std::string> names;
        std::stringstream ss(d);
        std::string n;
        while (std::getline(ss, n, '+')) names.push_back(n);
        for (const auto& name : names) (void)feature_index(name);
        variants.push_back(names);
      }
      const auto rows = ablation_run(ds, cfg.train, variants);
      for (const auto& r : rows) print_summary(r.name, r.report.val);
      if (!ablate_out.empty()) write_ablation_csv(rows, ablate_out);
    } else if (*retr) {
      const MsgNet model = load_checkpoint(retr_ckpt);
      const TerrainGraph ref = load_graph(retr_ref);
      std::vector<TerrainGraph> cands;
      std::vector<std::string> ids;
      for (const auto& c : retr_cands) {
        cands.push_back(load_graph(c));
        ids.push_back(stem_id(c));
      }
      const std::size_t best = retrieve(cands, ids, ref, model);
      std::printf("%s %.17g\n", ids[best].c_str(), siamese_score(cands[best], ref, model));
      if (!retr_act.empty()) write_activations(ref, export_activations(ref, model.gcn), retr_act);
    } else if (*pipe) {
      PipelineConfig cfg = load_config(pipe_config);
      if (!pipe_out.empty()) cfg.out_dir = pipe_out;
      if (!pipe_ckpt.empty()) cfg.checkpoint = pipe_ckpt;
      if (!pipe_ref.empty()) cfg.reference = pipe_ref;
      if (!pipe_tiles.empty()) cfg.tiles = pipe_tiles;
      if (cfg.tiles.empty()) throw ConfigError("pipeline: no tiles configured");
      if (cfg.reference.empty()) throw ConfigError("pipeline: no reference configured");
      if (cfg.checkpoint.empty()) throw ConfigError("pipeline: no checkpoint configured");
      std::vector<std::pair<std::string, DemGrid>> tiles;
      for (const auto& t : cfg.tiles) tiles.emplace_back(stem_id(t), load_grid(t));
      const DemGrid ref = load_grid(cfg.reference);
      const MsgNet model = load_checkpoint(cfg.checkpoint);
      const auto res = run_pipeline(tiles, ref, model, cfg, fs::path(cfg.out_dir));
      std::cout << "ssc " << res.sizes.ssc << " -> twc " << res.sizes.twc << " -> mtm " << res.sizes.mtm
                << " -> scored " << res.sizes.final << '\n';
      std::printf("best %s %.6f\n", res.ranking.front().id.c_str(), res.ranking.front().score);
    } else if (*synth) {
      for (const auto& v : synth_valleys) {
        const auto x = split_numbers(v, 6, 9, "--valley");
        PlantedValley pv{x[0], x[1], x[2], x[3], x[4], x[5]};
        if (x.size() > 6) pv.floor_width = x[6];
        if (x.size() > 7) pv.jitter = x[7];
        if (x.size() > 8) pv.taper = x[8];
        spec.valleys.push_back(pv);
      }
      for (const auto& r : synth_rings) {
        const auto x = split_numbers(r, 5, 5, "--ring");
        spec.rings.push_back({x[0], x[1], x[2], x[3], x[4]});
      }
      const DemGrid g = synth_terrain(spec, synth_seed);
      const fs::path out(synth_out);
      if (out.extension() == ".asc" || out.extension() == ".txt")
        write_ascii_grid(g, out);
      else
        write_binary_grid(g, out);
      std::cout << "wrote " << out.string() << '\n';
    } else if (*hist) {
      const auto scores_by_id = read_score_column(hist_in, hist_col);
      std::vector<double> scores;
      for (const auto& [id, s] : scores_by_id) scores.push_back(s);
      const Histogram h = similarity_histogram(scores, hist_width);
      if (!hist_out.empty()) write_histogram_csv(h, hist_out);
      if (!hist_svg.empty()) write_histogram_svg(h, hist_svg);
      for (std::size_t i = 0; i < h.counts.size(); ++i)
        std::printf("[%.4f, %.4f) %zu\n", h.edges[i], h.edges[i] + h.bin_width, h.counts[i]);
      if (h.stats_defined)
        std::printf("n %zu  mean %.17g  median %.17g\n", h.total, h.mean, h.median);
      else
        std::printf("n 0  mean undefined  median undefined\n");
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const EmptyStageError& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return kExitEmptyStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return 0;
}
