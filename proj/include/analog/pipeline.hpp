#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "analog/error.hpp"
#include "analog/metrics.hpp"
#include "analog/msgnet.hpp"
#include "analog/mtm.hpp"
#include "analog/ssc.hpp"
#include "analog/terrain_graph.hpp"
#include "analog/twc.hpp"

namespace analog {

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

struct PipelineConfig {
  SscConfig ssc;
  SliceOptions slices;
  double mtm_bound = 0.015;
  double mtm_variance = 0.80;
  GraphConfig candidate_graph;
  GraphConfig reference_graph = [] {
    GraphConfig g;
    g.contour_interval = 200.0;
    return g;
  }();
  TrainConfig train;
  std::size_t twc_keep = 5000;
  std::size_t mtm_keep = 1000;
  unsigned workers = 0;  // 0 = hardware concurrency
  std::uint64_t seed = 1;

  // Paths (empty = not set).
  std::vector<std::string> tiles;
  std::string reference;
  std::string checkpoint;
  std::string out_dir = "run";

  /// Throws ConfigError.
  void validate() const;
};

/// Reads a JSON config; unknown keys are rejected. Throws ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& text);
std::string dump_config(const PipelineConfig& cfg);

/// FNV-1a (64-bit) of the canonical config dump, as 16 hex digits.
std::string config_hash(const PipelineConfig& cfg);

std::uint64_t fnv1a(std::string_view bytes);

struct FinalScore {
  std::string id;
  double score = 0.0;
  bool graph_failed = false;  // candidate graph could not be built; scored 0
  std::size_t rank = 0;
};

struct StageSizes {
  std::size_t ssc = 0;
  std::size_t twc = 0;
  std::size_t mtm = 0;
  std::size_t final = 0;
};

struct PipelineResult {
  StageSizes sizes;
  std::vector<FinalScore> ranking;  // descending score, ties by id
  std::map<std::string, double> seconds;
};

/// SSC -> TWC (top twc_keep) -> MTM (top mtm_keep) -> MSG-Net scoring.
/// When `out_dir` is given, every stage writes its manifest there plus a
/// summary.json. Throws EmptyStageError naming the stage with no survivors.
PipelineResult run_pipeline(const std::vector<std::pair<std::string, DemGrid>>& tiles,
                            const DemGrid& ref_grid, const MsgNet& model,
                            const PipelineConfig& cfg,
                            const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Funnel from already-extracted candidates (skips SSC).
PipelineResult run_funnel(const std::vector<ValleyCandidate>& candidates, const DemGrid& ref_grid,
                          const MsgNet& model, const PipelineConfig& cfg,
                          const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Graph of a candidate: built on its rectified slice strip.
TerrainGraph candidate_graph(const SliceSequence& slices, const GraphConfig& cfg);

void write_final_scores(const std::vector<FinalScore>& scores, const std::filesystem::path& path);

/// Position of the highest score; ties go to the lexicographically lowest
/// id (or the lowest position when `ids` is empty). Throws on empty input.
std::size_t argmax_score(std::span<const double> scores, std::span<const std::string> ids = {});

/// Best candidate graph for `ref` under the model.
std::size_t retrieve(std::span<const TerrainGraph> candidates, std::span<const std::string> ids,
                     const TerrainGraph& ref, const MsgNet& model);

struct Histogram {
  double bin_width = 0.0;
  std::vector<double> edges;  // left edges
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  bool stats_defined = false;  // false for an empty score list
  double mean = 0.0;
  double median = 0.0;
};

/// Left-closed bins [i w, (i+1) w) over [0, 1]; 1.0 falls in the last bin.
Histogram similarity_histogram(std::span<const double> scores, double bin_width);
void write_histogram_csv(const Histogram& h, const std::filesystem::path& path);
void write_histogram_svg(const Histogram& h, const std::filesystem::path& path);

struct LabeledPair {
  std::string graph_a;
  std::string graph_b;
  int label = 0;
};

/// CSV with header graph_a,graph_b,label.
std::vector<LabeledPair> load_pair_dataset(const std::filesystem::path& path);
std::vector<LabeledPair> parse_pair_dataset(const std::string& text);

/// "<p> positive, <n> negative"
std::string balance_report(std::span<const LabeledPair> pairs);

/// Resolves graph names; throws when a pair names a graph that is absent.
PairDataset make_pair_dataset(std::span<const LabeledPair> pairs,
                              const std::map<std::string, TerrainGraph>& graphs);

/// Loads `<dir>/<name>.graph` for every name referenced by `pairs`.
std::map<std::string, TerrainGraph> load_graphs_for(std::span<const LabeledPair> pairs,
                                                    const std::filesystem::path& dir);

/// Copy of `ds` with the named standardized channels set to zero.
PairDataset zero_channels(const PairDataset& ds, std::span<const std::size_t> channels);

std::size_t feature_index(std::string_view name);

struct AblationRow {
  std::string name;  // "full" or "w/o A+B"
  std::vector<std::size_t> dropped;
  KFoldReport report;
};

/// K-fold evaluation of the full model plus one variant per entry of
/// `variants` (each a set of channel names to zero; input width stays 5).
std::vector<AblationRow> ablation_run(const PairDataset& ds, const TrainConfig& cfg,
                                      const std::vector<std::vector<std::string>>& variants);

void write_ablation_csv(std::span<const AblationRow> rows, const std::filesystem::path& path);

}  // namespace analog
