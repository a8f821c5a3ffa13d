#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "analog/metrics.hpp"
#include "analog/random.hpp"
#include "analog/terrain_graph.hpp"

namespace analog {

struct ModelDims {
  std::size_t input = kFeatureCount;
  std::size_t hidden = 128;  // GCN width and embedding size
  std::size_t mlp1 = 256;
  std::size_t mlp2 = 64;

  bool operator==(const ModelDims&) const = default;
};

/// Row convention: H (n x d), H' = ReLU(L H W) with W (d_in x d_out).
struct GcnParams {
  std::array<Eigen::MatrixXd, 3> w;
  Eigen::MatrixXd pool;  // hidden x 1 score vector
  double dropout = 0.3;
  double pool_ratio = 0.1;
};

/// Biases, batch-norm parameters and running statistics are 1 x d rows.
struct MlpParams {
  Eigen::MatrixXd w1, b1, w2, b2, w3, b3;
  Eigen::MatrixXd gamma1, beta1, mean1, var1;
  Eigen::MatrixXd gamma2, beta2, mean2, var2;
  double dropout = 0.5;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
};

struct TensorRef {
  std::string name;
  Eigen::MatrixXd* value = nullptr;
  bool trainable = true;
  bool decay = false;  // weight decay applies (weight matrices only)
};

struct MsgNet {
  ModelDims dims;
  GcnParams gcn;
  MlpParams mlp;

  /// Glorot-uniform weights, zero biases, unit batch-norm scale.
  static MsgNet init(const ModelDims& dims, std::uint64_t seed);

  /// Same shapes, every tensor zero (used as a gradient buffer).
  MsgNet zeros_like() const;

  /// Every tensor in a fixed order, running statistics last.
  std::vector<TensorRef> tensors();
};

enum class Mode { kTrain, kEval };

/// Intermediate values kept for the backward pass.
struct GcnCache {
  std::array<Eigen::MatrixXd, 3> propagated;  // L H_(l-1)
  std::array<Eigen::MatrixXd, 3> pre;         // L H_(l-1) W_l
  std::array<Eigen::MatrixXd, 3> mask;        // dropout mask incl. 1/(1-p) scale
  std::array<Eigen::MatrixXd, 3> out;         // H_l
  std::vector<std::size_t> kept;              // pooled node ids, best first
  Eigen::VectorXd score;                      // H_3 p
};

/// Pooled embedding (hidden-vector). `rng` drives dropout in train mode and
/// is ignored in eval mode.
Eigen::VectorXd gcn_forward(const Eigen::MatrixXd& features,
                            const Eigen::SparseMatrix<double>& laplacian, const GcnParams& p,
                            Mode mode, Rng* rng = nullptr, GcnCache* cache = nullptr);
Eigen::VectorXd gcn_forward(const TerrainGraph& g, const GcnParams& p, Mode mode,
                            Rng* rng = nullptr, GcnCache* cache = nullptr);

/// Accumulates parameter gradients into `grad` given dLoss/dEmbedding.
void gcn_backward(const Eigen::SparseMatrix<double>& laplacian, const GcnParams& p,
                  const GcnCache& cache, const Eigen::VectorXd& d_embedding, GcnParams& grad);

/// Number of nodes kept by top-k pooling.
std::size_t pooled_count(std::size_t n, double ratio);

/// Eval-mode MLP on a batch of fused rows (B x hidden); returns logits.
Eigen::VectorXd mlp_eval(const MlpParams& mlp, const Eigen::MatrixXd& fused);

/// sigmoid(MLP(|gcn(g1) - gcn(g2)|)) in eval mode.
double siamese_score(const TerrainGraph& g1, const TerrainGraph& g2, const MsgNet& model);
double siamese_score_embeddings(const Eigen::VectorXd& e1, const Eigen::VectorXd& e2,
                                const MsgNet& model);

double sigmoid(double x);

inline constexpr double kBceEps = 1e-7;

/// Mean BCE with scores clamped to [eps, 1 - eps].
double bce_loss(std::span<const double> scores, std::span<const int> labels);

/// Pair of graph indices into a GraphSet.
struct PairIndex {
  std::size_t a = 0;
  std::size_t b = 0;
  int label = 0;
};

struct StepOptions {
  Mode mode = Mode::kTrain;
  Rng* rng = nullptr;                 // dropout stream (train mode)
  bool update_running_stats = true;   // batch-norm running statistics
};

struct BatchOutput {
  double loss = 0.0;
  std::vector<double> scores;
};

/// Forward pass over a batch, and when `grad` is non-null the exact gradient
/// of the mean BCE with respect to every trainable tensor (accumulated into
/// `grad`). Each distinct graph in the batch is encoded once.
BatchOutput forward_backward(MsgNet& model, std::span<const TerrainGraph> graphs,
                             std::span<const PairIndex> batch, const StepOptions& opt,
                             MsgNet* grad);

/// L2 norm over every trainable tensor.
double global_norm(MsgNet& grad);

/// Scales `grad` down so its global norm is at most `max_norm`; returns the
/// norm after clipping.
double clip_global_norm(MsgNet& grad, double max_norm);

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-3;
  std::size_t batch_size = 32;
  double clip_norm = 2.0;
  std::size_t patience = 20;
  std::size_t max_epochs = 500;
  std::uint64_t seed = 1;
  std::size_t folds = 5;
  double val_fraction = 0.15;  // single-run validation split
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double gcn_dropout = 0.3;
  double mlp_dropout = 0.5;
  ModelDims dims;

  void validate() const;
};

/// AdamW with decoupled weight decay on weight matrices.
class AdamW {
public:
  AdamW(MsgNet& model, const TrainConfig& cfg);
  void step(MsgNet& model, MsgNet& grad);

private:
  TrainConfig cfg_;
  MsgNet m_, v_;
  std::size_t t_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
};

struct TrainResult {
  MsgNet model;  // best-validation parameters
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double max_clipped_norm = 0.0;  // largest post-clip gradient norm seen
  std::size_t steps = 0;
};

/// Graphs by position plus labelled pairs that index into them.
struct PairDataset {
  std::vector<std::string> names;
  std::vector<TerrainGraph> graphs;
  std::vector<PairIndex> pairs;
};

/// Trains on `train_ids` (indices into ds.pairs) and early-stops on the
/// loss over `val_ids` (the training loss when `val_ids` is empty).
TrainResult train(const PairDataset& ds, std::span<const std::size_t> train_ids,
                  std::span<const std::size_t> val_ids, const TrainConfig& cfg);

/// Single run with a stratified validation split of cfg.val_fraction.
TrainResult train(const PairDataset& ds, const TrainConfig& cfg);

std::vector<double> predict(const MsgNet& model, const PairDataset& ds,
                            std::span<const std::size_t> ids);

/// Stratified folds: labels spread round-robin per class after a seeded
/// shuffle, so fold sizes differ by at most one and per-class counts by at
/// most one.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const PairIndex> pairs,
                                                       std::size_t folds, std::uint64_t seed);

struct FoldResult {
  Metrics train;
  Metrics val;
  std::size_t epochs = 0;
};

struct MetricSummary {
  Metrics mean;
  Metrics std;  // sample standard deviation
};

MetricSummary summarize(std::span<const Metrics> rows);

struct KFoldReport {
  std::vector<FoldResult> folds;
  MetricSummary train;
  MetricSummary val;
};

KFoldReport kfold_evaluate(const PairDataset& ds, const TrainConfig& cfg);

/// Per-node L2 norm of the layer-3 activations (eval mode), min-max
/// normalized to [0, 1]; all zeros when the norms are constant.
std::vector<double> export_activations(const TerrainGraph& g, const GcnParams& gcn);
void write_activations(const TerrainGraph& g, std::span<const double> intensity,
                       const std::filesystem::path& path);

/// Binary container: "MSGN", u32 version, u64 dims[4], u32 tensor count, then
/// per tensor: u32 name length, name, u64 rows, u64 cols, f64 row-major data.
void save_checkpoint(MsgNet& model, const std::filesystem::path& path);
MsgNet load_checkpoint(const std::filesystem::path& path);

void write_history(std::span<const EpochRecord> history, const std::filesystem::path& path);

}  // namespace analog
