#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "analog/error.hpp"
#include "analog/metrics.hpp"
#include "analog/msgnet.hpp"

namespace analog {

// ---------------------------------------------------------------------------
// Metrics

double f1_from(double precision, double recall) {
  return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

Metrics metrics(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error("metrics: all counts are zero");
  Metrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  m.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  m.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  m.f1 = f1_from(m.precision, m.recall);
  return m;
}

ConfusionCounts confusion(std::span<const double> scores, std::span<const int> labels,
                          double threshold) {
  if (scores.size() != labels.size()) throw Error("confusion: length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i] == 1)
      ++(pred ? c.tp : c.fn);
    else
      ++(pred ? c.fp : c.tn);
  }
  return c;
}

MetricSummary summarize(std::span<const Metrics> rows) {
  MetricSummary s;
  if (rows.empty()) return s;
  const auto n = static_cast<double>(rows.size());
  auto field = [&](auto member, double& mean, double& sd) {
    double sum = 0.0;
    for (const auto& r : rows) sum += r.*member;
    mean = sum / n;
    double sq = 0.0;
    for (const auto& r : rows) sq += (r.*member - mean) * (r.*member - mean);
    sd = rows.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
  };
  field(&Metrics::accuracy, s.mean.accuracy, s.std.accuracy);
  field(&Metrics::precision, s.mean.precision, s.std.precision);
  field(&Metrics::recall, s.mean.recall, s.std.recall);
  field(&Metrics::f1, s.mean.f1, s.std.f1);
  return s;
}

// ---------------------------------------------------------------------------
// Optimizer

void TrainConfig::validate() const {
  if (!(lr > 0) || !(weight_decay >= 0) || batch_size == 0 || !(clip_norm > 0) ||
      max_epochs == 0 || folds == 0 || !(val_fraction >= 0 && val_fraction < 1) ||
      !(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) || !(adam_eps > 0) ||
      !(gcn_dropout >= 0 && gcn_dropout < 1) || !(mlp_dropout >= 0 && mlp_dropout < 1))
    throw Error("TrainConfig: invalid value");
}

AdamW::AdamW(MsgNet& model, const TrainConfig& cfg)
    : cfg_(cfg), m_(model.zeros_like()), v_(model.zeros_like()) {}

void AdamW::step(MsgNet& model, MsgNet& grad) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  auto params = model.tensors();
  auto grads = grad.tensors();
  auto ms = m_.tensors();
  auto vs = v_.tensors();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    auto& p = *params[i].value;
    const auto& g = *grads[i].value;
    auto& m = *ms[i].value;
    auto& v = *vs[i].value;
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.cwiseAbs2();
    if (params[i].decay) p *= 1.0 - cfg_.lr * cfg_.weight_decay;
    p.array() -= cfg_.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg_.adam_eps);
  }
}

// ---------------------------------------------------------------------------
// Training

std::vector<double> predict(const MsgNet& model, const PairDataset& ds,
                            std::span<const std::size_t> ids) {
  std::vector<std::optional<Eigen::VectorXd>> emb(ds.graphs.size());
  auto embedding = [&](std::size_t g) -> const Eigen::VectorXd& {
    if (g >= ds.graphs.size()) throw Error("predict: pair references a missing graph");
    if (!emb[g]) emb[g] = gcn_forward(ds.graphs[g], model.gcn, Mode::kEval);
    return *emb[g];
  };
  std::vector<double> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) {
    const auto& p = ds.pairs.at(id);
    out.push_back(siamese_score_embeddings(embedding(p.a), embedding(p.b), model));
  }
  return out;
}

namespace {

std::vector<int> labels_of(const PairDataset& ds, std::span<const std::size_t> ids) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(ds.pairs.at(id).label);
  return out;
}

}  // namespace

TrainResult train(const PairDataset& ds, std::span<const std::size_t> train_ids,
                  std::span<const std::size_t> val_ids, const TrainConfig& cfg) {
  cfg.validate();
  if (train_ids.empty()) throw Error("train: empty dataset");
  for (const auto& p : ds.pairs) {
    if (p.a >= ds.graphs.size() || p.b >= ds.graphs.size())
      throw Error("train: pair references a missing graph");
    if (p.label != 0 && p.label != 1) throw Error("train: labels must be 0 or 1");
  }

  TrainResult res;
  MsgNet model = MsgNet::init(cfg.dims, cfg.seed);
  model.gcn.dropout = cfg.gcn_dropout;
  model.mlp.dropout = cfg.mlp_dropout;
  MsgNet grad = model.zeros_like();
  AdamW opt(model, cfg);
  Rng rng(cfg.seed ^ 0xD1B54A32D192ED03ULL);
  std::vector<std::size_t> order(train_ids.begin(), train_ids.end());
  const std::span<const std::size_t> monitor = val_ids.empty() ? train_ids : val_ids;
  const std::vector<int> monitor_labels = labels_of(ds, monitor);

  double best = std::numeric_limits<double>::infinity();
  res.model = model;
  std::vector<PairIndex> batch;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(ds.pairs[order[i]]);
      for (auto& t : grad.tensors()) t.value->setZero();
      const BatchOutput out =
          forward_backward(model, ds.graphs, batch, {Mode::kTrain, &rng, true}, &grad);
      loss_sum += out.loss * static_cast<double>(batch.size());
      res.max_clipped_norm = std::max(res.max_clipped_norm, clip_global_norm(grad, cfg.clip_norm));
      opt.step(model, grad);
      ++res.steps;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    const std::vector<double> scores = predict(model, ds, monitor);
    rec.val_loss = bce_loss(scores, monitor_labels);
    rec.val_f1 = metrics(confusion(scores, monitor_labels)).f1;
    res.history.push_back(rec);

    if (rec.val_loss < best) {
      best = rec.val_loss;
      res.best_epoch = epoch;
      res.model = model;
    }
    if (epoch - res.best_epoch >= cfg.patience) break;
  }
  return res;
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const PairIndex> pairs,
                                                       std::size_t folds, std::uint64_t seed) {
  if (folds == 0) throw Error("stratified_folds: need at least one fold");
  if (pairs.size() < folds)
    throw Error("stratified_folds: " + std::to_string(pairs.size()) + " pairs for " +
                std::to_string(folds) + " folds");
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < pairs.size(); ++i) by_class[pairs[i].label ? 1 : 0].push_back(i);
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t next = 0;
  for (auto& ids : by_class) {
    rng.shuffle(ids);
    for (std::size_t id : ids) out[next++ % folds].push_back(id);
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

TrainResult train(const PairDataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  if (ds.pairs.empty()) throw Error("train: empty dataset");
  std::vector<std::size_t> tr, va;
  const auto n_val = static_cast<std::size_t>(std::round(cfg.val_fraction * static_cast<double>(ds.pairs.size())));
  if (n_val == 0 || n_val >= ds.pairs.size()) {
    tr.resize(ds.pairs.size());
    std::iota(tr.begin(), tr.end(), 0);
  } else {
    // One fold of a round(1/fraction)-way split serves as validation.
    const auto k = static_cast<std::size_t>(std::max(2.0, std::round(1.0 / cfg.val_fraction)));
    const auto folds = stratified_folds(ds.pairs, std::min(k, ds.pairs.size()), cfg.seed);
    va = folds[0];
    for (std::size_t f = 1; f < folds.size(); ++f) tr.insert(tr.end(), folds[f].begin(), folds[f].end());
    std::sort(tr.begin(), tr.end());
  }
  return train(ds, tr, va, cfg);
}

KFoldReport kfold_evaluate(const PairDataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  if (ds.pairs.size() < cfg.folds) throw Error("kfold_evaluate: insufficient data for the fold count");
  const auto folds = stratified_folds(ds.pairs, cfg.folds, cfg.seed);
  KFoldReport rep;
  std::vector<Metrics> tr_rows, va_rows;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> tr;
    for (std::size_t o = 0; o < folds.size(); ++o)
      if (o != f) tr.insert(tr.end(), folds[o].begin(), folds[o].end());
    std::sort(tr.begin(), tr.end());
    TrainConfig fc = cfg;
    fc.seed = cfg.seed + f;
    const TrainResult r = train(ds, tr, folds[f], fc);
    FoldResult fr;
    fr.epochs = r.history.size();
    fr.train = metrics(confusion(predict(r.model, ds, tr), labels_of(ds, tr)));
    fr.val = metrics(confusion(predict(r.model, ds, folds[f]), labels_of(ds, folds[f])));
    tr_rows.push_back(fr.train);
    va_rows.push_back(fr.val);
    rep.folds.push_back(fr);
  }
  rep.train = summarize(tr_rows);
  rep.val = summarize(va_rows);
  return rep;
}

void write_history(std::span<const EpochRecord> history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "epoch,train_loss,val_loss,val_f1\n";
  for (const auto& r : history)
    out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << ',' << r.val_f1 << '\n';
}

}  // namespace analog
