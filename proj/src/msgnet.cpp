#include "analog/msgnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "analog/error.hpp"

namespace analog {

namespace {

Eigen::MatrixXd glorot(std::size_t in, std::size_t out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  Eigen::MatrixXd m(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-a, a);
  return m;
}

Eigen::MatrixXd row(std::size_t n, double v) {
  return Eigen::MatrixXd::Constant(1, static_cast<Eigen::Index>(n), v);
}

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng* rng) {
  if (p <= 0.0 || rng == nullptr) return Eigen::MatrixXd::Ones(rows, cols);
  const double scale = 1.0 / (1.0 - p);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng->bernoulli(p) ? 0.0 : scale;
  return m;
}

struct BnCache {
  Eigen::MatrixXd xhat;
  Eigen::RowVectorXd inv_std;
};

Eigen::MatrixXd bn_forward(const Eigen::MatrixXd& z, const Eigen::MatrixXd& gamma,
                           const Eigen::MatrixXd& beta, Eigen::MatrixXd& run_mean,
                           Eigen::MatrixXd& run_var, const MlpParams& mlp, Mode mode,
                           bool update, BnCache& cache) {
  const auto b = static_cast<double>(z.rows());
  Eigen::RowVectorXd mean, var;
  if (mode == Mode::kTrain) {
    mean = z.colwise().mean();
    var = (z.rowwise() - mean).array().square().colwise().sum() / b;
    if (update) {
      const double m = mlp.bn_momentum;
      const Eigen::RowVectorXd unbiased = z.rows() > 1 ? Eigen::RowVectorXd(var * b / (b - 1)) : var;
      run_mean = (1.0 - m) * run_mean + m * mean;
      run_var = (1.0 - m) * run_var + m * unbiased;
    }
  } else {
    mean = run_mean.row(0);
    var = run_var.row(0);
  }
  cache.inv_std = (var.array() + mlp.bn_eps).rsqrt();
  cache.xhat = (z.rowwise() - mean).array().rowwise() * cache.inv_std.array();
  Eigen::MatrixXd y = cache.xhat.array().rowwise() * gamma.row(0).array();
  y.rowwise() += beta.row(0);
  return y;
}

Eigen::MatrixXd bn_backward(const Eigen::MatrixXd& dy, const Eigen::MatrixXd& gamma,
                            const BnCache& cache, Mode mode, Eigen::MatrixXd& dgamma,
                            Eigen::MatrixXd& dbeta) {
  dgamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbeta += dy.colwise().sum();
  const Eigen::MatrixXd dxhat = dy.array().rowwise() * gamma.row(0).array();
  if (mode == Mode::kEval) return dxhat.array().rowwise() * cache.inv_std.array();
  const auto b = static_cast<double>(dy.rows());
  const Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
  const Eigen::RowVectorXd sum_dx = (dxhat.array() * cache.xhat.array()).colwise().sum();
  Eigen::MatrixXd dz = b * dxhat;
  dz.rowwise() -= sum_d;
  dz -= (cache.xhat.array().rowwise() * sum_dx.array()).matrix();
  return (dz.array().rowwise() * (cache.inv_std.array() / b)).matrix();
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

Eigen::MatrixXd relu_grad(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& d) {
  return (pre.array() > 0.0).select(d, 0.0);
}

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const std::string& name) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error("tensor shape mismatch for " + name);
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

MsgNet MsgNet::init(const ModelDims& d, std::uint64_t seed) {
  if (d.input == 0 || d.hidden == 0 || d.mlp1 == 0 || d.mlp2 == 0)
    throw Error("MsgNet: dimensions must be positive");
  Rng rng(seed);
  MsgNet m;
  m.dims = d;
  m.gcn.w[0] = glorot(d.input, d.hidden, rng);
  m.gcn.w[1] = glorot(d.hidden, d.hidden, rng);
  m.gcn.w[2] = glorot(d.hidden, d.hidden, rng);
  const double a = 1.0 / std::sqrt(static_cast<double>(d.hidden));
  m.gcn.pool.resize(static_cast<Eigen::Index>(d.hidden), 1);
  for (Eigen::Index i = 0; i < m.gcn.pool.rows(); ++i) m.gcn.pool(i, 0) = rng.uniform(-a, a);

  auto& p = m.mlp;
  p.w1 = glorot(d.hidden, d.mlp1, rng);
  p.w2 = glorot(d.mlp1, d.mlp2, rng);
  p.w3 = glorot(d.mlp2, 1, rng);
  p.b1 = row(d.mlp1, 0.0);
  p.b2 = row(d.mlp2, 0.0);
  p.b3 = row(1, 0.0);
  p.gamma1 = row(d.mlp1, 1.0);
  p.beta1 = row(d.mlp1, 0.0);
  p.mean1 = row(d.mlp1, 0.0);
  p.var1 = row(d.mlp1, 1.0);
  p.gamma2 = row(d.mlp2, 1.0);
  p.beta2 = row(d.mlp2, 0.0);
  p.mean2 = row(d.mlp2, 0.0);
  p.var2 = row(d.mlp2, 1.0);
  return m;
}

MsgNet MsgNet::zeros_like() const {
  MsgNet z = *this;
  for (auto& t : z.tensors()) t.value->setZero();
  return z;
}

std::vector<TensorRef> MsgNet::tensors() {
  auto& p = mlp;
  return {
      {"gcn.w1", &gcn.w[0], true, true},   {"gcn.w2", &gcn.w[1], true, true},
      {"gcn.w3", &gcn.w[2], true, true},   {"gcn.pool", &gcn.pool, true, false},
      {"mlp.w1", &p.w1, true, true},       {"mlp.b1", &p.b1, true, false},
      {"mlp.gamma1", &p.gamma1, true, false}, {"mlp.beta1", &p.beta1, true, false},
      {"mlp.w2", &p.w2, true, true},       {"mlp.b2", &p.b2, true, false},
      {"mlp.gamma2", &p.gamma2, true, false}, {"mlp.beta2", &p.beta2, true, false},
      {"mlp.w3", &p.w3, true, true},       {"mlp.b3", &p.b3, true, false},
      {"mlp.mean1", &p.mean1, false, false}, {"mlp.var1", &p.var1, false, false},
      {"mlp.mean2", &p.mean2, false, false}, {"mlp.var2", &p.var2, false, false},
  };
}

std::size_t pooled_count(std::size_t n, double ratio) {
  if (n == 0) return 0;
  // Guard against 0.1 * 30 = 3.0000000000000004.
  const double k = std::ceil(ratio * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(k, 1.0)), 1, n);
}

Eigen::VectorXd gcn_forward(const Eigen::MatrixXd& features,
                            const Eigen::SparseMatrix<double>& laplacian, const GcnParams& p,
                            Mode mode, Rng* rng, GcnCache* cache) {
  const Eigen::Index n = features.rows();
  if (n == 0) throw Error("gcn_forward: empty graph");
  if (laplacian.rows() != n || laplacian.cols() != n)
    throw Error("gcn_forward: Laplacian does not match node count");
  if (features.cols() != p.w[0].rows())
    throw Error("gcn_forward: feature width " + std::to_string(features.cols()) +
                " does not match layer-1 input " + std::to_string(p.w[0].rows()));
  for (std::size_t l = 1; l < 3; ++l)
    if (p.w[l].rows() != p.w[l - 1].cols()) throw Error("gcn_forward: layer dimension mismatch");
  if (p.pool.rows() != p.w[2].cols() || p.pool.cols() != 1)
    throw Error("gcn_forward: pooling vector dimension mismatch");

  GcnCache local;
  GcnCache& c = cache ? *cache : local;
  const Eigen::MatrixXd* h = &features;
  for (std::size_t l = 0; l < 3; ++l) {
    c.propagated[l] = laplacian * *h;
    c.pre[l] = c.propagated[l] * p.w[l];
    c.mask[l] = mode == Mode::kTrain ? dropout_mask(n, p.w[l].cols(), p.dropout, rng)
                                     : Eigen::MatrixXd::Ones(n, p.w[l].cols());
    c.out[l] = relu(c.pre[l]).cwiseProduct(c.mask[l]);
    h = &c.out[l];
  }

  c.score = c.out[2] * p.pool.col(0);
  const std::size_t k = pooled_count(static_cast<std::size_t>(n), p.pool_ratio);
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return c.score(static_cast<Eigen::Index>(a)) > c.score(static_cast<Eigen::Index>(b));
  });
  order.resize(k);
  c.kept = order;

  Eigen::VectorXd emb = Eigen::VectorXd::Zero(p.w[2].cols());
  for (std::size_t i : c.kept) {
    const auto r = static_cast<Eigen::Index>(i);
    emb += sigmoid(c.score(r)) * c.out[2].row(r).transpose();
  }
  return emb / static_cast<double>(k);
}

Eigen::VectorXd gcn_forward(const TerrainGraph& g, const GcnParams& p, Mode mode, Rng* rng,
                            GcnCache* cache) {
  return gcn_forward(g.features, g.laplacian, p, mode, rng, cache);
}

void gcn_backward(const Eigen::SparseMatrix<double>& laplacian, const GcnParams& p,
                  const GcnCache& c, const Eigen::VectorXd& d_emb, GcnParams& grad) {
  const double inv_k = 1.0 / static_cast<double>(c.kept.size());
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(c.out[2].rows(), c.out[2].cols());
  for (std::size_t i : c.kept) {
    const auto r = static_cast<Eigen::Index>(i);
    const double gate = sigmoid(c.score(r));
    dh.row(r) += (gate * inv_k) * d_emb.transpose();
    const double dy = inv_k * c.out[2].row(r).dot(d_emb) * gate * (1.0 - gate);
    dh.row(r) += dy * p.pool.col(0).transpose();
    grad.pool.col(0) += dy * c.out[2].row(r).transpose();
  }
  for (std::size_t l = 3; l-- > 0;) {
    const Eigen::MatrixXd dpre = relu_grad(c.pre[l], dh.cwiseProduct(c.mask[l]));
    grad.w[l] += c.propagated[l].transpose() * dpre;
    if (l > 0) dh = laplacian.transpose() * (dpre * p.w[l].transpose());
  }
}

Eigen::VectorXd mlp_eval(const MlpParams& mlp, const Eigen::MatrixXd& fused) {
  Eigen::MatrixXd mean1 = mlp.mean1, var1 = mlp.var1, mean2 = mlp.mean2, var2 = mlp.var2;
  BnCache c1, c2;
  Eigen::MatrixXd z1 = fused * mlp.w1;
  z1.rowwise() += mlp.b1.row(0);
  const Eigen::MatrixXd a1 =
      relu(bn_forward(z1, mlp.gamma1, mlp.beta1, mean1, var1, mlp, Mode::kEval, false, c1));
  Eigen::MatrixXd z2 = a1 * mlp.w2;
  z2.rowwise() += mlp.b2.row(0);
  const Eigen::MatrixXd a2 =
      relu(bn_forward(z2, mlp.gamma2, mlp.beta2, mean2, var2, mlp, Mode::kEval, false, c2));
  Eigen::MatrixXd z3 = a2 * mlp.w3;
  z3.rowwise() += mlp.b3.row(0);
  return z3.col(0);
}

double siamese_score_embeddings(const Eigen::VectorXd& e1, const Eigen::VectorXd& e2,
                                const MsgNet& model) {
  if (e1.size() != e2.size()) throw Error("siamese_score: embedding size mismatch");
  const Eigen::MatrixXd fused = (e1 - e2).cwiseAbs().transpose();
  return sigmoid(mlp_eval(model.mlp, fused)(0));
}

double siamese_score(const TerrainGraph& g1, const TerrainGraph& g2, const MsgNet& model) {
  return siamese_score_embeddings(gcn_forward(g1, model.gcn, Mode::kEval),
                                  gcn_forward(g2, model.gcn, Mode::kEval), model);
}

double bce_loss(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error("bce_loss: length mismatch");
  if (scores.empty()) throw Error("bce_loss: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error("bce_loss: labels must be 0 or 1");
    const double s = std::clamp(scores[i], kBceEps, 1.0 - kBceEps);
    sum -= labels[i] ? std::log(s) : std::log(1.0 - s);
  }
  return sum / static_cast<double>(scores.size());
}

BatchOutput forward_backward(MsgNet& model, std::span<const TerrainGraph> graphs,
                             std::span<const PairIndex> batch, const StepOptions& opt,
                             MsgNet* grad) {
  if (batch.empty()) throw Error("forward_backward: empty batch");
  auto& mlp = model.mlp;
  const Mode mode = opt.mode;

  std::vector<std::size_t> unique;
  for (const auto& pr : batch) {
    if (pr.a >= graphs.size() || pr.b >= graphs.size())
      throw Error("forward_backward: pair references a missing graph");
    unique.push_back(pr.a);
    unique.push_back(pr.b);
  }
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  auto slot = [&](std::size_t g) {
    return static_cast<std::size_t>(std::lower_bound(unique.begin(), unique.end(), g) - unique.begin());
  };

  std::vector<GcnCache> caches(unique.size());
  std::vector<Eigen::VectorXd> emb(unique.size());
  for (std::size_t u = 0; u < unique.size(); ++u)
    emb[u] = gcn_forward(graphs[unique[u]], model.gcn, mode, opt.rng, &caches[u]);

  const auto b = static_cast<Eigen::Index>(batch.size());
  const auto h = static_cast<Eigen::Index>(model.dims.hidden);
  Eigen::MatrixXd diff(b, h);
  for (Eigen::Index r = 0; r < b; ++r) {
    const auto& pr = batch[static_cast<std::size_t>(r)];
    diff.row(r) = (emb[slot(pr.a)] - emb[slot(pr.b)]).transpose();
  }
  const Eigen::MatrixXd x = diff.cwiseAbs();

  BnCache c1, c2;
  const bool update = mode == Mode::kTrain && opt.update_running_stats;
  Eigen::MatrixXd z1 = x * mlp.w1;
  z1.rowwise() += mlp.b1.row(0);
  const Eigen::MatrixXd y1 = bn_forward(z1, mlp.gamma1, mlp.beta1, mlp.mean1, mlp.var1, mlp, mode, update, c1);
  const Eigen::MatrixXd m1 = mode == Mode::kTrain ? dropout_mask(b, y1.cols(), mlp.dropout, opt.rng)
                                                  : Eigen::MatrixXd::Ones(b, y1.cols());
  const Eigen::MatrixXd a1 = relu(y1).cwiseProduct(m1);
  Eigen::MatrixXd z2 = a1 * mlp.w2;
  z2.rowwise() += mlp.b2.row(0);
  const Eigen::MatrixXd y2 = bn_forward(z2, mlp.gamma2, mlp.beta2, mlp.mean2, mlp.var2, mlp, mode, update, c2);
  const Eigen::MatrixXd m2 = mode == Mode::kTrain ? dropout_mask(b, y2.cols(), mlp.dropout, opt.rng)
                                                  : Eigen::MatrixXd::Ones(b, y2.cols());
  const Eigen::MatrixXd a2 = relu(y2).cwiseProduct(m2);
  Eigen::MatrixXd z3 = a2 * mlp.w3;
  z3.rowwise() += mlp.b3.row(0);

  BatchOutput out;
  std::vector<int> labels(batch.size());
  out.scores.resize(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) {
    out.scores[r] = sigmoid(z3(static_cast<Eigen::Index>(r), 0));
    labels[r] = batch[r].label;
  }
  out.loss = bce_loss(out.scores, labels);
  if (grad == nullptr) return out;

  auto& g = grad->mlp;
  Eigen::MatrixXd dz3(b, 1);
  for (Eigen::Index r = 0; r < b; ++r) {
    const double s = out.scores[static_cast<std::size_t>(r)];
    const bool clamped = s < kBceEps || s > 1.0 - kBceEps;
    dz3(r, 0) = clamped ? 0.0 : (s - labels[static_cast<std::size_t>(r)]) / static_cast<double>(b);
  }
  g.w3 += a2.transpose() * dz3;
  g.b3 += dz3.colwise().sum();
  const Eigen::MatrixXd dy2 = relu_grad(y2, (dz3 * mlp.w3.transpose()).cwiseProduct(m2));
  const Eigen::MatrixXd dz2 = bn_backward(dy2, mlp.gamma2, c2, mode, g.gamma2, g.beta2);
  g.w2 += a1.transpose() * dz2;
  g.b2 += dz2.colwise().sum();
  const Eigen::MatrixXd dy1 = relu_grad(y1, (dz2 * mlp.w2.transpose()).cwiseProduct(m1));
  const Eigen::MatrixXd dz1 = bn_backward(dy1, mlp.gamma1, c1, mode, g.gamma1, g.beta1);
  g.w1 += x.transpose() * dz1;
  g.b1 += dz1.colwise().sum();
  // d|d|/dd = sign(d), with sign(0) = 0.
  const Eigen::MatrixXd ddiff = (dz1 * mlp.w1.transpose()).cwiseProduct(
      diff.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }));

  std::vector<Eigen::VectorXd> demb(unique.size(), Eigen::VectorXd::Zero(h));
  for (Eigen::Index r = 0; r < b; ++r) {
    const auto& pr = batch[static_cast<std::size_t>(r)];
    demb[slot(pr.a)] += ddiff.row(r).transpose();
    demb[slot(pr.b)] -= ddiff.row(r).transpose();
  }
  for (std::size_t u = 0; u < unique.size(); ++u)
    gcn_backward(graphs[unique[u]].laplacian, model.gcn, caches[u], demb[u], grad->gcn);
  return out;
}

double global_norm(MsgNet& grad) {
  double sq = 0.0;
  for (const auto& t : grad.tensors())
    if (t.trainable) sq += t.value->squaredNorm();
  return std::sqrt(sq);
}

double clip_global_norm(MsgNet& grad, double max_norm) {
  const double norm = global_norm(grad);
  if (!(norm > max_norm)) return norm;
  const double scale = max_norm / norm;
  for (auto& t : grad.tensors())
    if (t.trainable) *t.value *= scale;
  return global_norm(grad);
}

std::vector<double> export_activations(const TerrainGraph& g, const GcnParams& gcn) {
  GcnCache c;
  gcn_forward(g, gcn, Mode::kEval, nullptr, &c);
  const Eigen::VectorXd norms = c.out[2].rowwise().norm();
  const double lo = norms.minCoeff(), hi = norms.maxCoeff();
  std::vector<double> out(static_cast<std::size_t>(norms.size()), 0.0);
  if (hi > lo)
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = (norms(static_cast<Eigen::Index>(i)) - lo) / (hi - lo);
  return out;
}

void write_activations(const TerrainGraph& g, std::span<const double> intensity,
                       const std::filesystem::path& path) {
  if (intensity.size() != g.size()) throw Error("write_activations: size mismatch");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "node,x,y,intensity\n";
  for (std::size_t i = 0; i < g.size(); ++i)
    out << i << ',' << g.nodes[i].x << ',' << g.nodes[i].y << ',' << intensity[i] << '\n';
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {

constexpr char kMagic[4] = {'M', 'S', 'G', 'N'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ParseError("checkpoint: truncated");
  return v;
}

}  // namespace

void save_checkpoint(MsgNet& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  for (std::size_t d : {model.dims.input, model.dims.hidden, model.dims.mlp1, model.dims.mlp2})
    put<std::uint64_t>(out, d);
  const auto tensors = model.tensors();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value->rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value->cols()));
    for (Eigen::Index i = 0; i < t.value->rows(); ++i)
      for (Eigen::Index j = 0; j < t.value->cols(); ++j) put<double>(out, (*t.value)(i, j));
  }
  if (!out) throw Error("write failed: " + path.string());
}

MsgNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("checkpoint: bad magic in " + path.string());
  if (get<std::uint32_t>(in) != kVersion) throw ParseError("checkpoint: unsupported version");
  ModelDims dims;
  dims.input = get<std::uint64_t>(in);
  dims.hidden = get<std::uint64_t>(in);
  dims.mlp1 = get<std::uint64_t>(in);
  dims.mlp2 = get<std::uint64_t>(in);
  MsgNet model = MsgNet::init(dims, 0);
  auto tensors = model.tensors();
  const auto count = get<std::uint32_t>(in);
  if (count != tensors.size()) throw ParseError("checkpoint: unexpected tensor count");
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = get<std::uint32_t>(in);
    if (len > 256) throw ParseError("checkpoint: tensor name too long");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw ParseError("checkpoint: truncated");
    auto it = std::find_if(tensors.begin(), tensors.end(),
                           [&](const TensorRef& t) { return t.name == name; });
    if (it == tensors.end()) throw ParseError("checkpoint: unknown tensor " + name);
    const auto rows = get<std::uint64_t>(in), cols = get<std::uint64_t>(in);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    require_same_shape(m, *it->value, name);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = get<double>(in);
    if (!m.allFinite()) throw ParseError("checkpoint: non-finite values in " + name);
    *it->value = std::move(m);
  }
  return model;
}

}  // namespace analog
