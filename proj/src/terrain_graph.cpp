#include "analog/terrain_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "analog/error.hpp"

namespace analog {

Eigen::MatrixXd standardize_features(const Eigen::MatrixXd& raw) {
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  const double n = static_cast<double>(raw.rows());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double mean = raw.col(j).mean();
    const double var = (raw.col(j).array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean))))
      out.col(j).setZero();
    else
      out.col(j) = (raw.col(j).array() - mean) / sd;
  }
  return out;
}

Eigen::SparseMatrix<double> normalized_laplacian(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<double> deg(n, 0.0);
  for (const auto& [i, j] : edges) {
    if (i >= n || j >= n || i == j) throw Error("normalized_laplacian: invalid edge");
    deg[i] += 1;
    deg[j] += 1;
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n + 2 * edges.size());
  for (std::size_t i = 0; i < n; ++i)
    trip.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
  for (const auto& [i, j] : edges) {
    const double w = -1.0 / std::sqrt(deg[i] * deg[j]);
    trip.emplace_back(static_cast<int>(i), static_cast<int>(j), w);
    trip.emplace_back(static_cast<int>(j), static_cast<int>(i), w);
  }
  Eigen::SparseMatrix<double> lap(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  lap.setFromTriplets(trip.begin(), trip.end());
  return lap;
}

TerrainGraph assemble_graph(std::vector<NodeSample> nodes, Eigen::MatrixXd raw_features,
                            std::vector<Edge> edges) {
  const std::size_t n = nodes.size();
  if (n == 0) throw Error("assemble_graph: empty graph");
  if (static_cast<std::size_t>(raw_features.rows()) != n ||
      raw_features.cols() != static_cast<Eigen::Index>(kFeatureCount))
    throw Error("assemble_graph: feature matrix must be n x 5");
  if (!raw_features.allFinite()) throw Error("assemble_graph: non-finite feature");
  for (auto& e : edges)
    if (e.first > e.second) std::swap(e.first, e.second);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  TerrainGraph g;
  g.nodes = std::move(nodes);
  g.features = standardize_features(raw_features);
  g.raw_features = std::move(raw_features);
  g.laplacian = normalized_laplacian(n, edges);
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& [i, j] : edges) {
    trip.emplace_back(static_cast<int>(i), static_cast<int>(j), 1.0);
    trip.emplace_back(static_cast<int>(j), static_cast<int>(i), 1.0);
  }
  g.adjacency.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  g.adjacency.setFromTriplets(trip.begin(), trip.end());
  g.edges = std::move(edges);
  return g;
}

TerrainGraph build_graph(const DemGrid& grid, const GraphConfig& cfg) {
  const ContourSet contours = extract_contours(grid, cfg.contour_interval);
  std::vector<NodeSample> nodes;
  {
    std::map<std::pair<double, double>, bool> seen;
    for (const auto& s : sample_nodes(contours, cfg.node_spacing))
      if (seen.emplace(std::make_pair(s.x, s.y), true).second) nodes.push_back(s);
  }
  if (nodes.size() < 3)
    throw Error("build_graph: only " + std::to_string(nodes.size()) + " nodes (need >= 3)");

  std::vector<Point2> pos;
  pos.reserve(nodes.size());
  for (const auto& s : nodes) pos.push_back({s.x, s.y});
  const Triangulation tri = delaunay(pos);

  const std::size_t n = nodes.size();
  const double cs = grid.cell_size();
  const std::size_t vh = cfg.vrm_window / 2;
  if (grid.rows() < cfg.vrm_window || grid.cols() < cfg.vrm_window)
    throw Error("build_graph: grid smaller than the VRM window");
  const std::size_t patch = std::min({cfg.acr_patch, grid.rows(), grid.cols()});
  if (patch < 2) throw Error("build_graph: ACR patch needs >= 2 points");

  std::vector<double> slope_sum(n, 0.0);
  std::vector<std::size_t> slope_cnt(n, 0);
  for (const auto& [i, j] : tri.edges) {
    const double s = slope_between(nodes[i], nodes[j]);
    slope_sum[i] += s;
    slope_sum[j] += s;
    ++slope_cnt[i];
    ++slope_cnt[j];
  }

  const SegmentIndex index(contours, cfg.radius);
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nd = nodes[i];
    auto nearest = [&](double v, std::size_t count) {
      const double idx = std::round(v / cs);
      return static_cast<std::size_t>(std::clamp(idx, 0.0, static_cast<double>(count - 1)));
    };
    const std::size_t r = nearest(nd.y, grid.rows()), c = nearest(nd.x, grid.cols());
    const std::size_t vr = std::clamp(r, vh, grid.rows() - 1 - vh);
    const std::size_t vc = std::clamp(c, vh, grid.cols() - 1 - vh);

    const std::size_t ph = patch / 2;
    const std::size_t pr0 = std::min(r >= ph ? r - ph : 0, grid.rows() - patch);
    const std::size_t pc0 = std::min(c >= ph ? c - ph : 0, grid.cols() - patch);
    const BoundingBox pbox{pr0, pr0 + patch - 1, pc0, pc0 + patch - 1};

    const auto row = static_cast<Eigen::Index>(i);
    raw(row, kVrm) = vrm(grid, vr, vc, cfg.vrm_window);
    raw(row, kAcr) = acr(grid, pbox);
    raw(row, kSlope) = slope_cnt[i] ? slope_sum[i] / static_cast<double>(slope_cnt[i]) : 0.0;
    raw(row, kCd) = contour_density({nd.x, nd.y}, index, cfg.radius);
    raw(row, kDse) = direction_entropy({nd.x, nd.y}, index, cfg.radius, cfg.bins);
  }
  return assemble_graph(std::move(nodes), std::move(raw), tri.edges);
}

// ---------------------------------------------------------------------------
// Serialization

std::string format_graph(const TerrainGraph& g) {
  std::string out = "terrain-graph 1\nnodes " + std::to_string(g.size()) + "\n";
  char buf[64];
  for (std::size_t i = 0; i < g.size(); ++i) {
    out += std::to_string(i);
    const auto& nd = g.nodes[i];
    for (double v : {nd.x, nd.y, nd.z}) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out += buf;
    }
    for (const auto* m : {&g.raw_features, &g.features})
      for (Eigen::Index j = 0; j < m->cols(); ++j) {
        std::snprintf(buf, sizeof buf, " %.17g", (*m)(static_cast<Eigen::Index>(i), j));
        out += buf;
      }
    out += '\n';
  }
  out += "edges " + std::to_string(g.edges.size()) + "\n";
  for (const auto& [a, b] : g.edges) out += std::to_string(a) + " " + std::to_string(b) + "\n";
  return out;
}

TerrainGraph parse_graph(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "terrain-graph" || version != 1)
    throw ParseError("graph: bad header");
  std::size_t n = 0;
  if (!(in >> tag >> n) || tag != "nodes") throw ParseError("graph: expected node count");
  std::vector<NodeSample> nodes(n);
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kFeatureCount));
  Eigen::MatrixXd stdz(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t id = 0;
    if (!(in >> id) || id != i) throw ParseError("graph: node ids must be 0..n-1 in order");
    if (!(in >> nodes[i].x >> nodes[i].y >> nodes[i].z)) throw ParseError("graph: bad node row");
    for (auto* m : {&raw, &stdz})
      for (Eigen::Index j = 0; j < m->cols(); ++j)
        if (!(in >> (*m)(static_cast<Eigen::Index>(i), j))) throw ParseError("graph: bad feature");
  }
  std::size_t m = 0;
  if (!(in >> tag >> m) || tag != "edges") throw ParseError("graph: expected edge count");
  std::vector<Edge> edges(m);
  for (auto& e : edges)
    if (!(in >> e.first >> e.second) || e.first >= n || e.second >= n)
      throw ParseError("graph: bad edge");
  TerrainGraph g = assemble_graph(std::move(nodes), std::move(raw), std::move(edges));
  // Keep the stored standardized values (they may have been edited, e.g.
  // for ablations).
  g.features = std::move(stdz);
  return g;
}

void write_graph(const TerrainGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << format_graph(g);
}

TerrainGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_graph(ss.str());
}

}  // namespace analog
