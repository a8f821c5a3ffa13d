#include "analog/twc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "analog/error.hpp"
#include "analog/parallel.hpp"

namespace analog {

SliceSequence::SliceSequence(std::size_t width, double along_spacing, std::vector<double> values)
    : width_(width), along_spacing_(along_spacing), values_(std::move(values)) {
  if (width_ == 0) throw Error("SliceSequence: width must be positive");
  if (values_.empty() || values_.size() % width_ != 0)
    throw Error("SliceSequence: values must hold a whole, non-zero number of slices");
}

SliceSequence SliceSequence::reversed() const {
  std::vector<double> out;
  out.reserve(values_.size());
  for (std::size_t i = size(); i-- > 0;) {
    auto s = slice(i);
    out.insert(out.end(), s.begin(), s.end());
  }
  return SliceSequence(width_, along_spacing_, std::move(out));
}

SliceSequence SliceSequence::shifted(double offset) const {
  std::vector<double> out(values_);
  for (auto& v : out) v += offset;
  return SliceSequence(width_, along_spacing_, std::move(out));
}

// ---------------------------------------------------------------------------

SliceSequence slice_decompose(const ValleyCandidate& cand, const SliceOptions& opts) {
  if (opts.width < 2) throw Error("slice_decompose: width must be >= 2");
  const DemGrid& g = cand.raster;
  const double cs = g.cell_size();
  const double along_px = (opts.along_spacing_m > 0 ? opts.along_spacing_m : cs) / cs;
  const double cross_px = (opts.cross_spacing_m > 0 ? opts.cross_spacing_m : cs) / cs;

  const double cy = cand.fit.center_row - static_cast<double>(cand.box.row_min);
  const double cx = cand.fit.center_col - static_cast<double>(cand.box.col_min);
  const double ux = cand.fit.dir_col, uy = cand.fit.dir_row;
  const double nx = -uy, ny = ux;
  const double mid = static_cast<double>(opts.width - 1) / 2.0;

  std::vector<double> values;
  std::vector<double> slice(opts.width);
  const auto steps = static_cast<std::size_t>(
      std::floor((cand.fit.t_max - cand.fit.t_min) / along_px + 1e-9));
  for (std::size_t s = 0; s <= steps; ++s) {
    const double t = cand.fit.t_min + static_cast<double>(s) * along_px;
    const double px = cx + t * ux, py = cy + t * uy;
    bool ok = true;
    for (std::size_t k = 0; k < opts.width && ok; ++k) {
      const double o = (static_cast<double>(k) - mid) * cross_px;
      const auto v = g.sample(py + o * ny, px + o * nx);
      if (!v) ok = false;
      else slice[k] = *v;
    }
    if (ok) values.insert(values.end(), slice.begin(), slice.end());
  }
  if (values.empty()) throw Error("slice_decompose: no usable slices for " + cand.id);
  return SliceSequence(opts.width, along_px * cs, std::move(values));
}

ValleyCandidate reference_candidate(const DemGrid& grid, std::string id) {
  ValleyCandidate c;
  c.id = std::move(id);
  c.raster = grid;
  c.source_tile = c.id;
  c.box = grid.extent();
  auto& f = c.fit;
  f.center_row = static_cast<double>(grid.rows() - 1) / 2.0;
  f.center_col = static_cast<double>(grid.cols() - 1) / 2.0;
  if (grid.cols() >= grid.rows()) {
    f.dir_col = 1;
    f.dir_row = 0;
    f.slope = 0;
    f.intercept = f.center_row;
    f.t_max = f.center_col;
  } else {
    f.dir_col = 0;
    f.dir_row = 1;
    f.slope = std::numeric_limits<double>::infinity();
    f.intercept = std::numeric_limits<double>::quiet_NaN();
    f.t_max = f.center_row;
  }
  f.t_min = -f.t_max;
  f.length = f.t_max - f.t_min;
  f.mse = 0;
  return c;
}

SliceSequence reference_slices(const DemGrid& grid, std::size_t width, double along_spacing_m) {
  const auto ref = reference_candidate(grid);
  const std::size_t cross_cells = std::min(grid.rows(), grid.cols());
  if (cross_cells < 2 || width < 2) throw Error("reference_slices: reference too narrow");
  SliceOptions opts;
  opts.width = width;
  opts.along_spacing_m = along_spacing_m;
  opts.cross_spacing_m =
      static_cast<double>(cross_cells - 1) * grid.cell_size() / static_cast<double>(width - 1);
  return slice_decompose(ref, opts);
}

DemGrid slices_to_grid(const SliceSequence& seq) {
  return DemGrid(seq.size(), seq.width(), seq.along_spacing(), {},
                 std::vector<double>(seq.values().begin(), seq.values().end()));
}

// ---------------------------------------------------------------------------

SliceSequence slice_derivative(const SliceSequence& seq) {
  const std::size_t n = seq.size(), w = seq.width();
  if (n < 3) throw Error("slice_derivative: sequence needs at least 3 slices");
  std::vector<double> d(n * w);
  const auto q = seq.values();
  for (std::size_t i = 1; i + 1 < n; ++i)
    for (std::size_t k = 0; k < w; ++k) {
      const double prev = q[(i - 1) * w + k], cur = q[i * w + k], next = q[(i + 1) * w + k];
      d[i * w + k] = ((cur - prev) + (next - prev) / 2.0) / 2.0;
    }
  for (std::size_t k = 0; k < w; ++k) {
    d[k] = d[w + k];
    d[(n - 1) * w + k] = d[(n - 2) * w + k];
  }
  return SliceSequence(w, seq.along_spacing(), std::move(d));
}

double dtw_cost(const SliceSequence& da, const SliceSequence& db) {
  if (da.width() != db.width()) throw Error("ddtw_cost: slice width mismatch");
  const std::size_t n = da.size(), m = db.size(), w = da.width();
  const auto a = da.values(), b = db.values();
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0;
    const double* pa = a.data() + i * w;
    const double* pb = b.data() + j * w;
    for (std::size_t k = 0; k < w; ++k) {
      const double d = pa[k] - pb[k];
      s += d * d;
    }
    return std::sqrt(s);
  };

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m, inf), cur(m, inf);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double best;
      if (i == 0 && j == 0) best = 0;
      else {
        best = inf;
        if (i > 0) best = std::min(best, prev[j]);
        if (j > 0) best = std::min(best, cur[j - 1]);
        if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
      }
      cur[j] = best + dist(i, j);
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

double ddtw_cost(const SliceSequence& a, const SliceSequence& b) {
  if (a.width() != b.width()) throw Error("ddtw_cost: slice width mismatch");
  return dtw_cost(slice_derivative(a), slice_derivative(b));
}

BidirectionalCost bidirectional_ddtw(const SliceSequence& a, const SliceSequence& b) {
  if (a.width() != b.width()) throw Error("ddtw_cost: slice width mismatch");
  const auto db = slice_derivative(b);
  return {dtw_cost(slice_derivative(a), db), dtw_cost(slice_derivative(a.reversed()), db)};
}

std::vector<TwcScore> twc_filter(std::span<const std::string> ids,
                                 std::span<const SliceSequence> seqs, const SliceSequence& ref,
                                 std::size_t keep, unsigned workers) {
  if (keep < 1) throw Error("twc_filter: keep must be >= 1");
  if (ids.size() != seqs.size()) throw Error("twc_filter: ids/sequences length mismatch");
  const auto dref = slice_derivative(ref);
  std::vector<TwcScore> scores(seqs.size());
  parallel_for(
      seqs.size(),
      [&](std::size_t i) {
        auto& s = scores[i];
        s.id = ids[i];
        s.index = i;
        if (seqs[i].width() != ref.width()) throw Error("twc_filter: slice width mismatch");
        s.forward = dtw_cost(slice_derivative(seqs[i]), dref);
        s.reverse = dtw_cost(slice_derivative(seqs[i].reversed()), dref);
        s.cost = std::min(s.forward, s.reverse);
      },
      workers);
  std::sort(scores.begin(), scores.end(), [](const TwcScore& a, const TwcScore& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.id < b.id;
  });
  if (scores.size() > keep) scores.resize(keep);
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i].rank = i + 1;
  return scores;
}

void write_twc_scores(const std::vector<TwcScore>& scores, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "id,forward_cost,reverse_cost,min_cost,rank\n";
  char buf[128];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%zu", s.forward, s.reverse, s.cost, s.rank);
    out << s.id << ',' << buf << '\n';
  }
}

std::vector<TwcScore> read_twc_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<TwcScore> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (++line_no == 1 || line.empty()) continue;
    std::stringstream ss(line);
    std::string f[5];
    for (auto& x : f)
      if (!std::getline(ss, x, ',')) throw ParseError("twc scores: expected 5 fields", line_no);
    try {
      out.push_back({f[0], 0, std::stod(f[1]), std::stod(f[2]), std::stod(f[3]),
                     std::stoull(f[4])});
    } catch (const std::logic_error&) {
      throw ParseError("twc scores: non-numeric field", line_no);
    }
  }
  return out;
}

}  // namespace analog
