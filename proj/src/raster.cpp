#include "analog/raster.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "analog/error.hpp"

namespace analog {

DemGrid::DemGrid(std::size_t rows, std::size_t cols, double cell_size, GeoOrigin origin,
                 std::vector<double> elevations, double nodata_value)
    : rows_(rows),
      cols_(cols),
      cell_size_(cell_size),
      origin_(origin),
      elevations_(std::move(elevations)),
      nodata_(nodata_value) {
  if (rows_ == 0 || cols_ == 0) throw Error("DemGrid: rows and cols must be >= 1");
  if (!(cell_size_ > 0.0) || !std::isfinite(cell_size_))
    throw Error("DemGrid: cell_size must be positive");
  if (elevations_.size() != rows_ * cols_)
    throw Error("DemGrid: elevation count " + std::to_string(elevations_.size()) +
                " != rows*cols " + std::to_string(rows_ * cols_));
  for (double v : elevations_)
    if (v != nodata_ && !std::isfinite(v)) throw Error("DemGrid: non-finite elevation");
}

DemGrid DemGrid::filled(std::size_t rows, std::size_t cols, double cell_size, double value,
                        GeoOrigin origin, double nodata_value) {
  return DemGrid(rows, cols, cell_size, origin, std::vector<double>(rows * cols, value),
                 nodata_value);
}

bool DemGrid::has_nodata() const noexcept {
  return std::find(elevations_.begin(), elevations_.end(), nodata_) != elevations_.end();
}

std::optional<double> DemGrid::sample(double row, double col) const noexcept {
  constexpr double eps = 1e-9;
  if (!(row >= -eps && col >= -eps && row <= rows_ - 1 + eps && col <= cols_ - 1 + eps))
    return std::nullopt;
  row = std::clamp(row, 0.0, static_cast<double>(rows_ - 1));
  col = std::clamp(col, 0.0, static_cast<double>(cols_ - 1));
  const auto r0 = static_cast<std::size_t>(std::floor(row));
  const auto c0 = static_cast<std::size_t>(std::floor(col));
  const std::size_t r1 = std::min(r0 + 1, rows_ - 1);
  const std::size_t c1 = std::min(c0 + 1, cols_ - 1);
  const double fr = row - static_cast<double>(r0);
  const double fc = col - static_cast<double>(c0);

  const double w[4] = {(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
  const double v[4] = {at(r0, c0), at(r0, c1), at(r1, c0), at(r1, c1)};
  double acc = 0.0;
  for (int k = 0; k < 4; ++k) {
    // Zero-weight corners may be nodata without poisoning the sample.
    if (w[k] == 0.0) continue;
    if (v[k] == nodata_) return std::nullopt;
    acc += w[k] * v[k];
  }
  return acc;
}

std::optional<std::array<double, 2>> DemGrid::value_range() const noexcept {
  std::optional<std::array<double, 2>> out;
  for (double v : elevations_) {
    if (v == nodata_) continue;
    if (!out)
      out = std::array<double, 2>{v, v};
    else {
      (*out)[0] = std::min((*out)[0], v);
      (*out)[1] = std::max((*out)[1], v);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ASCII grid

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

bool parse_double(std::string_view tok, double& out) {
  // from_chars rejects a leading '+', which some writers emit.
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

DemGrid parse_ascii_grid(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  std::optional<double> ncols, nrows, xll, yll, cellsize;
  bool x_center = false, y_center = false;
  double nodata = DemGrid::kDefaultNodata;

  std::vector<double> values;
  std::size_t data_rows = 0;

  while (std::getline(in, line)) {
    ++line_no;
    auto toks = split_ws(line);
    if (toks.empty()) continue;

    const bool is_header = std::isalpha(static_cast<unsigned char>(toks[0][0])) && data_rows == 0 &&
                           !(toks[0] == "nan" || toks[0] == "inf");
    if (is_header) {
      if (toks.size() != 2) throw ParseError("malformed header line", line_no);
      const std::string key = lower(std::string(toks[0]));
      double v = 0;
      if (!parse_double(toks[1], v)) throw ParseError("non-numeric header value for " + key, line_no);
      if (key == "ncols") ncols = v;
      else if (key == "nrows") nrows = v;
      else if (key == "xllcorner") xll = v;
      else if (key == "xllcenter") { xll = v; x_center = true; }
      else if (key == "yllcorner") yll = v;
      else if (key == "yllcenter") { yll = v; y_center = true; }
      else if (key == "cellsize") cellsize = v;
      else if (key == "nodata_value") nodata = v;
      else throw ParseError("unknown header key '" + std::string(toks[0]) + "'", line_no);
      continue;
    }

    if (!ncols || !nrows || !xll || !yll || !cellsize)
      throw ParseError("incomplete header before data", line_no);
    const auto nc = static_cast<std::size_t>(*ncols);
    const auto nr = static_cast<std::size_t>(*nrows);
    if (*ncols < 1 || *nrows < 1 || static_cast<double>(nc) != *ncols ||
        static_cast<double>(nr) != *nrows)
      throw ParseError("ncols/nrows must be positive integers", line_no);
    if (toks.size() != nc)
      throw ParseError("expected " + std::to_string(nc) + " values, found " +
                           std::to_string(toks.size()),
                       line_no);
    if (data_rows == nr) throw ParseError("more data rows than nrows", line_no);
    for (auto tok : toks) {
      double v = 0;
      if (!parse_double(tok, v) || (!std::isfinite(v) && v != nodata))
        throw ParseError("non-numeric cell '" + std::string(tok) + "'", line_no);
      values.push_back(v);
    }
    ++data_rows;
  }

  if (!ncols || !nrows || !xll || !yll || !cellsize) throw ParseError("incomplete header");
  const auto nc = static_cast<std::size_t>(*ncols);
  const auto nr = static_cast<std::size_t>(*nrows);
  if (data_rows != nr)
    throw ParseError("expected " + std::to_string(nr) + " data rows, found " +
                     std::to_string(data_rows));
  if (!(*cellsize > 0)) throw ParseError("cellsize must be positive");

  const double cs = *cellsize;
  GeoOrigin origin{*xll - (x_center ? cs / 2 : 0.0),
                   *yll - (y_center ? cs / 2 : 0.0) + static_cast<double>(nr) * cs};
  return DemGrid(nr, nc, cs, origin, std::move(values), nodata);
}

DemGrid load_ascii_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_ascii_grid(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string format_ascii_grid(const DemGrid& g) {
  std::ostringstream out;
  out.precision(17);
  out << "ncols " << g.cols() << "\n"
      << "nrows " << g.rows() << "\n"
      << "xllcorner " << g.origin().x << "\n"
      << "yllcorner " << g.origin().y - static_cast<double>(g.rows()) * g.cell_size() << "\n"
      << "cellsize " << g.cell_size() << "\n"
      << "NODATA_value " << g.nodata_value() << "\n";
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) {
      if (c) out << ' ';
      out << g.at(r, c);
    }
    out << '\n';
  }
  return out.str();
}

void write_ascii_grid(const DemGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << format_ascii_grid(grid);
}

// ---------------------------------------------------------------------------
// Binary formats

namespace {

template <class T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::string& what) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ParseError("truncated " + what);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

void expect_magic(std::istream& in, const char* magic, const std::string& path) {
  char buf[4];
  if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
    throw ParseError(path + ": bad magic, expected " + std::string(magic, 4));
}

}  // namespace

void write_binary_grid(const DemGrid& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write("TGRD", 4);
  put<std::uint16_t>(out, kBinaryGridVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.rows()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(g.cols()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(std::llround(g.cell_size() * 1000.0)));
  put<std::uint32_t>(out, 0u);
  put<double>(out, g.origin().x);
  put<double>(out, g.origin().y);
  put<float>(out, static_cast<float>(g.nodata_value()));
  for (double v : g.values()) put<float>(out, static_cast<float>(v));
}

DemGrid load_binary_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  expect_magic(in, "TGRD", path.string());
  const auto version = get<std::uint16_t>(in, "version");
  if (version != kBinaryGridVersion)
    throw ParseError(path.string() + ": unsupported TGRD version " + std::to_string(version));
  const auto rows = get<std::uint32_t>(in, "header");
  const auto cols = get<std::uint32_t>(in, "header");
  const auto cell_mm = get<std::uint32_t>(in, "header");
  (void)get<std::uint32_t>(in, "header");
  const double ox = get<double>(in, "header");
  const double oy = get<double>(in, "header");
  const float nodata = get<float>(in, "header");
  std::vector<double> values(static_cast<std::size_t>(rows) * cols);
  for (auto& v : values) v = static_cast<double>(get<float>(in, "payload"));
  return DemGrid(rows, cols, cell_mm / 1000.0, {ox, oy}, std::move(values),
                 static_cast<double>(nodata));
}

DemGrid load_grid(const std::filesystem::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".asc" || ext == ".txt") return load_ascii_grid(path);
  return load_binary_grid(path);
}

void write_binary_matrix(const DenseMatrix& m, const std::filesystem::path& path) {
  if (m.values.size() != m.rows * m.cols) throw Error("matrix payload size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write("TMAT", 4);
  put<std::uint16_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols));
  for (double v : m.values) put<double>(out, v);
}

DenseMatrix load_binary_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  expect_magic(in, "TMAT", path.string());
  if (get<std::uint16_t>(in, "version") != 1) throw ParseError("unsupported TMAT version");
  DenseMatrix m;
  m.rows = get<std::uint32_t>(in, "header");
  m.cols = get<std::uint32_t>(in, "header");
  m.values.resize(m.rows * m.cols);
  for (auto& v : m.values) v = get<double>(in, "payload");
  return m;
}

// ---------------------------------------------------------------------------
// Mosaic / crop

DemGrid mosaic_tiles(const TileQuad& q) {
  const DemGrid* first = nullptr;
  for (auto& row : q)
    for (auto& g : row)
      if (g && !first) first = &*g;
  if (!first) throw Error("mosaic_tiles: no grids given");

  const std::size_t r = first->rows(), c = first->cols();
  const double cs = first->cell_size();
  const double nodata = first->nodata_value();
  const double tol = 1e-6 * cs;
  for (auto& row : q)
    for (auto& g : row) {
      if (!g) continue;
      if (std::abs(g->cell_size() - cs) > 1e-12 * cs)
        throw Error("mosaic_tiles: mismatched cell_size");
      if (g->rows() != r || g->cols() != c) throw Error("mosaic_tiles: mismatched dimensions");
    }

  // Overlap in pixels, inferred from any pair of neighbours along an axis.
  auto infer_overlap = [&](double offset, std::size_t n, const char* axis) -> std::size_t {
    const double steps = offset / cs;
    const double k = static_cast<double>(n) - steps;
    const double kr = std::round(k);
    if (std::abs(k - kr) * cs > tol || kr < 0 || kr >= static_cast<double>(n))
      throw Error(std::string("mosaic_tiles: geographically inconsistent origins along ") + axis);
    return static_cast<std::size_t>(kr);
  };

  std::optional<std::size_t> kx, ky;
  for (int i = 0; i < 2; ++i)
    if (q[i][0] && q[i][1]) {
      auto k = infer_overlap(q[i][1]->origin().x - q[i][0]->origin().x, c, "x");
      if (kx && *kx != k) throw Error("mosaic_tiles: inconsistent column overlap");
      kx = k;
    }
  for (int j = 0; j < 2; ++j)
    if (q[0][j] && q[1][j]) {
      auto k = infer_overlap(q[0][j]->origin().y - q[1][j]->origin().y, r, "y");
      if (ky && *ky != k) throw Error("mosaic_tiles: inconsistent row overlap");
      ky = k;
    }
  // Diagonal-only arrangements fall back to the diagonal offset.
  if (!kx || !ky) {
    for (int d = 0; d < 2; ++d) {
      const auto& a = q[0][d];
      const auto& b = q[1][1 - d];
      if (!a || !b) continue;
      const double dx = d == 0 ? b->origin().x - a->origin().x : a->origin().x - b->origin().x;
      if (!kx) kx = infer_overlap(dx, c, "x");
      if (!ky) ky = infer_overlap(a->origin().y - b->origin().y, r, "y");
    }
  }
  const std::size_t ox = kx.value_or(0), oy = ky.value_or(0);
  const std::size_t step_c = c - ox, step_r = r - oy;

  // Anchor the north-west origin on the first present grid.
  GeoOrigin nw{};
  bool anchored = false;
  for (int i = 0; i < 2 && !anchored; ++i)
    for (int j = 0; j < 2 && !anchored; ++j)
      if (q[i][j]) {
        nw = {q[i][j]->origin().x - j * step_c * cs, q[i][j]->origin().y + i * step_r * cs};
        anchored = true;
      }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      if (!q[i][j]) continue;
      const GeoOrigin expect{nw.x + j * step_c * cs, nw.y - i * step_r * cs};
      if (std::abs(q[i][j]->origin().x - expect.x) > tol ||
          std::abs(q[i][j]->origin().y - expect.y) > tol)
        throw Error("mosaic_tiles: geographically inconsistent origins");
    }

  const std::size_t out_r = step_r + r, out_c = step_c + c;
  std::vector<double> out(out_r * out_c, nodata);
  std::vector<bool> written(out_r * out_c, false);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      if (!q[i][j]) continue;
      const DemGrid& g = *q[i][j];
      for (std::size_t rr = 0; rr < r; ++rr)
        for (std::size_t cc = 0; cc < c; ++cc) {
          const std::size_t idx = (i * step_r + rr) * out_c + (j * step_c + cc);
          const double v = g.at(rr, cc);
          if (written[idx] && out[idx] != nodata) continue;
          out[idx] = v == g.nodata_value() ? nodata : v;
          written[idx] = true;
        }
    }
  return DemGrid(out_r, out_c, cs, nw, std::move(out), nodata);
}

DemGrid crop(const DemGrid& g, const BoundingBox& box) {
  if (box.row_min > box.row_max || box.col_min > box.col_max || box.row_max >= g.rows() ||
      box.col_max >= g.cols())
    throw Error("crop: box outside grid extent");
  std::vector<double> out;
  out.reserve(box.area());
  for (std::size_t r = box.row_min; r <= box.row_max; ++r)
    for (std::size_t c = box.col_min; c <= box.col_max; ++c) out.push_back(g.at(r, c));
  const GeoOrigin origin{g.origin().x + static_cast<double>(box.col_min) * g.cell_size(),
                         g.origin().y - static_cast<double>(box.row_min) * g.cell_size()};
  return DemGrid(box.rows(), box.cols(), g.cell_size(), origin, std::move(out), g.nodata_value());
}

}  // namespace analog
