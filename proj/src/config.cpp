#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "analog/pipeline.hpp"

namespace analog {

using nlohmann::json;

namespace {

/// Reads keys from one JSON object, rejecting any key not consumed.
class Reader {
public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, v] : obj_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config key " + path_ + "." + k);
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<long long>() >= 0))
          throw ConfigError(path_ + "." + key + ": expected a non-negative integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError(path_ + "." + key + ": expected a number");
      }
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  template <class Fn>
  void object(const char* key, Fn&& fn) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    Reader sub(*it, path_ + "." + key);
    fn(sub);
  }

private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_graph(Reader& r, GraphConfig& g) {
  r.get("contour_interval", g.contour_interval);
  r.get("node_spacing", g.node_spacing);
  r.get("radius", g.radius);
  r.get("bins", g.bins);
  r.get("vrm_window", g.vrm_window);
  r.get("acr_patch", g.acr_patch);
}

json graph_json(const GraphConfig& g) {
  return {{"contour_interval", g.contour_interval}, {"node_spacing", g.node_spacing},
          {"radius", g.radius},                     {"bins", g.bins},
          {"vrm_window", g.vrm_window},             {"acr_patch", g.acr_patch}};
}

void check_graph(const GraphConfig& g, const std::string& name) {
  if (!(g.contour_interval > 0) || !(g.node_spacing > 0) || !(g.radius > 0) || g.bins == 0 ||
      g.vrm_window < 3 || g.vrm_window % 2 == 0 || g.acr_patch < 2)
    throw ConfigError("graph." + name + ": invalid value");
}

}  // namespace

void PipelineConfig::validate() const {
  if (mtm_keep < 1 || twc_keep < mtm_keep)
    throw ConfigError("funnel sizes must satisfy twc_keep >= mtm_keep >= 1");
  if (ssc.blk == 0 || ssc.blk % 2 == 0) throw ConfigError("ssc.blk must be odd");
  if (!(ssc.err >= 0) || !(ssc.s_l >= 0) || !(ssc.s_u >= ssc.s_l))
    throw ConfigError("ssc: need err >= 0 and 0 <= s_l <= s_u");
  if (!(ssc.dedup_iou > 0 && ssc.dedup_iou <= 1)) throw ConfigError("ssc.dedup_iou must be in (0, 1]");
  if (slices.width < 3) throw ConfigError("twc.slice_width must be >= 3");
  if (!(slices.along_spacing_m >= 0) || !(slices.cross_spacing_m >= 0))
    throw ConfigError("twc spacings must be >= 0");
  if (!(mtm_bound > 0) || !(mtm_variance > 0 && mtm_variance <= 1))
    throw ConfigError("mtm: bound must be > 0 and variance_keep in (0, 1]");
  check_graph(candidate_graph, "candidate");
  check_graph(reference_graph, "reference");
  try {
    train.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

PipelineConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig cfg;
  {
    Reader r(doc, "config");
    r.get("seed", cfg.seed);
    r.get("workers", cfg.workers);
    r.get("twc_keep", cfg.twc_keep);
    r.get("mtm_keep", cfg.mtm_keep);
    r.object("paths", [&](Reader& p) {
      p.get("tiles", cfg.tiles);
      p.get("reference", cfg.reference);
      p.get("checkpoint", cfg.checkpoint);
      p.get("out_dir", cfg.out_dir);
    });
    r.object("ssc", [&](Reader& s) {
      s.get("blk", cfg.ssc.blk);
      s.get("c", cfg.ssc.c);
      s.get("err", cfg.ssc.err);
      s.get("s_l", cfg.ssc.s_l);
      s.get("s_u", cfg.ssc.s_u);
      s.get("margin", cfg.ssc.margin);
      s.get("dedup_iou", cfg.ssc.dedup_iou);
    });
    r.object("twc", [&](Reader& t) {
      t.get("slice_width", cfg.slices.width);
      t.get("along_spacing_m", cfg.slices.along_spacing_m);
      t.get("cross_spacing_m", cfg.slices.cross_spacing_m);
    });
    r.object("mtm", [&](Reader& m) {
      m.get("deviation_bound", cfg.mtm_bound);
      m.get("variance_keep", cfg.mtm_variance);
    });
    r.object("graph", [&](Reader& g) {
      g.object("candidate", [&](Reader& c) { read_graph(c, cfg.candidate_graph); });
      g.object("reference", [&](Reader& c) { read_graph(c, cfg.reference_graph); });
    });
    r.object("train", [&](Reader& t) {
      auto& tc = cfg.train;
      t.get("lr", tc.lr);
      t.get("weight_decay", tc.weight_decay);
      t.get("batch_size", tc.batch_size);
      t.get("clip_norm", tc.clip_norm);
      t.get("patience", tc.patience);
      t.get("max_epochs", tc.max_epochs);
      t.get("seed", tc.seed);
      t.get("folds", tc.folds);
      t.get("val_fraction", tc.val_fraction);
      t.get("gcn_dropout", tc.gcn_dropout);
      t.get("mlp_dropout", tc.mlp_dropout);
      t.get("hidden", tc.dims.hidden);
      t.get("mlp1", tc.dims.mlp1);
      t.get("mlp2", tc.dims.mlp2);
    });
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const PipelineConfig& cfg) {
  const auto& tc = cfg.train;
  json doc = {
      {"seed", cfg.seed},
      {"workers", cfg.workers},
      {"twc_keep", cfg.twc_keep},
      {"mtm_keep", cfg.mtm_keep},
      {"paths",
       {{"tiles", cfg.tiles},
        {"reference", cfg.reference},
        {"checkpoint", cfg.checkpoint},
        {"out_dir", cfg.out_dir}}},
      {"ssc",
       {{"blk", cfg.ssc.blk},
        {"c", cfg.ssc.c},
        {"err", cfg.ssc.err},
        {"s_l", cfg.ssc.s_l},
        {"s_u", cfg.ssc.s_u},
        {"margin", cfg.ssc.margin},
        {"dedup_iou", cfg.ssc.dedup_iou}}},
      {"twc",
       {{"slice_width", cfg.slices.width},
        {"along_spacing_m", cfg.slices.along_spacing_m},
        {"cross_spacing_m", cfg.slices.cross_spacing_m}}},
      {"mtm", {{"deviation_bound", cfg.mtm_bound}, {"variance_keep", cfg.mtm_variance}}},
      {"graph",
       {{"candidate", graph_json(cfg.candidate_graph)},
        {"reference", graph_json(cfg.reference_graph)}}},
      {"train",
       {{"lr", tc.lr},
        {"weight_decay", tc.weight_decay},
        {"batch_size", tc.batch_size},
        {"clip_norm", tc.clip_norm},
        {"patience", tc.patience},
        {"max_epochs", tc.max_epochs},
        {"seed", tc.seed},
        {"folds", tc.folds},
        {"val_fraction", tc.val_fraction},
        {"gcn_dropout", tc.gcn_dropout},
        {"mlp_dropout", tc.mlp_dropout},
        {"hidden", tc.dims.hidden},
        {"mlp1", tc.dims.mlp1},
        {"mlp2", tc.dims.mlp2}}},
  };
  return doc.dump(2);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const PipelineConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(dump_config(cfg))));
  return buf;
}

}  // namespace analog
