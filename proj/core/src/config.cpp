#include "vseg/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace vseg {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

class KvReader {
 public:
  KvReader(std::map<std::string, std::string> kv, std::string origin)
      : kv_(std::move(kv)), origin_(std::move(origin)) {}

  bool has(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return false;
    used_.insert(key);
    return true;
  }

  const std::string& raw(const std::string& key) { return kv_.at(key); }

  void get(const std::string& key, int64_t& out) {
    if (!has(key)) return;
    try {
      size_t pos = 0;
      out = std::stoll(raw(key), &pos);
      if (pos != raw(key).size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail(key, "integer");
    }
  }

  void get(const std::string& key, double& out) {
    if (!has(key)) return;
    try {
      size_t pos = 0;
      out = std::stod(raw(key), &pos);
      if (pos != raw(key).size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail(key, "number");
    }
  }

  void get(const std::string& key, bool& out) {
    if (!has(key)) return;
    const std::string& v = raw(key);
    if (v == "true" || v == "1")
      out = true;
    else if (v == "false" || v == "0")
      out = false;
    else
      fail(key, "boolean (true|false|1|0)");
  }

  void get(const std::string& key, uint64_t& out) {
    if (!has(key)) return;
    try {
      out = std::stoull(raw(key));
    } catch (const std::exception&) {
      fail(key, "unsigned integer");
    }
  }

  void get(const std::string& key, int32_t& out) {
    int64_t v = out;
    get(key, v);
    out = static_cast<int32_t>(v);
  }

  template <typename T, typename Fn>
  void get_parsed(const std::string& key, T& out, Fn parse) {
    if (!has(key)) return;
    out = parse(raw(key));
  }

  template <typename T, typename Fn>
  void get_list(const std::string& key, std::vector<T>& out, Fn parse) {
    if (!has(key)) return;
    std::vector<T> vals;
    for (const std::string& item : split(raw(key), ','))
      if (!item.empty()) vals.push_back(parse(item));
    if (vals.empty()) fail(key, "nonempty comma-separated list");
    out = std::move(vals);
  }

  void finish() const {
    std::vector<std::string> unknown;
    for (const auto& [k, v] : kv_)
      if (!used_.count(k)) unknown.push_back(k);
    if (!unknown.empty()) {
      std::string msg = "config " + origin_ + ": unknown key(s):";
      for (const std::string& k : unknown) msg += " '" + k + "'";
      throw std::invalid_argument(msg);
    }
  }

 private:
  [[noreturn]] void fail(const std::string& key, const std::string& want) {
    throw std::invalid_argument("config " + origin_ + ": key '" + key + "' expects " + want +
                                ", got '" + raw(key) + "'");
  }

  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
  std::string origin_;
};

}  // namespace

FullConfig parse_config_text(const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config " + origin + ":" + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config " + origin + ":" + std::to_string(lineno) +
                                  ": empty key");
    if (kv.count(key))
      throw std::invalid_argument("config " + origin + ": duplicate key '" + key + "'");
    kv.emplace(key, value);
  }

  FullConfig cfg;
  KvReader r(std::move(kv), origin);

  r.get("data.h", cfg.data.h);
  r.get("data.w", cfg.data.w);
  r.get("data.frames", cfg.data.frames);
  r.get("data.num_objects", cfg.data.num_objects);
  r.get("data.num_classes", cfg.data.num_classes);
  r.get("data.velocity_max", cfg.data.velocity_max);
  r.get("data.pan_x", cfg.data.pan_x);
  r.get("data.pan_y", cfg.data.pan_y);
  r.get("data.spawn_prob", cfg.data.spawn_prob);
  r.get("data.texture_amp", cfg.data.texture_amp);
  r.get("data.obj_min_size", cfg.data.obj_min_size);
  r.get("data.obj_max_size", cfg.data.obj_max_size);
  r.get("data.seed", cfg.data.seed);
  r.get("data.train_clips", cfg.train_clips);
  r.get("data.val_clips", cfg.val_clips);

  r.get("net.num_classes", cfg.net.num_classes);
  r.get("net.feature_channels", cfg.net.feature_channels);
  r.get("net.feature_stride", cfg.net.feature_stride);
  r.get_parsed("net.update_depth", cfg.net.update_depth, depth_from_name);
  r.get_parsed("net.reference_depth", cfg.net.reference_depth, depth_from_name);
  r.get_parsed("net.fusion_location", cfg.net.fusion_location, fusion_location_from_name);

  r.get("pipeline.keyframe_interval", cfg.pipeline.keyframe_interval);
  r.get_parsed("pipeline.mode", cfg.pipeline.mode, mode_from_name);
  r.get_parsed("pipeline.flow_source", cfg.pipeline.flow_source, flow_source_from_name);
  r.get("pipeline.first_keyframe", cfg.pipeline.first_keyframe);

  r.get("train.keyframe_interval", cfg.train.keyframe_interval);
  r.get("train.epochs", cfg.train.epochs);
  r.get("train.phase1_fraction", cfg.train.phase1_fraction);
  r.get("train.lr", cfg.train.lr);
  r.get("train.momentum", cfg.train.momentum);
  r.get("train.clip_norm", cfg.train.clip_norm);
  r.get_parsed("train.flow_source", cfg.train.flow_source, flow_source_from_name);
  r.get("train.flow_trainable_phase2", cfg.train.flow_trainable_phase2);
  r.get("train.ref_feat_trainable_phase2", cfg.train.ref_feat_trainable_phase2);
  r.get("train.log_wall_time", cfg.train.log_wall_time);
  r.get("train.labeled_index", cfg.train.labeled_index);
  r.get("train.val_clips", cfg.train.val_clips);
  r.get("train.ignore_label", cfg.train.ignore_label);
  r.get("train.seed", cfg.train.seed);
  r.get("train.pretrain_epochs", cfg.train.pretrain_epochs);
  r.get("train.pretrain_lr", cfg.train.pretrain_lr);
  r.get("train.pretrain_momentum", cfg.train.pretrain_momentum);

  r.get("bench.labeled_index", cfg.bench.labeled_index);
  r.get("bench.dense", cfg.bench.dense);
  r.get("bench.rotate", cfg.bench.rotate);
  r.get("bench.fixed_offset", cfg.bench.fixed_offset);
  r.get("bench.deterministic_output", cfg.bench.deterministic_output);
  r.get("bench.ablate_offset", cfg.bench.ablate_offset);
  r.get_list("bench.sweep_intervals", cfg.bench.sweep_intervals,
             [](const std::string& s) { return std::stoll(s); });
  r.get_list("bench.sweep_depths", cfg.bench.sweep_depths, depth_from_name);
  r.get_list("bench.sweep_modes", cfg.bench.sweep_modes, mode_from_name);

  r.finish();
  return cfg;
}

FullConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse_config_text(text, path);
}

}  // namespace vseg
