// Copyright 2026 The Sparsify Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsify/sparsifier.hpp"

namespace sparsify {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Invalid configuration or usage; `path` names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string path, const std::string& msg)
      : std::invalid_argument(path + ": " + msg), path(std::move(path)) {}
  std::string path;
};

/// Unreadable or inconsistent checkpoint.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------------------
// Experiment configuration

struct ModelSpec {
  Shape input_shape;
  std::vector<Layer> layers;  // parameters unset until built

  Model build(Rng& rng) const {
    Model m(input_shape, layers);
    m.init(rng);
    return m;
  }
};

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 0;
  ModelSpec model;
  DatasetSpec dataset;
  TrainConfig train;
  SparsifyPlan plan;
  std::string output_dir = "runs";
  json plan_echo;  // the "sparsify" block as given
};

namespace detail {

// Typed field access that reports errors with the field path.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  bool has(const std::string& key) const { return j_.contains(key); }
  const json& raw(const std::string& key) const {
    if (!j_.contains(key)) throw ConfigError(at(key), "missing required field");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) const {
    const json& v = raw(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(at(key), "expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
        if constexpr (std::is_unsigned_v<T>)
          if (v.get<std::int64_t>() < 0) throw ConfigError(at(key), "expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(at(key), "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(at(key), e.what());
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

 private:
  const json& j_;
  std::string path_;
};

template <class Fn>
auto wrap(const std::string& path, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

inline Shape shape_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of sizes");
  Shape s;
  for (const auto& v : j) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0)
      throw ConfigError(path, "sizes must be positive integers");
    s.push_back(v.get<std::size_t>());
  }
  return s;
}

inline ModelSpec parse_model(const json& j, const std::string& path) {
  Fields f(j, path);
  ModelSpec spec;
  spec.input_shape = shape_from(f.raw("input"), f.at("input"));
  const json& layers = f.raw("layers");
  if (!layers.is_array() || layers.empty())
    throw ConfigError(f.at("layers"), "expected a non-empty array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string lp = f.at("layers") + "[" + std::to_string(i) + "]";
    Fields lf(layers[i], lp);
    const auto kind = wrap(lp + ".type", [&] { return parse_layer_kind(lf.get<std::string>("type")); });
    switch (kind) {
      case LayerKind::kDense:
        spec.layers.push_back(Layer::dense(lf.get<std::size_t>("in"), lf.get<std::size_t>("out")));
        break;
      case LayerKind::kConv2d:
        spec.layers.push_back(Layer::conv2d(lf.get<std::size_t>("in"), lf.get<std::size_t>("out"),
                                            lf.get<std::size_t>("kx"), lf.get<std::size_t>("ky")));
        break;
      case LayerKind::kRelu:
        spec.layers.push_back(Layer::relu());
        break;
      case LayerKind::kFlatten:
        spec.layers.push_back(Layer::flatten());
        break;
    }
  }
  wrap(f.at("layers"), [&] { Model(spec.input_shape, spec.layers); });
  return spec;
}

inline ScheduleSpec parse_schedule(const json& j, const std::string& path) {
  if (j.is_string()) return wrap(path, [&] { return parse_schedule_kind(j.get<std::string>()); });
  Fields f(j, path);
  ScheduleSpec s = wrap(f.at("kind"), [&] { return parse_schedule_kind(f.get<std::string>("kind")); });
  s.start_epoch = f.get<int>("start_epoch", 0);
  if (f.has("end_epoch")) s.end_epoch = f.get<int>("end_epoch");
  s.update_frequency = f.get<int>("update_frequency", 1);
  s.n_steps = f.get<int>("n_steps", 5);
  s.alpha = f.get<double>("alpha", 14.0);
  s.beta = f.get<double>("beta", 6.0);
  if (s.n_steps < 1) throw ConfigError(f.at("n_steps"), "must be >= 1");
  if (s.update_frequency < 1) throw ConfigError(f.at("update_frequency"), "must be >= 1");
  if (s.start_epoch < 0) throw ConfigError(f.at("start_epoch"), "must be >= 0");
  return s;
}

inline SparsifyPlan parse_plan(const json& j, const std::string& path) {
  Fields f(j, path);
  SparsifyPlan p;
  const json& sp = f.raw("sparsity");
  const std::string context = f.get<std::string>("context", "local");
  if (sp.is_array()) {
    std::vector<double> list;
    for (const auto& v : sp) {
      if (!v.is_number()) throw ConfigError(f.at("sparsity"), "list entries must be numbers");
      list.push_back(v.get<double>());
    }
    if (context != "local" && context != "per_layer")
      throw ConfigError(f.at("context"), "a per-layer sparsity list requires local context");
    p.context = wrap(f.at("sparsity"), [&] { return ContextSpec::per_layer_list(list); });
    p.sparsity = 0.0;
    for (double v : list) p.sparsity = std::max(p.sparsity, v);
  } else {
    p.sparsity = f.get<double>("sparsity");
    wrap(f.at("sparsity"), [&] { check_sparsity(p.sparsity); });
    p.context = wrap(f.at("context"), [&] { return parse_context(context); });
  }
  p.granularity = f.get<std::string>("granularity", "weight");
  p.criterion = wrap(f.at("criterion"), [&] { return parse_criterion(f.get<std::string>("criterion", "large_final")); });
  p.schedule = f.has("schedule") ? parse_schedule(f.raw("schedule"), f.at("schedule")) : ScheduleSpec{};
  p.schedule.final_sparsity = p.sparsity;
  p.lth = f.get<bool>("lth", false);
  p.rewind_epoch = f.get<int>("rewind_epoch", 0);
  p.reset_end = f.get<bool>("reset_end", false);
  p.save_tickets = f.get<bool>("save_tickets", false);
  return p;
}

}  // namespace detail

/// Parses and validates an experiment; throws ConfigError.
inline ExperimentConfig parse_config(const json& j) {
  detail::Fields f(j, "");
  ExperimentConfig c;
  c.name = f.get<std::string>("name");
  if (c.name.empty() || c.name.find('/') != std::string::npos)
    throw ConfigError("name", "must be a non-empty file-name-safe string");
  c.seed = f.get<std::uint64_t>("seed");
  c.model = detail::parse_model(f.raw("model"), "model");

  detail::Fields df(f.raw("dataset"), "dataset");
  c.dataset.kind = detail::wrap("dataset.kind", [&] { return parse_dataset_kind(df.get<std::string>("kind")); });
  c.dataset.n = df.get<std::size_t>("n", 200);
  c.dataset.separation = df.get<double>("separation", 4.0);
  c.dataset.noise = df.get<double>("noise", 0.1);
  if (c.dataset.n < 2) throw ConfigError("dataset.n", "needs at least 2 samples");

  detail::Fields tf(f.raw("train"), "train");
  c.train.epochs = tf.get<int>("epochs");
  c.train.batch_size = tf.get<std::size_t>("batch_size", 20);
  c.train.learning_rate = tf.get<double>("learning_rate", 0.1);
  c.train.momentum = tf.get<double>("momentum", 0.0);
  detail::wrap("train", [&] { c.train.validate(); });

  c.plan_echo = f.raw("sparsify");
  c.plan = detail::parse_plan(c.plan_echo, "sparsify");
  c.output_dir = f.get<std::string>("output_dir", "runs");

  // Cross-field checks that need the model and run length.
  Model probe(c.model.input_shape, c.model.layers);
  const auto ids = probe.prunable_indices();
  if (ids.empty()) throw ConfigError("model.layers", "no prunable layers");
  for (auto id : ids)
    detail::wrap("sparsify.granularity", [&] {
      parse_granularity(c.plan.granularity, probe.layers()[id].weight.rank());
    });
  if (c.plan.context.kind == ContextKind::kPerLayer &&
      c.plan.context.per_layer.size() != ids.size())
    throw ConfigError("sparsify.sparsity", "per-layer list has " +
                                               std::to_string(c.plan.context.per_layer.size()) +
                                               " entries for " + std::to_string(ids.size()) +
                                               " prunable layers");
  detail::wrap("sparsify.schedule", [&] {
    validate_schedule(c.plan.schedule, static_cast<std::uint64_t>(c.train.epochs));
  });
  if (c.plan.needs_snapshot() &&
      (c.plan.rewind_epoch < 0 || c.plan.rewind_epoch >= c.train.epochs))
    throw ConfigError("sparsify.rewind_epoch", "outside the run");
  if (c.plan.lth && c.plan.rewind_epoch > c.plan.schedule.start_epoch)
    throw ConfigError("sparsify.rewind_epoch", "must not exceed schedule.start_epoch");
  return c;
}

inline json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw CheckpointError(path.string() + ": parse error at byte " +
                          std::to_string(e.byte) + ": " + e.what());
  }
}

inline void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  std::vector<std::optional<Mask>> masks;      // indexed by layer
  std::vector<std::optional<Tensor>> history;  // indexed by layer
  std::optional<Model> rewind_snapshot;
  json plan;  // echo of the plan that produced the masks, or null
  std::vector<MetricRow> metrics_tail;
  json meta = json::object();

  bool has_masks() const {
    for (const auto& m : masks)
      if (m) return true;
    return false;
  }
  bool has_history() const {
    for (const auto& h : history)
      if (h) return true;
    return false;
  }
};

/// Checkpoint of a model with no masks or history.
inline Checkpoint dense_checkpoint(const Model& model) {
  Checkpoint c;
  c.model = model;
  c.masks.resize(model.layers().size());
  c.history.resize(model.layers().size());
  return c;
}

/// Places per-prunable-layer vectors at their layer indices.
template <class T>
std::vector<std::optional<T>> by_layer(const Model& model,
                                       const std::vector<T>& per_prunable) {
  std::vector<std::optional<T>> out(model.layers().size());
  const auto ids = model.prunable_indices();
  for (std::size_t k = 0; k < ids.size() && k < per_prunable.size(); ++k)
    out[ids[k]] = per_prunable[k];
  return out;
}

namespace detail {

inline json tensor_json(const Tensor& t) {
  return json{{"shape", t.shape()}, {"data", t.values()}};
}

inline Tensor tensor_from(const json& j, const std::string& path) {
  try {
    Shape shape = j.at("shape").get<Shape>();
    std::vector<double> data = j.at("data").get<std::vector<double>>();
    return Tensor(std::move(shape), std::move(data));
  } catch (const std::exception& e) {
    throw CheckpointError(path + ": " + e.what());
  }
}

inline json params_json(const Model& m) {
  json layers = json::array();
  for (const auto& l : m.layers()) {
    json lj{{"kind", layer_kind_name(l.kind)}};
    if (l.prunable()) {
      lj["weight"] = tensor_json(l.weight);
      lj["bias"] = tensor_json(l.bias);
    }
    layers.push_back(lj);
  }
  return layers;
}

inline void load_params(Model& m, const json& layers, const std::string& path) {
  if (!layers.is_array() || layers.size() != m.layers().size())
    throw CheckpointError(path + ": layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& l = m.layers()[i];
    if (!l.prunable()) continue;
    const std::string lp = path + "[" + std::to_string(i) + "]";
    if (!layers[i].contains("weight") || !layers[i].contains("bias"))
      throw CheckpointError(lp + ": missing weight or bias");
    Tensor w = tensor_from(layers[i]["weight"], lp + ".weight");
    Tensor b = tensor_from(layers[i]["bias"], lp + ".bias");
    if (w.shape() != l.weight.shape() || b.shape() != l.bias.shape())
      throw CheckpointError(lp + ": parameter shape does not match layer");
    l.weight = std::move(w);
    l.bias = std::move(b);
  }
}

inline json metric_json(const MetricRow& r) {
  return json{{"epoch", r.epoch},
              {"step", r.step},
              {"train_loss", r.train_loss},
              {"train_acc", r.train_acc},
              {"model_sparsity", r.model_sparsity},
              {"target_sparsity", r.target_sparsity}};
}

}  // namespace detail

inline json checkpoint_to_json(const Checkpoint& c) {
  json j;
  j["format_version"] = kCheckpointVersion;
  j["input_shape"] = c.model.input_shape();
  json layers = json::array();
  for (std::size_t i = 0; i < c.model.layers().size(); ++i) {
    const auto& l = c.model.layers()[i];
    json lj{{"kind", layer_kind_name(l.kind)}};
    if (l.prunable()) {
      lj["in"] = l.in;
      lj["out"] = l.out;
      if (l.kind == LayerKind::kConv2d) {
        lj["kx"] = l.kx;
        lj["ky"] = l.ky;
      }
      lj["weight"] = detail::tensor_json(l.weight);
      lj["bias"] = detail::tensor_json(l.bias);
      if (i < c.masks.size() && c.masks[i]) {
        const auto bits = c.masks[i]->bits();
        lj["mask"] = std::vector<int>(bits.begin(), bits.end());
      }
      if (i < c.history.size() && c.history[i])
        lj["history"] = detail::tensor_json(*c.history[i]);
    }
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  j["rewind_snapshot"] =
      c.rewind_snapshot ? detail::params_json(*c.rewind_snapshot) : json(nullptr);
  j["plan"] = c.plan;
  json tail = json::array();
  for (const auto& r : c.metrics_tail) tail.push_back(detail::metric_json(r));
  j["metrics_tail"] = std::move(tail);
  j["meta"] = c.meta;
  return j;
}

inline std::string serialize_checkpoint(const Checkpoint& c) {
  return checkpoint_to_json(c).dump(1) + "\n";
}

/// Rebuilds a checkpoint. Every structural problem is reported with its
/// field path; out-of-range mask values are rejected.
inline Checkpoint checkpoint_from_json(const json& j) {
  auto need = [&](const json& obj, const char* key, const std::string& path) -> const json& {
    if (!obj.is_object() || !obj.contains(key))
      throw CheckpointError(path + ": missing field '" + key + "'");
    return obj.at(key);
  };
  const json& ver = need(j, "format_version", "<root>");
  if (!ver.is_number_integer() || ver.get<int>() != kCheckpointVersion)
    throw CheckpointError("format_version: unsupported checkpoint version " + ver.dump());

  Checkpoint c;
  Shape input;
  try {
    input = need(j, "input_shape", "<root>").get<Shape>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("input_shape: ") + e.what());
  }
  const json& layers = need(j, "layers", "<root>");
  if (!layers.is_array()) throw CheckpointError("layers: expected an array");

  std::vector<Layer> built;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string lp = "layers[" + std::to_string(i) + "]";
    const json& lj = layers[i];
    try {
      const auto kind = parse_layer_kind(need(lj, "kind", lp).get<std::string>());
      if (kind == LayerKind::kDense)
        built.push_back(Layer::dense(need(lj, "in", lp).get<std::size_t>(),
                                     need(lj, "out", lp).get<std::size_t>()));
      else if (kind == LayerKind::kConv2d)
        built.push_back(Layer::conv2d(need(lj, "in", lp).get<std::size_t>(),
                                      need(lj, "out", lp).get<std::size_t>(),
                                      need(lj, "kx", lp).get<std::size_t>(),
                                      need(lj, "ky", lp).get<std::size_t>()));
      else
        built.push_back(kind == LayerKind::kRelu ? Layer::relu() : Layer::flatten());
    } catch (const CheckpointError&) {
      throw;
    } catch (const std::exception& e) {
      throw CheckpointError(lp + ": " + e.what());
    }
  }
  try {
    c.model = Model(input, built);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("layers: ") + e.what());
  }
  detail::load_params(c.model, layers, "layers");

  c.masks.resize(built.size());
  c.history.resize(built.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string lp = "layers[" + std::to_string(i) + "]";
    const auto& l = c.model.layers()[i];
    if (layers[i].contains("mask")) {
      const json& mj = layers[i]["mask"];
      if (!mj.is_array() || mj.size() != l.weight.size())
        throw CheckpointError(lp + ".mask: expected " + std::to_string(l.weight.size()) +
                              " entries");
      std::vector<std::uint8_t> bits;
      bits.reserve(mj.size());
      for (std::size_t k = 0; k < mj.size(); ++k) {
        if (!mj[k].is_number_integer() || (mj[k].get<int>() != 0 && mj[k].get<int>() != 1))
          throw CheckpointError(lp + ".mask[" + std::to_string(k) + "]: value " +
                                mj[k].dump() + " not in {0,1}");
        bits.push_back(static_cast<std::uint8_t>(mj[k].get<int>()));
      }
      c.masks[i] = Mask(l.weight.shape(), std::move(bits));
    }
    if (layers[i].contains("history")) {
      Tensor h = detail::tensor_from(layers[i]["history"], lp + ".history");
      if (h.shape() != l.weight.shape())
        throw CheckpointError(lp + ".history: shape does not match weight");
      c.history[i] = std::move(h);
    }
  }

  if (j.contains("rewind_snapshot") && !j["rewind_snapshot"].is_null()) {
    Model snap = c.model;
    detail::load_params(snap, j["rewind_snapshot"], "rewind_snapshot");
    c.rewind_snapshot = std::move(snap);
  }
  c.plan = j.value("plan", json(nullptr));
  if (j.contains("metrics_tail")) {
    try {
      for (const auto& r : j["metrics_tail"])
        c.metrics_tail.push_back({r.at("epoch").get<int>(), r.at("step").get<std::uint64_t>(),
                                  r.at("train_loss").get<double>(), r.at("train_acc").get<double>(),
                                  r.at("model_sparsity").get<double>(),
                                  r.at("target_sparsity").get<double>()});
    } catch (const json::exception& e) {
      throw CheckpointError(std::string("metrics_tail: ") + e.what());
    }
  }
  c.meta = j.value("meta", json::object());
  return c;
}

inline void save_checkpoint(const fs::path& path, const Checkpoint& c) {
  write_text_file(path, serialize_checkpoint(c));
}

inline Checkpoint load_checkpoint(const fs::path& path) {
  return checkpoint_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// CSV and plots

inline std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string s = "epoch,step,train_loss,train_acc,model_sparsity,target_sparsity\n";
  for (const auto& r : rows)
    s += std::to_string(r.epoch) + "," + std::to_string(r.step) + "," +
         format_double(r.train_loss) + "," + format_double(r.train_acc) + "," +
         format_double(r.model_sparsity) + "," + format_double(r.target_sparsity) + "\n";
  return s;
}

/// round, scheduled sparsity, achieved mask sparsity (percent), accuracy.
inline std::string rounds_csv(const std::vector<Ticket>& tickets) {
  std::string s = "round,sparsity,mask_sparsity,accuracy\n";
  for (const auto& t : tickets)
    s += std::to_string(t.round) + "," + format_double(t.target) + "," +
         format_double(100.0 * t.sparsity) + "," +
         (t.accuracy ? format_double(*t.accuracy) : std::string()) + "\n";
  return s;
}

struct Series {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
};

/// Minimal SVG line chart with axes, ticks and a legend.
inline std::string line_chart_svg(const std::string& title,
                                  const std::string& xlabel,
                                  const std::string& ylabel,
                                  const std::vector<Series>& series) {
  constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 55;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool first = true;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x0 = x1 = s.x[i];
        y0 = y1 = s.y[i];
        first = false;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  y0 = std::min(y0, 0.0);
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  auto num = [](double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
    return std::string(buf, r.ptr);
  };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
       "viewBox=\"0 0 640 400\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + title + "</text>\n";
  s += "<line x1=\"" + num(L) + "\" y1=\"" + num(H - B) + "\" x2=\"" + num(W - R) +
       "\" y2=\"" + num(H - B) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(L) + "\" y1=\"" + num(T) + "\" x2=\"" + num(L) + "\" y2=\"" +
       num(H - B) + "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    s += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(H - B + 16) +
         "\" text-anchor=\"middle\">" + num(xv) + "</text>\n";
    s += "<text x=\"" + num(L - 6) + "\" y=\"" + num(py(yv) + 4) +
         "\" text-anchor=\"end\">" + num(yv) + "</text>\n";
    s += "<line x1=\"" + num(L) + "\" y1=\"" + num(py(yv)) + "\" x2=\"" + num(W - R) +
         "\" y2=\"" + num(py(yv)) + "\" stroke=\"#ddd\"/>\n";
  }
  s += "<text x=\"" + num((L + W - R) / 2) + "\" y=\"" + num(H - 12) +
       "\" text-anchor=\"middle\">" + xlabel + "</text>\n";
  s += "<text x=\"16\" y=\"" + num((T + H - B) / 2) + "\" text-anchor=\"middle\" "
       "transform=\"rotate(-90 16 " + num((T + H - B) / 2) + ")\">" + ylabel + "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& se = series[k];
    s += "<polyline fill=\"none\" stroke=\"" + se.color + "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < se.x.size(); ++i)
      s += (i ? " " : "") + num(px(se.x[i])) + "," + num(py(se.y[i]));
    s += "\"/>\n";
    const double ly = T + 14 + 16.0 * static_cast<double>(k);
    s += "<line x1=\"" + num(W - R - 150) + "\" y1=\"" + num(ly) + "\" x2=\"" +
         num(W - R - 130) + "\" y2=\"" + num(ly) + "\" stroke=\"" + se.color +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(W - R - 125) + "\" y=\"" + num(ly + 4) + "\">" + se.label +
         "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace sparsify
