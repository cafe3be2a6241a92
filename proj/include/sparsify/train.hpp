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

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sparsify/data.hpp"
#include "sparsify/model.hpp"
#include "sparsify/schedule.hpp"

namespace sparsify {

struct TrainConfig {
  int epochs = 10;
  std::size_t batch_size = 20;
  double learning_rate = 0.1;
  double momentum = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs <= 0) throw std::invalid_argument("epochs must be positive");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0))
      throw std::invalid_argument("momentum must be in [0,1)");
  }
};

/// One row per optimizer step.
struct MetricRow {
  int epoch = 0;
  std::uint64_t step = 0;  // global step count after this step, 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double model_sparsity = 0.0;   // percent
  double target_sparsity = 0.0;  // percent
};

/// Full-dataset metrics measured after each epoch's hooks have run.
struct EpochSummary {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double model_sparsity = 0.0;  // percent
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

inline Evaluation evaluate(const Model& model, const Dataset& data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto [x, y] = gather(data, idx);
  std::size_t correct = 0;
  const double loss = cross_entropy(forward(model, x), y, nullptr, &correct);
  return {loss, static_cast<double>(correct) / static_cast<double>(y.size())};
}

/// Fraction of exactly-zero weights over all prunable layers.
inline double zero_weight_fraction(const Model& model) {
  std::size_t zeros = 0, total = 0;
  for (const auto& l : model.layers()) {
    if (!l.prunable()) continue;
    for (double v : l.weight.data()) zeros += (v == 0.0);
    total += l.weight.size();
  }
  return total ? static_cast<double>(zeros) / static_cast<double>(total) : 0.0;
}

/// Mutable view of a running fit handed to every hook.
struct TrainState {
  Model& model;
  const Dataset& data;
  const TrainConfig& config;
  ProgressClock clock;  // current_step = completed optimizer steps
  int epoch = 0;
  double batch_loss = 0.0;
  double batch_acc = 0.0;
  // Percentages. Filled by sparsity-aware subscribers; otherwise model
  // sparsity is derived from the weights and the target is 0.
  std::optional<double> model_sparsity;
  std::optional<double> target_sparsity;
};

using Hook = std::function<void(TrainState&)>;

/// Subscriber base; override the events of interest.
class Callback {
 public:
  virtual ~Callback() = default;
  virtual void on_train_begin(TrainState&) {}
  virtual void on_epoch_begin(TrainState&) {}
  virtual void on_step_end(TrainState&) {}
  virtual void on_epoch_end(TrainState&) {}
  virtual void on_train_end(TrainState&) {}
};

/// Ordered subscriber lists per training event. Each list fires in
/// registration order, once per event.
struct CallbackHooks {
  std::vector<Hook> on_train_begin;
  std::vector<Hook> on_epoch_begin;
  std::vector<Hook> on_step_end;
  std::vector<Hook> on_epoch_end;
  std::vector<Hook> on_train_end;

  /// The callback must outlive the fit it is used in.
  CallbackHooks& subscribe(Callback& cb) {
    on_train_begin.push_back([&cb](TrainState& s) { cb.on_train_begin(s); });
    on_epoch_begin.push_back([&cb](TrainState& s) { cb.on_epoch_begin(s); });
    on_step_end.push_back([&cb](TrainState& s) { cb.on_step_end(s); });
    on_epoch_end.push_back([&cb](TrainState& s) { cb.on_epoch_end(s); });
    on_train_end.push_back([&cb](TrainState& s) { cb.on_train_end(s); });
    return *this;
  }

  static void fire(const std::vector<Hook>& hooks, TrainState& s) {
    for (const auto& h : hooks) h(s);
  }
};

struct FitResult {
  std::vector<MetricRow> metrics;
  std::vector<EpochSummary> epochs;
  Evaluation final_eval;
};

/// Thrown when a hook fails; carries the model and log at the point of
/// failure so the caller can persist them.
class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, Model model, FitResult partial)
      : std::runtime_error(what),
        model(std::move(model)),
        partial(std::move(partial)) {}
  Model model;
  FitResult partial;
};

inline std::uint64_t steps_per_epoch(std::size_t n, std::size_t batch) {
  return (n + batch - 1) / batch;
}

/// Mini-batch SGD over `data`. Sample order is reshuffled per epoch from a
/// stream derived from config.seed, so equal seeds give identical runs.
inline FitResult fit(Model& model, const Dataset& data,
                     const TrainConfig& config, const CallbackHooks& hooks = {}) {
  config.validate();
  if (data.size() == 0) throw std::invalid_argument("empty dataset");
  const auto spe = steps_per_epoch(data.size(), config.batch_size);
  TrainState st{model, data, config,
                ProgressClock{0, spe, static_cast<std::uint64_t>(config.epochs)},
                0, 0.0, 0.0, std::nullopt, std::nullopt};
  Sgd opt(config.learning_rate, config.momentum);
  FitResult res;
  const Rng root(config.seed);

  auto sparsity_now = [&] {
    return st.model_sparsity.value_or(100.0 * zero_weight_fraction(model));
  };

  try {
    CallbackHooks::fire(hooks.on_train_begin, st);
    for (int e = 0; e < config.epochs; ++e) {
      st.epoch = e;
      CallbackHooks::fire(hooks.on_epoch_begin, st);

      std::vector<std::size_t> order(data.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng shuffle = root.split(1000 + static_cast<std::uint64_t>(e));
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[shuffle.below(i)]);

      for (std::size_t b = 0; b < spe; ++b) {
        const std::size_t lo = b * config.batch_size;
        const std::size_t hi = std::min(order.size(), lo + config.batch_size);
        auto [x, y] = gather(
            data, std::span<const std::size_t>(order.data() + lo, hi - lo));
        const Gradients g = backward(model, x, y);
        opt.step(model, g);
        ++st.clock.current_step;
        st.batch_loss = g.loss;
        st.batch_acc = g.accuracy;
        CallbackHooks::fire(hooks.on_step_end, st);
        res.metrics.push_back({e, st.clock.current_step, g.loss, g.accuracy,
                               sparsity_now(), st.target_sparsity.value_or(0.0)});
      }
      CallbackHooks::fire(hooks.on_epoch_end, st);
      const auto ev = evaluate(model, data);
      res.epochs.push_back({e, ev.loss, ev.accuracy, sparsity_now()});
    }
    CallbackHooks::fire(hooks.on_train_end, st);
  } catch (const std::exception& ex) {
    throw TrainingAborted(std::string("training aborted at step ") +
                              std::to_string(st.clock.current_step) + ": " +
                              ex.what(),
                          model, res);
  }
  res.final_eval = evaluate(model, data);
  return res;
}

}  // namespace sparsify
