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
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparsify/criteria.hpp"
#include "sparsify/granularity.hpp"
#include "sparsify/schedule.hpp"
#include "sparsify/selection.hpp"
#include "sparsify/train.hpp"

namespace sparsify {

/// Everything needed to describe a sparsification run.
struct SparsifyPlan {
  double sparsity = 50.0;  // final target; per-layer targets live in context
  std::string granularity = "weight";
  ContextSpec context;
  Criterion criterion;
  ScheduleSpec schedule;
  bool lth = false;
  int rewind_epoch = 0;
  bool reset_end = false;
  bool save_tickets = false;
  std::uint64_t seed = 0;  // stream for the random criterion

  bool needs_snapshot() const { return lth || reset_end; }
};

/// Scores and partition for one prunable layer.
inline LayerScores layer_scores(const Layer& layer, std::size_t layer_id,
                                const std::string& granularity,
                                const Criterion& criterion,
                                const Tensor* history, Rng* rng) {
  if (!layer.prunable())
    throw std::invalid_argument("layer " + std::to_string(layer_id) + " (" +
                                std::string(layer_kind_name(layer.kind)) +
                                ") has no prunable weights");
  const auto spec = parse_granularity(granularity, layer.weight.rank());
  LayerScores ls{layer_id, enumerate_blocks(spec, layer.weight.shape()), {}};
  ls.block_scores =
      aggregate_scores(score(criterion, layer.weight, history, rng), ls.partition);
  return ls;
}

/// Masks for the given layers. `targets` holds one percentage per layer for
/// the per-layer context and a single value otherwise. `histories`, when
/// given, is indexed like `layer_ids`.
inline std::vector<Mask> compute_masks(const Model& model,
                                       const std::vector<std::size_t>& layer_ids,
                                       const std::string& granularity,
                                       const ContextSpec& context,
                                       const std::vector<double>& targets,
                                       const Criterion& criterion,
                                       const std::vector<Tensor>* histories,
                                       Rng* rng) {
  if (layer_ids.empty()) throw std::invalid_argument("no prunable layers");
  if (histories && histories->size() != layer_ids.size())
    throw std::invalid_argument("history count does not match layer count");
  std::vector<LayerScores> scores;
  scores.reserve(layer_ids.size());
  for (std::size_t k = 0; k < layer_ids.size(); ++k) {
    const auto id = layer_ids[k];
    if (id >= model.layers().size())
      throw std::invalid_argument("layer index " + std::to_string(id) +
                                  " out of range");
    scores.push_back(layer_scores(model.layers()[id], id, granularity,
                                  criterion,
                                  histories ? &(*histories)[k] : nullptr, rng));
  }
  switch (context.kind) {
    case ContextKind::kLocal:
      return select_local(scores, targets.at(0));
    case ContextKind::kGlobal:
      return select_global(scores, targets.at(0));
    case ContextKind::kPerLayer:
      return select_per_layer(scores, targets);
  }
  return {};
}

/// Prunes one layer in place and returns its mask.
inline Mask prune_layer(Layer& layer, double sparsity,
                        const std::string& granularity,
                        const Criterion& criterion, Rng* rng,
                        const Tensor* history = nullptr) {
  auto ls = layer_scores(layer, 0, granularity, criterion, history, rng);
  Mask m = select_local({ls}, sparsity).front();
  apply_mask_inplace(layer.weight, m);
  return m;
}

/// Per-layer targets for a given overall target.
inline std::vector<double> context_targets(const ContextSpec& context,
                                           double sparsity) {
  if (context.kind == ContextKind::kPerLayer) return context.per_layer;
  return {sparsity};
}

/// Prunes every prunable layer in place under the plan's granularity,
/// context and criterion at `plan.sparsity` (per-layer context uses its own
/// list).
inline std::vector<Mask> prune_model(Model& model, const SparsifyPlan& plan,
                                     Rng& rng,
                                     const std::vector<Tensor>* histories = nullptr) {
  const auto ids = model.prunable_indices();
  if (plan.context.kind == ContextKind::kPerLayer &&
      plan.context.per_layer.size() != ids.size())
    throw std::invalid_argument(
        "per-layer sparsity list has " +
        std::to_string(plan.context.per_layer.size()) + " entries for " +
        std::to_string(ids.size()) + " prunable layers");
  auto masks = compute_masks(model, ids, plan.granularity, plan.context,
                             context_targets(plan.context, plan.sparsity),
                             plan.criterion, histories, &rng);
  for (std::size_t k = 0; k < ids.size(); ++k)
    apply_mask_inplace(model.layers()[ids[k]].weight, masks[k]);
  return masks;
}

/// Static sparsifier bound to one model.
///
///   Sparsifier sp(model, "filter", ContextSpec::global(), {CriterionKind::kLargeFinal});
///   sp.prune_model(50);
class Sparsifier {
 public:
  Sparsifier(Model& model, std::string granularity, ContextSpec context,
             Criterion criterion, std::uint64_t seed = 0)
      : model_(model), rng_(seed) {
    plan_.granularity = std::move(granularity);
    plan_.context = std::move(context);
    plan_.criterion = criterion;
  }

  /// Weight history for history-based criteria, one tensor per prunable layer.
  void set_history(std::vector<Tensor> history) { history_ = std::move(history); }

  Mask prune_layer(std::size_t layer_index, double sparsity) {
    if (layer_index >= model_.layers().size())
      throw std::invalid_argument("layer index out of range");
    const Tensor* h = nullptr;
    if (!history_.empty()) {
      const auto ids = model_.prunable_indices();
      for (std::size_t k = 0; k < ids.size(); ++k)
        if (ids[k] == layer_index) h = &history_[k];
    }
    return sparsify::prune_layer(model_.layers()[layer_index], sparsity,
                                 plan_.granularity, plan_.criterion, &rng_, h);
  }

  std::vector<Mask> prune_model(double sparsity) {
    plan_.sparsity = sparsity;
    return sparsify::prune_model(model_, plan_, rng_,
                                 history_.empty() ? nullptr : &history_);
  }

  Rng& rng() { return rng_; }

 private:
  Model& model_;
  SparsifyPlan plan_;
  Rng rng_;
  std::vector<Tensor> history_;
};

/// Mask lifecycle state owned by a SparsifyCallback.
struct MaskState {
  std::vector<Mask> masks;
  std::vector<WeightHistory> histories;
  std::optional<Model> rewind_snapshot;
  int round_counter = 0;
};

/// One mask recomputation during training.
struct MaskEvent {
  std::uint64_t step = 0;
  double t = 0.0;
  double target = 0.0;
  double sparsity = 0.0;
  std::vector<Mask> masks;
};

/// Winning-ticket candidate saved after a pruning round.
struct Ticket {
  int round = 0;
  std::uint64_t step = 0;
  double target = 0.0;
  double sparsity = 0.0;
  std::vector<Mask> masks;
  Model weights;                    // model right after the round
  std::optional<double> accuracy;   // after the round's training segment
};

/// Dynamic sparsification driven by training events.
///
/// Pruned weights keep receiving gradients; masks are re-applied after every
/// optimizer step. Masks are recomputed from scratch at each update boundary
/// of the schedule window. With `lth`, a round happens only when the target
/// changes, after which surviving weights are rewound to the snapshot taken
/// at the start of `rewind_epoch`.
class SparsifyCallback : public Callback {
 public:
  explicit SparsifyCallback(SparsifyPlan plan)
      : plan_(std::move(plan)), rng_(plan_.seed) {}

  void on_train_begin(TrainState& st) override {
    validate(st);
    ids_ = st.model.prunable_indices();
    state_ = MaskState{};
    events_.clear();
    tickets_.clear();
    last_target_.reset();
    for (auto id : ids_) {
      const auto& w = st.model.layers()[id].weight;
      state_.masks.emplace_back(w.shape(), 1);
      state_.histories.push_back(WeightHistory{w, 0});
    }
    on_boundary(st, 0);
  }

  void on_epoch_begin(TrainState& st) override { publish(st); }

  void on_step_end(TrainState& st) override {
    reapply(st.model);
    on_boundary(st, st.clock.current_step);
  }

  void on_train_end(TrainState& st) override {
    close_ticket(st);
    if (plan_.reset_end) {
      rewind(st.model);
    }
    publish(st);
  }

  const SparsifyPlan& plan() const { return plan_; }
  const MaskState& state() const { return state_; }
  const std::vector<Mask>& masks() const { return state_.masks; }
  const std::vector<MaskEvent>& events() const { return events_; }
  const std::vector<Ticket>& tickets() const { return tickets_; }
  const std::vector<std::size_t>& layer_ids() const { return ids_; }
  double target_in_force() const { return last_target_.value_or(0.0); }

 private:
  void validate(const TrainState& st) const {
    const auto ids = st.model.prunable_indices();
    if (ids.empty()) throw std::invalid_argument("model has no prunable layers");
    check_sparsity(plan_.sparsity);
    if (plan_.context.kind == ContextKind::kPerLayer &&
        plan_.context.per_layer.size() != ids.size())
      throw std::invalid_argument(
          "per-layer sparsity list has " +
          std::to_string(plan_.context.per_layer.size()) + " entries for " +
          std::to_string(ids.size()) + " prunable layers");
    for (auto id : ids)
      parse_granularity(plan_.granularity, st.model.layers()[id].weight.rank());
    validate_schedule(plan_.schedule, st.clock.total_epochs);
    if (plan_.needs_snapshot() &&
        (plan_.rewind_epoch < 0 ||
         plan_.rewind_epoch >= static_cast<int>(st.clock.total_epochs)))
      throw std::invalid_argument("rewind_epoch outside the run");
    if (plan_.lth && plan_.rewind_epoch > plan_.schedule.start_epoch)
      throw std::invalid_argument(
          "rewind_epoch " + std::to_string(plan_.rewind_epoch) +
          " is after the pruning window start " +
          std::to_string(plan_.schedule.start_epoch));
  }

  std::vector<double> targets_at(double t) const {
    if (plan_.context.kind == ContextKind::kPerLayer) {
      std::vector<double> out;
      for (double s : plan_.context.per_layer)
        out.push_back(eval_schedule(plan_.schedule, s, t));
      return out;
    }
    return {eval_schedule(plan_.schedule, plan_.sparsity, t)};
  }

  // Overall target; per-layer targets are weighted by layer size.
  double overall_target(const std::vector<double>& targets,
                        const Model& model) const {
    if (targets.size() == 1) return targets[0];
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < ids_.size(); ++k) {
      const double n = static_cast<double>(model.layers()[ids_[k]].weight.size());
      num += n * targets[k];
      den += n;
    }
    return num / den;
  }

  void reapply(Model& model) const {
    for (std::size_t k = 0; k < ids_.size(); ++k)
      apply_mask_inplace(model.layers()[ids_[k]].weight, state_.masks[k]);
  }

  void rewind(Model& model) const {
    if (!state_.rewind_snapshot)
      throw std::logic_error("no rewind snapshot to reset to");
    model = *state_.rewind_snapshot;
    reapply(model);
  }

  void publish(TrainState& st) const {
    st.model_sparsity = 100.0 * sparsity_of(state_.masks);
    st.target_sparsity = target_in_force();
  }

  void close_ticket(TrainState& st) {
    if (!tickets_.empty() && !tickets_.back().accuracy)
      tickets_.back().accuracy = evaluate(st.model, st.data).accuracy;
  }

  void on_boundary(TrainState& st, std::uint64_t step) {
    const auto spe = st.clock.steps_per_epoch;
    if (plan_.needs_snapshot() && !state_.rewind_snapshot &&
        step == static_cast<std::uint64_t>(plan_.rewind_epoch) * spe)
      state_.rewind_snapshot = st.model;

    ProgressClock clock = st.clock;
    clock.current_step = step;
    if (is_update_step(step, clock, plan_.schedule)) {
      const double t = normalized_t(clock, plan_.schedule);
      const auto targets = targets_at(t);
      const double target = overall_target(targets, st.model);
      const bool changed = !last_target_ || *last_target_ != target;
      if (!plan_.lth || changed) update_masks(st, step, t, targets, target);
    }
    publish(st);
  }

  void update_masks(TrainState& st, std::uint64_t step, double t,
                    const std::vector<double>& targets, double target) {
    const bool is_round = !last_target_ || *last_target_ != target;
    if (is_round) close_ticket(st);

    std::vector<Tensor> wi;
    wi.reserve(state_.histories.size());
    for (const auto& h : state_.histories) wi.push_back(h.wi);
    state_.masks = compute_masks(st.model, ids_, plan_.granularity,
                                 plan_.context, targets, plan_.criterion, &wi,
                                 &rng_);
    reapply(st.model);
    last_target_ = target;

    if (plan_.lth && target > 0.0) rewind(st.model);
    for (std::size_t k = 0; k < ids_.size(); ++k)
      state_.histories[k] = update_history(
          state_.histories[k], st.model.layers()[ids_[k]].weight, step);

    const double sp = sparsity_of(state_.masks);
    events_.push_back({step, t, target, sp, state_.masks});
    if (is_round && target > 0.0) {
      ++state_.round_counter;
      if (plan_.save_tickets)
        tickets_.push_back({state_.round_counter, step, target, sp,
                            state_.masks, st.model, std::nullopt});
    }
  }

  SparsifyPlan plan_;
  Rng rng_;
  std::vector<std::size_t> ids_;
  MaskState state_;
  std::vector<MaskEvent> events_;
  std::vector<Ticket> tickets_;
  std::optional<double> last_target_;
};

struct LthResult {
  FitResult fit;
  std::vector<Ticket> tickets;
  MaskState state;
  std::vector<MaskEvent> events;
};

/// Lottery-ticket experiment: train with rewinding after every pruning round
/// and keep a ticket per round. rewind_epoch 0 rewinds to initialization.
inline LthResult run_lth(Model& model, const Dataset& data,
                         const TrainConfig& config, SparsifyPlan plan,
                         CallbackHooks hooks = {}) {
  if (!plan.lth) throw std::invalid_argument("run_lth requires lth = true");
  if (plan.rewind_epoch > plan.schedule.start_epoch)
    throw std::invalid_argument("rewind_epoch must not exceed start_epoch");
  plan.save_tickets = true;
  SparsifyCallback cb(std::move(plan));
  hooks.subscribe(cb);
  LthResult r;
  r.fit = fit(model, data, config, hooks);
  r.tickets = cb.tickets();
  r.state = cb.state();
  r.events = cb.events();
  return r;
}

}  // namespace sparsify
