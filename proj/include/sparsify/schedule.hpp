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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sparsify {

enum class ScheduleKind { kOneShot, kIterative, kGradual, kOneCycle, kDsd, kCustom };

/// Custom schedule body: (final sparsity, t in [0,1]) -> sparsity percent.
using ScheduleFn = std::function<double(double, double)>;

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::kOneShot;
  double final_sparsity = 0.0;
  int start_epoch = 0;
  std::optional<int> end_epoch;  // defaults to the total epoch count
  int update_frequency = 1;      // mask updates per epoch
  int n_steps = 5;
  double alpha = 14.0;
  double beta = 6.0;
  std::string custom_name;
  ScheduleFn custom;

  std::string name() const;
};

/// Position in training, counted in optimizer steps.
struct ProgressClock {
  std::uint64_t current_step = 0;
  std::uint64_t steps_per_epoch = 1;
  std::uint64_t total_epochs = 1;

  std::uint64_t total_steps() const { return steps_per_epoch * total_epochs; }
};

inline double eval_schedule(const ScheduleSpec& spec, double s, double t) {
  switch (spec.kind) {
    case ScheduleKind::kOneShot:
      return s;
    case ScheduleKind::kIterative: {
      const double n = spec.n_steps;
      return (s / n) * std::ceil(t * n);
    }
    case ScheduleKind::kGradual: {
      const double r = 1.0 - t;
      return s * (1.0 - r * r * r);
    }
    case ScheduleKind::kOneCycle:
      return s * (1.0 + std::exp(-spec.alpha + spec.beta)) /
             (1.0 + std::exp(-spec.alpha * t + spec.beta));
    case ScheduleKind::kDsd:
      return s * (1.0 - std::cos(2.0 * std::numbers::pi * t)) / 2.0;
    case ScheduleKind::kCustom:
      if (!spec.custom)
        throw std::logic_error("custom schedule '" + spec.custom_name +
                               "' has no function");
      return spec.custom(s, t);
  }
  return 0.0;
}

inline double eval_schedule(const ScheduleSpec& spec, double t) {
  return eval_schedule(spec, spec.final_sparsity, t);
}

/// Registry of user schedules; built-in kinds are resolved before it.
class ScheduleRegistry {
 public:
  static constexpr std::array<double, 5> kProbePoints{0.0, 0.25, 0.5, 0.75, 1.0};

  ScheduleRegistry() {
    // Formulas exactly as printed in the original pseudo-code: the first
    // decays from s to 0, the second rises twice.
    add("gradual_printed", [](double s, double t) {
      const double r = 1.0 - t;
      return s * r * r * r;
    });
    add("dsd_printed", [](double s, double t) {
      const double c = std::cos(std::numbers::pi * (1.0 - t * 2.0));
      return t < 0.5 ? (1.0 + c) * s / 2.0 : (1.0 - c) * s / 2.0;
    });
  }

  /// Rejects functions leaving [0,100] at the probe points.
  void add(const std::string& name, ScheduleFn fn) {
    if (!fn) throw std::invalid_argument("schedule '" + name + "' is empty");
    for (double s : {0.0, 50.0, 100.0})
      for (double t : kProbePoints) {
        const double v = fn(s, t);
        if (!(v >= 0.0 && v <= 100.0))
          throw std::invalid_argument(
              "schedule '" + name + "' returns " + std::to_string(v) +
              " at s=" + std::to_string(s) + ", t=" + std::to_string(t) +
              "; expected a value in [0,100]");
      }
    std::lock_guard lock(mu_);
    fns_[name] = std::move(fn);
  }

  std::optional<ScheduleFn> find(const std::string& name) const {
    std::lock_guard lock(mu_);
    auto it = fns_.find(name);
    if (it == fns_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> names() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [k, _] : fns_) out.push_back(k);
    return out;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, ScheduleFn> fns_;
};

inline ScheduleRegistry& schedule_registry() {
  static ScheduleRegistry registry;
  return registry;
}

/// Registers `f` and returns a spec of the new kind.
inline ScheduleSpec register_custom_schedule(const std::string& name,
                                             ScheduleFn f) {
  schedule_registry().add(name, f);
  ScheduleSpec spec;
  spec.kind = ScheduleKind::kCustom;
  spec.custom_name = name;
  spec.custom = std::move(f);
  return spec;
}

/// Resolves a schedule name to a spec (parameters left at their defaults).
inline ScheduleSpec parse_schedule_kind(std::string_view name) {
  ScheduleSpec spec;
  if (name == "one_shot") spec.kind = ScheduleKind::kOneShot;
  else if (name == "iterative") spec.kind = ScheduleKind::kIterative;
  else if (name == "gradual") spec.kind = ScheduleKind::kGradual;
  else if (name == "one_cycle") spec.kind = ScheduleKind::kOneCycle;
  else if (name == "dsd") spec.kind = ScheduleKind::kDsd;
  else if (auto fn = schedule_registry().find(std::string(name))) {
    spec.kind = ScheduleKind::kCustom;
    spec.custom_name = std::string(name);
    spec.custom = *fn;
  } else {
    throw std::invalid_argument("unknown schedule '" + std::string(name) + "'");
  }
  return spec;
}

inline std::string ScheduleSpec::name() const {
  switch (kind) {
    case ScheduleKind::kOneShot: return "one_shot";
    case ScheduleKind::kIterative: return "iterative";
    case ScheduleKind::kGradual: return "gradual";
    case ScheduleKind::kOneCycle: return "one_cycle";
    case ScheduleKind::kDsd: return "dsd";
    case ScheduleKind::kCustom: return custom_name;
  }
  return "?";
}

inline int window_end(const ScheduleSpec& spec, std::uint64_t total_epochs) {
  return spec.end_epoch.value_or(static_cast<int>(total_epochs));
}

/// Checks the spec against a run length; throws std::invalid_argument.
inline void validate_schedule(const ScheduleSpec& spec,
                              std::uint64_t total_epochs) {
  const int end = window_end(spec, total_epochs);
  if (!(spec.final_sparsity >= 0.0 && spec.final_sparsity <= 100.0))
    throw std::invalid_argument("final sparsity outside [0,100]");
  if (spec.start_epoch < 0)
    throw std::invalid_argument("start_epoch must be >= 0");
  if (end > static_cast<int>(total_epochs))
    throw std::invalid_argument("end_epoch " + std::to_string(end) +
                                " exceeds total epochs " +
                                std::to_string(total_epochs));
  if (spec.start_epoch >= end)
    throw std::invalid_argument("pruning window is empty: start_epoch " +
                                std::to_string(spec.start_epoch) +
                                " >= end_epoch " + std::to_string(end));
  if (spec.n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  if (spec.update_frequency < 1)
    throw std::invalid_argument("update_frequency must be >= 1");
  if (spec.kind == ScheduleKind::kCustom && !spec.custom)
    throw std::invalid_argument("custom schedule has no function");
}

struct Window {
  std::uint64_t start_step;
  std::uint64_t end_step;
};

inline Window window_steps(const ProgressClock& clock,
                           const ScheduleSpec& spec) {
  const auto end = static_cast<std::uint64_t>(window_end(spec, clock.total_epochs));
  Window w{static_cast<std::uint64_t>(spec.start_epoch) * clock.steps_per_epoch,
           end * clock.steps_per_epoch};
  if (w.end_step <= w.start_step)
    throw std::invalid_argument("degenerate pruning window");
  return w;
}

inline double normalized_t_at(std::uint64_t step, const ProgressClock& clock,
                              const ScheduleSpec& spec) {
  const auto w = window_steps(clock, spec);
  if (step <= w.start_step) return 0.0;
  if (step >= w.end_step) return 1.0;
  return static_cast<double>(step - w.start_step) /
         static_cast<double>(w.end_step - w.start_step);
}

inline double normalized_t(const ProgressClock& clock,
                           const ScheduleSpec& spec) {
  return normalized_t_at(clock.current_step, clock, spec);
}

/// 0 before the window, the schedule inside it, held at t=1 afterwards.
inline double current_target(const ProgressClock& clock,
                             const ScheduleSpec& spec, double s) {
  const auto w = window_steps(clock, spec);
  if (clock.current_step < w.start_step) return 0.0;
  return eval_schedule(spec, s, normalized_t(clock, spec));
}

inline double current_target(const ProgressClock& clock,
                             const ScheduleSpec& spec) {
  return current_target(clock, spec, spec.final_sparsity);
}

/// Steps between mask updates inside the window.
inline std::uint64_t update_interval(const ProgressClock& clock,
                                     const ScheduleSpec& spec) {
  return std::max<std::uint64_t>(
      1, clock.steps_per_epoch / static_cast<std::uint64_t>(spec.update_frequency));
}

/// Mask updates happen at step boundaries start, start + k*interval, ..., and
/// always at the window end.
inline bool is_update_step(std::uint64_t step, const ProgressClock& clock,
                           const ScheduleSpec& spec) {
  const auto w = window_steps(clock, spec);
  if (step < w.start_step || step > w.end_step) return false;
  if (step == w.end_step) return true;
  return (step - w.start_step) % update_interval(clock, spec) == 0;
}

/// Most recent update boundary at or before `step`, if any.
inline std::optional<std::uint64_t> last_update_step(
    std::uint64_t step, const ProgressClock& clock, const ScheduleSpec& spec) {
  const auto w = window_steps(clock, spec);
  if (step < w.start_step) return std::nullopt;
  if (step >= w.end_step) return w.end_step;
  const auto iv = update_interval(clock, spec);
  return w.start_step + ((step - w.start_step) / iv) * iv;
}

}  // namespace sparsify
