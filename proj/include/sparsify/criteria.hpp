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

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sparsify/tensor.hpp"

namespace sparsify {

enum class CriterionKind : std::uint8_t {
  kRandom,
  kLargeFinal,
  kMagnitudeIncrease,
  kMovement,
};

/// Importance score computed from the live weights (wf) and the weights at the
/// previous mask update (wi). Higher scores are kept.
struct Criterion {
  CriterionKind kind = CriterionKind::kLargeFinal;

  bool needs_history() const {
    return kind == CriterionKind::kMagnitudeIncrease ||
           kind == CriterionKind::kMovement;
  }
  bool needs_rng() const { return kind == CriterionKind::kRandom; }

  std::string_view name() const {
    switch (kind) {
      case CriterionKind::kRandom: return "random";
      case CriterionKind::kLargeFinal: return "large_final";
      case CriterionKind::kMagnitudeIncrease: return "magnitude_increase";
      case CriterionKind::kMovement: return "movement";
    }
    return "?";
  }

  friend bool operator==(const Criterion&, const Criterion&) = default;
};

inline Criterion parse_criterion(std::string_view name) {
  static constexpr std::array<std::pair<std::string_view, CriterionKind>, 4>
      kNames{{{"random", CriterionKind::kRandom},
              {"large_final", CriterionKind::kLargeFinal},
              {"magnitude_increase", CriterionKind::kMagnitudeIncrease},
              {"movement", CriterionKind::kMovement}}};
  for (const auto& [n, k] : kNames)
    if (n == name) return Criterion{k};
  throw std::invalid_argument("unknown criterion '" + std::string(name) + "'");
}

/// Snapshot of a layer's weights taken at the last mask update.
struct WeightHistory {
  Tensor wi;
  std::uint64_t initialized_at = 0;  // global step of the snapshot
};

inline WeightHistory update_history(const WeightHistory& history,
                                    const Tensor& wf, std::uint64_t step) {
  if (!history.wi.empty() && history.wi.shape() != wf.shape())
    throw std::invalid_argument("update_history: shape " +
                                shape_str(wf.shape()) + " vs history " +
                                shape_str(history.wi.shape()));
  return WeightHistory{wf, step};
}

/// Elementwise scores. `wi` may be null unless the criterion needs history;
/// `rng` may be null unless the criterion is random.
inline Tensor score(const Criterion& criterion, const Tensor& wf,
                    const Tensor* wi, Rng* rng) {
  if (criterion.needs_history()) {
    if (wi == nullptr || wi->empty())
      throw std::invalid_argument("criterion '" +
                                  std::string(criterion.name()) +
                                  "' requires weight history");
    if (wi->shape() != wf.shape())
      throw std::invalid_argument("criterion '" +
                                  std::string(criterion.name()) +
                                  "': history shape mismatch");
  }
  if (criterion.needs_rng() && rng == nullptr)
    throw std::invalid_argument("criterion 'random' requires an rng");

  Tensor s(wf.shape());
  for (std::size_t i = 0; i < wf.size(); ++i) {
    switch (criterion.kind) {
      case CriterionKind::kRandom:
        s[i] = rng->normal();
        break;
      case CriterionKind::kLargeFinal:
        s[i] = std::abs(wf[i]);
        break;
      case CriterionKind::kMagnitudeIncrease:
        s[i] = std::abs(wf[i]) - std::abs((*wi)[i]);
        break;
      case CriterionKind::kMovement:
        s[i] = std::abs(wf[i] - (*wi)[i]);
        break;
    }
  }
  return s;
}

}  // namespace sparsify
