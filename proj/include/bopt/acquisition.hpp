/*
 * Copyright 2026 The bopt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "bopt/gp.hpp"

namespace bopt {

enum class AcquisitionKind { PI, EI, UCB };

const char* to_string(AcquisitionKind kind) noexcept;
AcquisitionKind acquisition_kind_from_string(const std::string& name);

struct AcquisitionSpec {
  AcquisitionKind kind = AcquisitionKind::EI;
  /// PI/EI trade-off in output units. Unset means 0.01 * signal variance.
  std::optional<double> xi;
  double nu = 1.0;
  double delta = 0.1;
  std::size_t iteration = 1;
  std::size_t dim = 1;

  void validate() const;
  double xi_for(const KernelSpec& kernel) const {
    return xi.value_or(0.01 * kernel.signal_variance);
  }
};

struct Incumbent {
  Point location;
  double value = 0.0;
  std::size_t index = 0;
};

double probability_of_improvement(const PosteriorSummary& post, const Incumbent& inc, double xi);
double expected_improvement(const PosteriorSummary& post, const Incumbent& inc, double xi);

/// tau_t = 2 log(t^(d/2+2) pi^2 / (3 delta)), clamped at 0.
double ucb_tau(std::size_t iteration, std::size_t dim, double delta);
double gp_ucb(const PosteriorSummary& post, const AcquisitionSpec& spec);

/// Evaluates the configured acquisition at one posterior.
double acquisition_value(const AcquisitionSpec& spec, const KernelSpec& kernel,
                         const PosteriorSummary& post, const Incumbent& inc);

/// Best observed y (noise-free) or best posterior mean at the sampled points
/// (noisy). Ties go to the lowest index.
Incumbent select_incumbent(const ObservationSet& data, const KernelSpec& model, bool noisy);

}  // namespace bopt
