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

#include "bopt/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bopt/error.hpp"
#include "bopt/normal.hpp"

namespace bopt {

const char* to_string(AcquisitionKind kind) noexcept {
  switch (kind) {
    case AcquisitionKind::PI: return "pi";
    case AcquisitionKind::EI: return "ei";
    case AcquisitionKind::UCB: return "ucb";
  }
  return "unknown";
}

AcquisitionKind acquisition_kind_from_string(const std::string& name) {
  if (name == "pi" || name == "PI") return AcquisitionKind::PI;
  if (name == "ei" || name == "EI") return AcquisitionKind::EI;
  if (name == "ucb" || name == "UCB" || name == "gp-ucb") return AcquisitionKind::UCB;
  throw_invalid("unknown acquisition '" + name + "'", "acquisition.kind");
}

void AcquisitionSpec::validate() const {
  if (xi && !(*xi >= 0.0)) throw_invalid("xi must be non-negative", "acquisition.xi");
  if (!(nu > 0.0)) throw_invalid("nu must be positive", "acquisition.nu");
  if (!(delta > 0.0 && delta < 1.0)) throw_invalid("delta must lie in (0, 1)", "acquisition.delta");
  if (iteration < 1) throw_invalid("iteration must be at least 1", "acquisition.iteration");
  if (dim < 1) throw_invalid("dimension must be at least 1", "acquisition.dim");
}

double probability_of_improvement(const PosteriorSummary& post, const Incumbent& inc, double xi) {
  const double improvement = post.mean - inc.value - xi;
  const double sigma = post.stddev();
  if (sigma <= 0.0) return improvement > 0.0 ? 1.0 : 0.0;
  return normal_cdf(improvement / sigma);
}

double expected_improvement(const PosteriorSummary& post, const Incumbent& inc, double xi) {
  const double sigma = post.stddev();
  if (sigma <= 0.0) return 0.0;
  const double improvement = post.mean - inc.value - xi;
  const double z = improvement / sigma;
  return std::max(0.0, improvement * normal_cdf(z) + sigma * normal_pdf(z));
}

double ucb_tau(std::size_t iteration, std::size_t dim, double delta) {
  const double t = static_cast<double>(iteration);
  const double d = static_cast<double>(dim);
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const double tau = 2.0 * ((d / 2.0 + 2.0) * std::log(t) + std::log(pi2 / (3.0 * delta)));
  return std::max(tau, 0.0);
}

double gp_ucb(const PosteriorSummary& post, const AcquisitionSpec& spec) {
  const double kappa = std::sqrt(spec.nu * ucb_tau(spec.iteration, spec.dim, spec.delta));
  return post.mean + kappa * post.stddev();
}

double acquisition_value(const AcquisitionSpec& spec, const KernelSpec& kernel,
                         const PosteriorSummary& post, const Incumbent& inc) {
  switch (spec.kind) {
    case AcquisitionKind::PI: return probability_of_improvement(post, inc, spec.xi_for(kernel));
    case AcquisitionKind::EI: return expected_improvement(post, inc, spec.xi_for(kernel));
    case AcquisitionKind::UCB: return gp_ucb(post, spec);
  }
  return 0.0;
}

Incumbent select_incumbent(const ObservationSet& data, const KernelSpec& model, bool noisy) {
  if (data.empty()) throw_invalid("incumbent needs at least one observation");
  std::vector<double> scores = data.values;
  if (noisy) {
    const GaussianProcess gp(model, data);
    for (std::size_t i = 0; i < data.size(); ++i) scores[i] = gp.predict(data.points[i]).mean;
  }
  const auto it = std::max_element(scores.begin(), scores.end());  // first maximum
  const auto index = static_cast<std::size_t>(it - scores.begin());
  return Incumbent{data.points[index], *it, index};
}

}  // namespace bopt
