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
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bopt/direct.hpp"
#include "bopt/gp.hpp"
#include "bopt/session.hpp"

namespace bopt {

struct KnownOptimum {
  Point location;
  double value = 0.0;
};

struct TestObjective {
  std::string name;
  Bounds bounds;
  Objective evaluator;
  /// Filled by a dense-grid search, never typed in by hand.
  std::optional<KnownOptimum> known_optimum;

  std::size_t dim() const noexcept { return bounds.dim(); }
  double operator()(std::span<const double> x) const { return evaluator(x); }
};

/// Maximum over a regular grid with `per_dim` nodes per axis, endpoints
/// included.
KnownOptimum grid_optimum(const Objective& objective, const Bounds& bounds, std::size_t per_dim);

/// Two Gaussian bumps on [0, 1]; the taller one is narrow and sits away from
/// the seed design.
TestObjective multimodal_1d();
/// Negated Branin on [-5, 10] x [0, 15].
TestObjective negated_branin();
/// Negated squared distance to (0.3, 0.7) on [0, 1]^2.
TestObjective sphere_2d();
/// Smooth single-peak valuation on [0, 1]^2 used for simulated preference users.
TestObjective bump_2d();

std::vector<std::string> builtin_objective_names();
TestObjective builtin_objective(const std::string& name);

// ---------------------------------------------------------------------------

struct SimulatedUser {
  TestObjective latent;
  double decision_noise = 0.05;
};

/// Target-matching valuation on [0, 1]^d: 1 - |x - target| / sqrt(d), so
/// the user can always tell which of two items is closer to what they are
/// looking for.
TestObjective target_similarity(const Point& target);

/// User with a target drawn uniformly from the unit box.
SimulatedUser sample_target_user(std::size_t dim, double decision_noise, std::uint64_t rng_seed);

/// True if `a` wins: each item's utility is latent(x) + N(0, noise^2), so
/// P(a) = Phi((f(a) - f(b)) / (sqrt(2) noise)).
bool choose(const SimulatedUser& user, std::span<const double> a, std::span<const double> b,
            std::mt19937_64& rng);
bool choose(const SimulatedUser& user, std::span<const double> a, std::span<const double> b,
            std::uint64_t rng_seed);

// ---------------------------------------------------------------------------

enum class ScalarMethod { PI, EI, UCB, Random };

const char* to_string(ScalarMethod method) noexcept;
ScalarMethod scalar_method_from_string(const std::string& name);

struct TraceRecord {
  std::size_t repetition = 0;
  std::size_t iteration = 0;  // 1-based evaluation count
  Point x;
  double y = 0.0;
  double best = 0.0;
  double regret = 0.0;
  double gap = 0.0;
};

struct ScalarBenchmarkConfig {
  ScalarMethod method = ScalarMethod::EI;
  std::size_t iterations = 30;
  std::size_t repetitions = 20;
  std::uint64_t rng_seed = 0;
  bool fit_hyperparameters = true;
  std::optional<KernelSpec> kernel;
  MaximizerBudget maximizer;
  std::function<void(const TraceRecord&)> on_record;
};

struct ScalarRunMetrics {
  std::vector<double> best_trace;
  std::vector<double> regret_trace;
  std::vector<double> gap_trace;
  double final_gap = 0.0;
  double cumulative_regret = 0.0;
};

struct ScalarBenchmarkResult {
  std::vector<ScalarRunMetrics> runs;
  std::vector<double> mean_gap_trace;
  double mean_gap = 0.0;
  double optimum = 0.0;
};

/// Gap G = (best - seed_best) / (f* - seed_best), clamped to [0, 1]; the seed
/// best is the best of the space-filling seed design, shared by every method.
ScalarBenchmarkResult run_scalar_benchmark(const TestObjective& objective,
                                           const ScalarBenchmarkConfig& config);

struct PreferenceBenchmarkConfig {
  PairStrategy strategy = PairStrategy::MaxEI;
  double target_tolerance = 0.05;
  std::size_t max_queries = 60;
  std::size_t repetitions = 50;
  std::uint64_t rng_seed = 0;
  std::optional<KernelSpec> kernel;
  std::optional<double> probit_noise;
  /// EI margin for the MaxEI strategy; unset keeps the session default.
  std::optional<double> xi;
  PairEi pair_ei = PairEi::Marginal;
  MaximizerBudget maximizer{1000, 60, 1e-9};
};

/// One simulated trial: a user and, optionally, the finite gallery the
/// pairs are drawn from. With a gallery the target is the best gallery item.
struct PreferenceTrial {
  SimulatedUser user;
  std::vector<Point> candidates;
};

/// Gallery of `pool_size` uniform points in the unit box; the user looks
/// for one of them, chosen uniformly, under `target_similarity`.
PreferenceTrial sample_gallery_trial(std::size_t dim, std::size_t pool_size, double decision_noise,
                                     std::uint64_t rng_seed);

struct PreferenceBenchmarkResult {
  /// Queries until the incumbent's latent value came within tolerance of
  /// the latent maximum; `max_queries` for trials that never did.
  std::vector<std::size_t> queries;
  std::vector<bool> reached;
  double mean = 0.0;
  double stddev = 0.0;
};

PreferenceBenchmarkResult run_preference_benchmark(const SimulatedUser& user,
                                                   const PreferenceBenchmarkConfig& config);

/// Draws a fresh user per trial from `make_user(trial_seed)`. Strategies run
/// with the same `rng_seed` see the same sequence of users.
PreferenceBenchmarkResult run_preference_benchmark(
    const std::function<SimulatedUser(std::uint64_t)>& make_user,
    const PreferenceBenchmarkConfig& config);

PreferenceBenchmarkResult run_preference_benchmark(
    const std::function<PreferenceTrial(std::uint64_t)>& make_trial,
    const PreferenceBenchmarkConfig& config);

}  // namespace bopt
