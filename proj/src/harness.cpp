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

#include "bopt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "bopt/error.hpp"
#include "bopt/normal.hpp"

namespace bopt {

KnownOptimum grid_optimum(const Objective& objective, const Bounds& bounds, std::size_t per_dim) {
  bounds.validate();
  if (per_dim < 2) throw_invalid("grid needs at least two nodes per axis");
  const std::size_t d = bounds.dim();
  std::vector<std::size_t> idx(d, 0);
  Point x(d);
  KnownOptimum best{Point{}, -std::numeric_limits<double>::infinity()};
  for (;;) {
    for (std::size_t i = 0; i < d; ++i)
      x[i] = bounds.lower[i] + (bounds.upper[i] - bounds.lower[i]) * static_cast<double>(idx[i]) /
                                   static_cast<double>(per_dim - 1);
    const double v = objective(x);
    if (v > best.value) best = {x, v};
    std::size_t k = 0;
    while (k < d && ++idx[k] == per_dim) idx[k++] = 0;
    if (k == d) break;
  }
  return best;
}

namespace {

TestObjective with_grid(TestObjective objective, std::size_t per_dim) {
  objective.known_optimum = grid_optimum(objective.evaluator, objective.bounds, per_dim);
  return objective;
}

double gaussian_bump(double x, double center, double width) {
  const double u = (x - center) / width;
  return std::exp(-0.5 * u * u);
}

}  // namespace

TestObjective multimodal_1d() {
  TestObjective o;
  o.name = "multimodal1d";
  o.bounds = Bounds::unit(1);
  o.evaluator = [](std::span<const double> x) {
    return 0.7 * gaussian_bump(x[0], 0.25, 0.08) + 1.0 * gaussian_bump(x[0], 0.8, 0.05);
  };
  return with_grid(std::move(o), 100001);
}

TestObjective negated_branin() {
  TestObjective o;
  o.name = "branin";
  o.bounds = Bounds{{-5.0, 0.0}, {10.0, 15.0}};
  o.evaluator = [](std::span<const double> x) {
    constexpr double pi = std::numbers::pi;
    const double a = 1.0;
    const double b = 5.1 / (4.0 * pi * pi);
    const double c = 5.0 / pi;
    const double r = 6.0;
    const double s = 10.0;
    const double t = 1.0 / (8.0 * pi);
    const double u = x[1] - b * x[0] * x[0] + c * x[0] - r;
    return -(a * u * u + s * (1.0 - t) * std::cos(x[0]) + s);
  };
  return with_grid(std::move(o), 1501);
}

TestObjective sphere_2d() {
  TestObjective o;
  o.name = "sphere2d";
  o.bounds = Bounds::unit(2);
  o.evaluator = [](std::span<const double> x) {
    const double a = x[0] - 0.3;
    const double b = x[1] - 0.7;
    return -(a * a + b * b);
  };
  return with_grid(std::move(o), 1001);
}

TestObjective bump_2d() {
  TestObjective o;
  o.name = "bump2d";
  o.bounds = Bounds::unit(2);
  o.evaluator = [](std::span<const double> x) {
    return gaussian_bump(x[0], 0.72, 0.18) * gaussian_bump(x[1], 0.31, 0.18) +
           0.4 * gaussian_bump(x[0], 0.2, 0.2) * gaussian_bump(x[1], 0.8, 0.2);
  };
  return with_grid(std::move(o), 1001);
}

TestObjective target_similarity(const Point& target) {
  if (target.empty()) throw_invalid("target must have at least one coordinate", "target");
  TestObjective o;
  o.name = "target";
  o.bounds = Bounds::unit(target.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(target.size()));
  o.evaluator = [target, scale](std::span<const double> x) {
    double sq = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) sq += (x[i] - target[i]) * (x[i] - target[i]);
    return 1.0 - scale * std::sqrt(sq);
  };
  return with_grid(std::move(o), target.size() == 1 ? 10001 : 401);
}

SimulatedUser sample_target_user(std::size_t dim, double decision_noise, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  Point target(dim);
  for (double& t : target) t = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return SimulatedUser{target_similarity(target), decision_noise};
}

PreferenceTrial sample_gallery_trial(std::size_t dim, std::size_t pool_size, double decision_noise,
                                     std::uint64_t rng_seed) {
  if (pool_size < 2) throw_invalid("a gallery needs at least two items", "pool_size");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Point> pool(pool_size, Point(dim));
  for (Point& p : pool)
    for (double& v : p) v = unit(rng);
  const Point target = pool[std::uniform_int_distribution<std::size_t>(0, pool_size - 1)(rng)];
  return PreferenceTrial{SimulatedUser{target_similarity(target), decision_noise}, std::move(pool)};
}

std::vector<std::string> builtin_objective_names() {
  return {"multimodal1d", "branin", "sphere2d", "bump2d"};
}

TestObjective builtin_objective(const std::string& name) {
  if (name == "multimodal1d") return multimodal_1d();
  if (name == "branin") return negated_branin();
  if (name == "sphere2d") return sphere_2d();
  if (name == "bump2d") return bump_2d();
  throw Error(ErrorCode::NotFound, "unknown objective '" + name + "'", "objective");
}

// ---------------------------------------------------------------------------

bool choose(const SimulatedUser& user, std::span<const double> a, std::span<const double> b,
            std::mt19937_64& rng) {
  const double diff = user.latent(a) - user.latent(b);
  const double p = normal_cdf(diff / (std::numbers::sqrt2 * user.decision_noise));
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

bool choose(const SimulatedUser& user, std::span<const double> a, std::span<const double> b,
            std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  return choose(user, a, b, rng);
}

// ---------------------------------------------------------------------------

const char* to_string(ScalarMethod method) noexcept {
  switch (method) {
    case ScalarMethod::PI: return "pi";
    case ScalarMethod::EI: return "ei";
    case ScalarMethod::UCB: return "ucb";
    case ScalarMethod::Random: return "random";
  }
  return "unknown";
}

ScalarMethod scalar_method_from_string(const std::string& name) {
  if (name == "random") return ScalarMethod::Random;
  switch (acquisition_kind_from_string(name)) {
    case AcquisitionKind::PI: return ScalarMethod::PI;
    case AcquisitionKind::EI: return ScalarMethod::EI;
    case AcquisitionKind::UCB: return ScalarMethod::UCB;
  }
  return ScalarMethod::EI;
}

namespace {

std::uint64_t trial_seed(std::uint64_t seed, std::size_t repetition) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(repetition)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

KernelSpec default_kernel(const Bounds& bounds) {
  double width = 0.0;
  for (std::size_t i = 0; i < bounds.dim(); ++i) width += bounds.upper[i] - bounds.lower[i];
  return KernelSpec::squared_exp(0.25 * width / static_cast<double>(bounds.dim()));
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

ScalarBenchmarkResult run_scalar_benchmark(const TestObjective& objective,
                                           const ScalarBenchmarkConfig& config) {
  if (!objective.known_optimum) throw_invalid("objective has no known optimum");
  const double f_star = objective.known_optimum->value;

  ScalarBenchmarkResult result;
  result.optimum = f_star;
  for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t seed = trial_seed(config.rng_seed, rep);
    SessionConfig sc;
    sc.mode = SessionMode::Scalar;
    sc.bounds = objective.bounds;
    sc.kernel = config.kernel.value_or(default_kernel(objective.bounds));
    sc.fit_hyperparameters = config.fit_hyperparameters;
    sc.rng_seed = seed;
    sc.maximizer = config.maximizer;
    if (config.method != ScalarMethod::Random) {
      sc.acquisition.kind = config.method == ScalarMethod::PI   ? AcquisitionKind::PI
                            : config.method == ScalarMethod::EI ? AcquisitionKind::EI
                                                                : AcquisitionKind::UCB;
    }
    Session session(sc, "benchmark");
    const std::size_t n_seed = sc.seed_count();
    std::mt19937_64 rng(seed);

    ScalarRunMetrics run;
    double best = -std::numeric_limits<double>::infinity();
    double seed_best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 1; t <= config.iterations; ++t) {
      Point x;
      if (config.method == ScalarMethod::Random && t > n_seed) {
        x.resize(objective.dim());
        for (std::size_t i = 0; i < x.size(); ++i)
          x[i] = std::uniform_real_distribution<double>(objective.bounds.lower[i],
                                                        objective.bounds.upper[i])(rng);
      } else {
        x = session.propose();
      }
      const double y = objective(x);
      if (config.method == ScalarMethod::Random) {
        // Random search never consults the model; skip refitting cost.
        if (t <= n_seed) session.observe(x, y);
      } else {
        session.observe(x, y);
      }
      best = std::max(best, y);
      if (t <= n_seed) seed_best = best;

      double gap = 0.0;
      if (t > n_seed) {
        const double denom = f_star - seed_best;
        gap = denom <= 1e-12 ? 1.0 : std::clamp((best - seed_best) / denom, 0.0, 1.0);
      }
      const double regret = std::max(0.0, f_star - y);
      run.best_trace.push_back(best);
      run.regret_trace.push_back(regret);
      run.gap_trace.push_back(gap);
      run.cumulative_regret += regret;
      if (config.on_record) config.on_record(TraceRecord{rep, t, x, y, best, regret, gap});
    }
    run.final_gap = run.gap_trace.empty() ? 0.0 : run.gap_trace.back();
    result.runs.push_back(std::move(run));
  }

  result.mean_gap_trace.assign(config.iterations, 0.0);
  std::vector<double> finals;
  for (const auto& run : result.runs) {
    finals.push_back(run.final_gap);
    for (std::size_t t = 0; t < config.iterations; ++t) result.mean_gap_trace[t] += run.gap_trace[t];
  }
  for (double& g : result.mean_gap_trace) g /= static_cast<double>(std::max<std::size_t>(1, result.runs.size()));
  result.mean_gap = mean_of(finals);
  return result;
}

PreferenceBenchmarkResult run_preference_benchmark(const SimulatedUser& user,
                                                   const PreferenceBenchmarkConfig& config) {
  return run_preference_benchmark(
      [&user](std::uint64_t) { return PreferenceTrial{user, {}}; }, config);
}

PreferenceBenchmarkResult run_preference_benchmark(
    const std::function<SimulatedUser(std::uint64_t)>& make_user,
    const PreferenceBenchmarkConfig& config) {
  return run_preference_benchmark(
      [&make_user](std::uint64_t seed) { return PreferenceTrial{make_user(seed), {}}; }, config);
}

PreferenceBenchmarkResult run_preference_benchmark(
    const std::function<PreferenceTrial(std::uint64_t)>& make_trial,
    const PreferenceBenchmarkConfig& config) {
  PreferenceBenchmarkResult result;
  for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
    const std::uint64_t seed = trial_seed(config.rng_seed, rep);
    const PreferenceTrial trial = make_trial(seed ^ 0x9e3779b97f4a7c15ULL);
    const SimulatedUser& user = trial.user;
    if (!(user.decision_noise > 0.0)) throw_invalid("decision noise must be positive");
    double f_star = -std::numeric_limits<double>::infinity();
    if (trial.candidates.empty()) {
      if (!user.latent.known_optimum) throw_invalid("latent objective has no known optimum");
      f_star = user.latent.known_optimum->value;
    } else {
      for (const Point& c : trial.candidates) f_star = std::max(f_star, user.latent(c));
    }

    SessionConfig sc;
    sc.mode = SessionMode::Preference;
    sc.bounds = user.latent.bounds;
    sc.kernel = config.kernel.value_or(default_kernel(user.latent.bounds));
    sc.strategy = config.strategy;
    sc.pair_ei = config.pair_ei;
    sc.candidates = trial.candidates;
    sc.probit_noise = config.probit_noise;
    sc.acquisition.xi = config.xi;
    sc.fit_hyperparameters = false;
    sc.rng_seed = seed;
    sc.maximizer = config.maximizer;
    Session session(sc, "preference-benchmark");
    std::mt19937_64 rng(seed ^ 0x5deece66dULL);

    std::size_t n = config.max_queries;
    bool reached = false;
    for (std::size_t q = 1; q <= config.max_queries; ++q) {
      const auto [first, second] = session.select_pair();
      if (choose(user, first, second, rng)) session.record_preference(first, second);
      else session.record_preference(second, first);
      if (user.latent(session.best().location) >= f_star - config.target_tolerance) {
        n = q;
        reached = true;
        break;
      }
    }
    result.queries.push_back(n);
    result.reached.push_back(reached);
  }

  const double count = static_cast<double>(result.queries.size());
  if (count > 0) {
    double sum = 0.0;
    for (std::size_t q : result.queries) sum += static_cast<double>(q);
    result.mean = sum / count;
    double sq = 0.0;
    for (std::size_t q : result.queries) sq += (static_cast<double>(q) - result.mean) * (static_cast<double>(q) - result.mean);
    result.stddev = count > 1 ? std::sqrt(sq / (count - 1.0)) : 0.0;
  }
  return result;
}

}  // namespace bopt
