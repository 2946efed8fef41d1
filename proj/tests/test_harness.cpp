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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bopt/error.hpp"
#include "bopt/harness.hpp"
#include "bopt/normal.hpp"

using namespace bopt;

namespace {

/// Latent f(x) = x on [0, 1].
SimulatedUser linear_user(double noise) {
  TestObjective f;
  f.name = "linear";
  f.bounds = Bounds::unit(1);
  f.evaluator = [](std::span<const double> x) { return x[0]; };
  return SimulatedUser{f, noise};
}

double win_rate(const SimulatedUser& u, double a, double b, int n) {
  std::mt19937_64 rng(12);
  int wins = 0;
  for (int i = 0; i < n; ++i) wins += choose(u, Point{a}, Point{b}, rng) ? 1 : 0;
  return static_cast<double>(wins) / n;
}

}  // namespace

TEST_CASE("built-in objectives carry grid-verified optima") {
  for (const std::string& name : builtin_objective_names()) {
    CAPTURE(name);
    const TestObjective f = builtin_objective(name);
    REQUIRE(f.known_optimum);
    const KnownOptimum grid = grid_optimum(f.evaluator, f.bounds, f.dim() == 1 ? 20001 : 401);
    CHECK(f.known_optimum->value >= grid.value - 1e-6);
    CHECK(f(f.known_optimum->location) == doctest::Approx(f.known_optimum->value).epsilon(1e-12));
    CHECK(f.bounds.contains(f.known_optimum->location));
  }
  CHECK_THROWS_AS(builtin_objective("nope"), Error);
}

TEST_CASE("negated Branin has its three global maxima near -0.398") {
  const TestObjective b = negated_branin();
  for (const Point& x : {Point{-std::numbers::pi, 12.275}, Point{std::numbers::pi, 2.275}, Point{9.42478, 2.475}})
    CHECK(b(x) == doctest::Approx(-0.397887).epsilon(1e-5));
}

TEST_CASE("grid_optimum on a known quadratic") {
  const KnownOptimum k = grid_optimum(
      [](std::span<const double> x) { return -(x[0] - 0.25) * (x[0] - 0.25) - x[1] * x[1]; },
      Bounds{{0.0, -1.0}, {1.0, 1.0}}, 5);
  CHECK(k.location == Point{0.25, 0.0});
  CHECK(k.value == 0.0);
}

TEST_CASE("simulated user win rates") {
  const SimulatedUser u = linear_user(0.05);
  CHECK(std::abs(win_rate(u, 0.4, 0.4, 10000) - 0.5) <= 0.02);
  const double margin = 3.0 * std::sqrt(2.0) * 0.05;
  CHECK(std::abs(win_rate(u, 0.2 + margin, 0.2, 10000) - normal_cdf(3.0)) <= 0.005);
  CHECK(std::abs(win_rate(u, 0.2 + 0.05, 0.2, 10000) - normal_cdf(0.05 / (std::sqrt(2.0) * 0.05))) <=
        0.02);

  const SimulatedUser sharp = linear_user(1e-12);
  CHECK(win_rate(sharp, 0.5001, 0.5, 1000) == 1.0);
  CHECK(win_rate(sharp, 0.5, 0.5001, 1000) == 0.0);

  CHECK(choose(u, Point{0.3}, Point{0.35}, 99) == choose(u, Point{0.3}, Point{0.35}, 99));
}

TEST_CASE("scalar benchmark metrics") {
  const TestObjective f = multimodal_1d();
  ScalarBenchmarkConfig c;
  c.iterations = 12;
  c.repetitions = 3;
  c.rng_seed = 4;
  for (ScalarMethod m : {ScalarMethod::EI, ScalarMethod::PI, ScalarMethod::UCB, ScalarMethod::Random}) {
    CAPTURE(to_string(m));
    c.method = m;
    std::size_t records = 0;
    c.on_record = [&](const TraceRecord&) { ++records; };
    const ScalarBenchmarkResult r = run_scalar_benchmark(f, c);
    CHECK(records == 36);
    REQUIRE(r.runs.size() == 3);
    CHECK(r.optimum == f.known_optimum->value);
    for (const ScalarRunMetrics& run : r.runs) {
      REQUIRE(run.best_trace.size() == 12);
      for (std::size_t t = 0; t < 12; ++t) {
        CHECK(run.regret_trace[t] >= 0.0);
        CHECK(run.gap_trace[t] >= 0.0);
        CHECK(run.gap_trace[t] <= 1.0);
        if (t > 0) CHECK(run.best_trace[t] >= run.best_trace[t - 1]);
      }
      // Seed design points score zero gap.
      CHECK(run.gap_trace[0] == 0.0);
      CHECK(run.gap_trace[1] == 0.0);
    }
  }
}

TEST_CASE("scalar benchmark is reproducible") {
  const TestObjective f = sphere_2d();
  ScalarBenchmarkConfig c;
  c.iterations = 8;
  c.repetitions = 2;
  c.rng_seed = 17;
  const auto a = run_scalar_benchmark(f, c);
  const auto b = run_scalar_benchmark(f, c);
  REQUIRE(a.runs.size() == b.runs.size());
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    CHECK(a.runs[i].best_trace == b.runs[i].best_trace);
    CHECK(a.runs[i].gap_trace == b.runs[i].gap_trace);
  }
  CHECK(a.mean_gap == b.mean_gap);

  c.iterations = 0;
  const auto zero = run_scalar_benchmark(f, c);
  CHECK(zero.mean_gap == 0.0);
}

TEST_CASE("preference benchmark: two items and a decisive user take one query") {
  auto trial = [](std::uint64_t seed) {
    PreferenceTrial t = sample_gallery_trial(1, 2, 1e-12, seed);
    return t;
  };
  PreferenceBenchmarkConfig c;
  c.target_tolerance = 0.0;
  c.max_queries = 1;
  c.repetitions = 20;
  c.kernel = KernelSpec::squared_exp(0.5);
  for (PairStrategy s : {PairStrategy::Random, PairStrategy::MaxVariance, PairStrategy::MaxEI}) {
    c.strategy = s;
    const PreferenceBenchmarkResult r = run_preference_benchmark(trial, c);
    REQUIRE(r.queries.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(r.queries[i] == 1);
      CHECK(r.reached[i]);
    }
    CHECK(r.mean == 1.0);
    CHECK(r.stddev == 0.0);
  }
}

TEST_CASE("gallery trials") {
  const PreferenceTrial t = sample_gallery_trial(2, 38, 0.05, 3);
  REQUIRE(t.candidates.size() == 38);
  double best = -1e300;
  for (const Point& c : t.candidates) {
    CHECK(Bounds::unit(2).contains(c));
    best = std::max(best, t.user.latent(c));
  }
  // The target is a gallery item, so the best item scores the maximum of 1.
  CHECK(best == doctest::Approx(1.0).epsilon(1e-12));
  const PreferenceTrial again = sample_gallery_trial(2, 38, 0.05, 3);
  CHECK(again.candidates == t.candidates);
  CHECK_THROWS_AS(sample_gallery_trial(2, 1, 0.05, 3), Error);
}

TEST_CASE("preference benchmark is reproducible and paired across strategies") {
  auto trial = [](std::uint64_t seed) { return sample_gallery_trial(2, 10, 0.05, seed); };
  PreferenceBenchmarkConfig c;
  c.target_tolerance = 0.0;
  c.max_queries = 30;
  c.repetitions = 5;
  c.rng_seed = 8;
  c.kernel = KernelSpec::squared_exp(0.8);
  const auto a = run_preference_benchmark(trial, c);
  const auto b = run_preference_benchmark(trial, c);
  CHECK(a.queries == b.queries);
  CHECK(a.mean == b.mean);
  for (std::size_t q : a.queries) {
    CHECK(q >= 1);
    CHECK(q <= 30);
  }

  std::vector<std::uint64_t> seen_a, seen_b;
  c.strategy = PairStrategy::Random;
  run_preference_benchmark([&](std::uint64_t s) { seen_a.push_back(s); return trial(s); }, c);
  c.strategy = PairStrategy::MaxVariance;
  run_preference_benchmark([&](std::uint64_t s) { seen_b.push_back(s); return trial(s); }, c);
  CHECK(seen_a == seen_b);
}
